#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cffl/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Cell-free massive MIMO federated learning simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string seeds_csv;
  bool quiet = false;

  const std::vector<std::string> scenarios = {
      "powalloc_compare", "theta_sweep", "antenna_sweep", "stopping_suite",
      "fl_end2end"};
  for (const std::string& name : scenarios) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON experiment config")
        ->required();
    sub->add_option("--out", out_dir, "output directory for CSV files")
        ->required();
    sub->add_option("--seeds", seeds_csv,
                    "comma-separated seed list overriding the config");
    sub->add_flag("--quiet", quiet, "suppress progress output");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string scenario = app.get_subcommands().front()->get_name();

  try {
    cffl::ExperimentConfig cfg = cffl::load_config(config_path);
    cfg.output_dir = out_dir;
    if (!seeds_csv.empty()) {
      cfg.seeds.clear();
      std::size_t pos = 0;
      while (pos < seeds_csv.size()) {
        std::size_t next = seeds_csv.find(',', pos);
        if (next == std::string::npos) next = seeds_csv.size();
        cfg.seeds.push_back(std::stoull(seeds_csv.substr(pos, next - pos)));
        pos = next + 1;
      }
    }
    if (cfg.seeds.empty()) {
      throw std::invalid_argument("seed list is empty");
    }
    return cffl::run_scenario(cfg, scenario, quiet);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
