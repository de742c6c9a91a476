#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace cffl {

/// Dense row-major matrix of doubles. Just enough linear storage for the
/// fading/estimation tables; not a linear-algebra type.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), v_(rows * cols, fill) {}

  double& operator()(std::size_t r, std::size_t c) {
    assert(r < rows_ && c < cols_);
    return v_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    assert(r < rows_ && c < cols_);
    return v_[r * cols_ + c];
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const std::vector<double>& data() const { return v_; }

  bool operator==(const Mat&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> v_;
};

}  // namespace cffl
