#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace visreg {

/// Dense real-valued 2D array, row-major, double precision.
/// Serves as image, kernel response, or reshaped weight slab.
class Matrix2D {
public:
  Matrix2D(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols) {
    check_dims(rows, cols);
    data_.assign(static_cast<size_t>(rows) * cols, fill);
  }

  Matrix2D(int rows, int cols, std::vector<double> values)
      : rows_(rows), cols_(cols), data_(std::move(values)) {
    check_dims(rows, cols);
    if (data_.size() != static_cast<size_t>(rows) * cols) {
      throw std::invalid_argument(
          "Matrix2D: value count " + std::to_string(data_.size()) +
          " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
    }
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }

  double& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

  bool in_bounds(int r, int c) const {
    return r >= 0 && r < rows_ && c >= 0 && c < cols_;
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool operator==(const Matrix2D&) const = default;

private:
  static void check_dims(int rows, int cols) {
    if (rows < 1 || cols < 1) {
      throw std::invalid_argument("Matrix2D: dimensions must be at least 1x1, got " +
                                  std::to_string(rows) + "x" + std::to_string(cols));
    }
  }

  int rows_;
  int cols_;
  std::vector<double> data_;
};

}  // namespace visreg
