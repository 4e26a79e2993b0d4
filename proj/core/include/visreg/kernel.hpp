#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "visreg/matrix.hpp"

namespace visreg {

/// Odd-sized square convolution kernel indexed relative to its center:
/// at(0,0) is the central element, offsets range over [-k, k].
class RelKernel {
public:
  explicit RelKernel(int halfwidth) : k_(halfwidth) {
    check_halfwidth(halfwidth);
    entries_.assign(static_cast<size_t>(side()) * side(), 0.0);
  }

  RelKernel(int halfwidth, std::vector<double> entries)
      : k_(halfwidth), entries_(std::move(entries)) {
    check_halfwidth(halfwidth);
    if (entries_.size() != static_cast<size_t>(side()) * side()) {
      throw std::invalid_argument("RelKernel: expected " +
                                  std::to_string(side() * side()) + " entries, got " +
                                  std::to_string(entries_.size()));
    }
  }

  /// Builds from an odd-sided square matrix; the matrix center becomes offset (0,0).
  static RelKernel from_matrix(const Matrix2D& m) {
    if (m.rows() != m.cols() || m.rows() % 2 == 0) {
      throw std::invalid_argument("RelKernel: matrix must be square with odd side, got " +
                                  std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
    return RelKernel(m.rows() / 2, std::vector<double>(m.values().begin(), m.values().end()));
  }

  int halfwidth() const { return k_; }
  int side() const { return 2 * k_ + 1; }

  double& at(int di, int dj) { return entries_[index(di, dj)]; }
  double at(int di, int dj) const { return entries_[index(di, dj)]; }

  std::span<const double> entries() const { return entries_; }

  bool operator==(const RelKernel&) const = default;

private:
  static void check_halfwidth(int k) {
    if (k < 0) throw std::invalid_argument("RelKernel: halfwidth must be non-negative");
  }

  size_t index(int di, int dj) const {
    return static_cast<size_t>(di + k_) * side() + (dj + k_);
  }

  int k_;
  std::vector<double> entries_;
};

/// Reflects the kernel horizontally and vertically: result(i,j) = input(-i,-j).
RelKernel flip(const RelKernel& ker);

/// 3x3 high-pass stencil with center 8 and all eight neighbors -1.
/// Its response to a constant region is zero; it is symmetric under flip.
RelKernel laplacian3();

}  // namespace visreg
