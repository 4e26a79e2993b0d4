#include "visreg/tikhonov.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

namespace visreg {

size_t SparseMat::nnz() const {
  size_t n = 0;
  for (const auto& row : rows) n += row.size();
  return n;
}

std::vector<double> SparseMat::multiply(std::span<const double> x) const {
  if (x.size() != static_cast<size_t>(n_cols)) {
    throw std::invalid_argument("SparseMat::multiply: vector length " +
                                std::to_string(x.size()) + " != n_cols " +
                                std::to_string(n_cols));
  }
  std::vector<double> y(n_rows, 0.0);
  for (int i = 0; i < n_rows; ++i) {
    double acc = 0.0;
    for (const auto& [col, val] : rows[i]) acc += val * x[col];
    y[i] = acc;
  }
  return y;
}

std::vector<double> SparseMat::multiply_transpose(std::span<const double> y) const {
  if (y.size() != static_cast<size_t>(n_rows)) {
    throw std::invalid_argument("SparseMat::multiply_transpose: vector length " +
                                std::to_string(y.size()) + " != n_rows " +
                                std::to_string(n_rows));
  }
  std::vector<double> x(n_cols, 0.0);
  for (int i = 0; i < n_rows; ++i) {
    for (const auto& [col, val] : rows[i]) x[col] += val * y[i];
  }
  return x;
}

std::vector<double> flatten(const VRWeights& w) {
  std::vector<double> out;
  size_t total = 0;
  for (const auto& slab : w.slabs) total += slab.values.size();
  out.reserve(total);
  for (const auto& slab : w.slabs) {
    auto vals = slab.values.values();
    out.insert(out.end(), vals.begin(), vals.end());
  }
  return out;
}

SparseMat build_gamma(const SlabGeometry& geometry, const RelKernel& ker) {
  if (geometry.rows < 1 || geometry.cols < 1 || geometry.count < 1) {
    throw std::invalid_argument("build_gamma: slab geometry must be at least one 1x1 slab");
  }
  const int n = geometry.rows;
  const int m = geometry.cols;
  const int k = ker.halfwidth();
  const int slab_size = n * m;
  const int p = geometry.count * slab_size;

  SparseMat gamma;
  gamma.n_rows = p;
  gamma.n_cols = p;
  gamma.rows.resize(p);

  for (int s = 0; s < geometry.count; ++s) {
    const int base = s * slab_size;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) {
        auto& row = gamma.rows[base + i * m + j];
        // Offsets in row-major order give strictly increasing columns.
        for (int di = std::max(-k, -i); di <= std::min(k, n - 1 - i); ++di) {
          for (int dj = std::max(-k, -j); dj <= std::min(k, m - 1 - j); ++dj) {
            const double a = ker.at(di, dj);
            if (a == 0.0) continue;
            row.emplace_back(base + (i + di) * m + (j + dj), a);
          }
        }
      }
    }
  }
  return gamma;
}

double gamma_quadratic(const SparseMat& gamma, std::span<const double> w) {
  const std::vector<double> y = gamma.multiply(w);
  double acc = 0.0;
  for (double v : y) acc += v * v;
  return acc;
}

GammaStats gamma_stats(const SparseMat& gamma) {
  GammaStats st;
  st.nnz = gamma.nnz();
  st.density = static_cast<double>(st.nnz) /
               (static_cast<double>(gamma.n_rows) * static_cast<double>(gamma.n_cols));
  return st;
}

void write_triplets(const SparseMat& gamma, std::ostream& out) {
  char buf[64];
  for (int i = 0; i < gamma.n_rows; ++i) {
    for (const auto& [col, val] : gamma.rows[i]) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g\n", i, col, val);
      out << buf;
    }
  }
}

}  // namespace visreg
