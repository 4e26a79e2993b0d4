#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "visreg/kernel.hpp"
#include "visreg/visloss.hpp"

namespace visreg {

/// Row-major sparse matrix: per-row lists of (column, coefficient) with
/// strictly increasing columns and no explicitly stored zeros.
struct SparseMat {
  int n_rows = 0;
  int n_cols = 0;
  std::vector<std::vector<std::pair<int, double>>> rows;

  size_t nnz() const;
  std::vector<double> multiply(std::span<const double> x) const;
  std::vector<double> multiply_transpose(std::span<const double> y) const;
};

/// Reshape geometry of the regularized layer: `count` slabs of rows x cols.
struct SlabGeometry {
  int rows = 0;
  int cols = 0;
  int count = 0;
};

/// Flattens slabs in canonical order: slab-major (the VRWeights slab order),
/// row-major within each slab. This order defines the column space of the
/// matrix built by build_gamma.
std::vector<double> flatten(const VRWeights& w);

/// Builds the sparse matrix G with one row per response pixel of every slab's
/// convolution, so that vl_model(w, ker, l2) == ||G * flatten(w)||^2.
/// Rows of different slabs touch disjoint column blocks (block-diagonal), and
/// each row has at most (2k+1)^2 nonzeros.
SparseMat build_gamma(const SlabGeometry& geometry, const RelKernel& ker);

/// ||G w||^2 via sparse matvec then squared norm.
/// Throws std::invalid_argument on dimension mismatch.
double gamma_quadratic(const SparseMat& gamma, std::span<const double> w);

struct GammaStats {
  size_t nnz = 0;
  double density = 0.0;
};

GammaStats gamma_stats(const SparseMat& gamma);

/// Plain-text triplet export: "row col value" per line, in row-major order.
void write_triplets(const SparseMat& gamma, std::ostream& out);

}  // namespace visreg
