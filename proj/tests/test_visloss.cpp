#include <cmath>
#include <numeric>

#include "doctest.h"

#include "visreg/verify/fd.hpp"
#include "visreg/verify/oracle.hpp"
#include "visreg/visloss.hpp"

using namespace visreg;
using verify::central_diff;
using verify::norm_rel_err;
using verify::random_kernel;
using verify::random_matrix;

namespace {

std::vector<double> flat(const Matrix2D& m) {
  return {m.values().begin(), m.values().end()};
}

VRWeights slabs_of(std::vector<Matrix2D> ms) {
  VRWeights w;
  for (size_t i = 0; i < ms.size(); ++i) w.slabs.push_back({static_cast<int>(i), 0, ms[i]});
  return w;
}

}  // namespace

TEST_CASE("vl2 fixed values") {
  CHECK(vl2(Matrix2D(4, 4, 0.0), laplacian3()) == 0.0);

  Matrix2D impulse(3, 3, 0.0);
  impulse(1, 1) = 1.0;
  CHECK(vl2(impulse, laplacian3()) == doctest::Approx(72.0));  // 8^2 + 8 * 1

  // Constant image: the response is border-only; the value must match the
  // brute-force oracle's sum of squares.
  const Matrix2D constant(5, 5, 2.0);
  const Matrix2D resp = verify::conv_brute_oracle(constant, laplacian3());
  double expect = 0.0;
  for (double v : resp.values()) expect += v * v;
  CHECK(vl2(constant, laplacian3()) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("vl1 fixed values and absolute homogeneity") {
  CHECK(vl1(Matrix2D(3, 3, 0.0), laplacian3()) == 0.0);

  Matrix2D impulse(3, 3, 0.0);
  impulse(1, 1) = 1.0;
  CHECK(vl1(impulse, laplacian3()) == doctest::Approx(16.0));  // 8 + 8 * 1

  Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    const Matrix2D img = random_matrix(rng, 6, 6);
    const double c = rng.uniform(-3.0, 3.0);
    Matrix2D scaled(6, 6);
    for (int r = 0; r < 6; ++r)
      for (int q = 0; q < 6; ++q) scaled(r, q) = c * img(r, q);
    CHECK(vl1(scaled, laplacian3()) ==
          doctest::Approx(std::abs(c) * vl1(img, laplacian3())).epsilon(1e-10));
    CHECK(vl2(scaled, laplacian3()) ==
          doctest::Approx(c * c * vl2(img, laplacian3())).epsilon(1e-10));
  }
}

TEST_CASE("losses equal generic norms of the flattened response") {
  Rng rng(17);
  const Matrix2D img = random_matrix(rng, 7, 5);
  const RelKernel ker = random_kernel(rng, 1);
  const Matrix2D resp = conv_same(img, ker);
  const double n2 = std::inner_product(resp.values().begin(), resp.values().end(),
                                       resp.values().begin(), 0.0);
  double n1 = 0.0;
  for (double v : resp.values()) n1 += std::abs(v);
  CHECK(vl2(img, ker) == n2);
  CHECK(vl1(img, ker) == n1);
}

TEST_CASE("grad_vl2 matches central differences") {
  CHECK(grad_vl2(Matrix2D(4, 4, 0.0), laplacian3()) == Matrix2D(4, 4, 0.0));

  Rng rng(23);
  SUBCASE("8x8 high-pass kernel") {
    const Matrix2D img = random_matrix(rng, 8, 8);
    const auto fd = central_diff(
        [&](std::span<const double> x) {
          return vl2(Matrix2D(8, 8, {x.begin(), x.end()}), laplacian3());
        },
        flat(img), 1e-5);
    CHECK(norm_rel_err(grad_vl2(img, laplacian3()).values(), fd) <= 1e-6);
  }
  SUBCASE("6x6 asymmetric kernel exercises the flip") {
    const Matrix2D img = random_matrix(rng, 6, 6);
    const RelKernel ker = random_kernel(rng, 1);
    const auto fd = central_diff(
        [&](std::span<const double> x) {
          return vl2(Matrix2D(6, 6, {x.begin(), x.end()}), ker);
        },
        flat(img), 1e-5);
    CHECK(norm_rel_err(grad_vl2(img, ker).values(), fd) <= 1e-6);
  }
}

TEST_CASE("grad_vl1 sign conventions") {
  // sign(0) = 0: the all-zero image has an all-zero subgradient.
  CHECK(grad_vl1(Matrix2D(5, 5, 0.0), laplacian3()) == Matrix2D(5, 5, 0.0));

  // Positive scaling leaves the subgradient unchanged away from kinks.
  Rng rng(29);
  const Matrix2D img = random_matrix(rng, 8, 8);
  Matrix2D doubled(8, 8);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) doubled(r, c) = 2.0 * img(r, c);
  CHECK(grad_vl1(doubled, laplacian3()) == grad_vl1(img, laplacian3()));
}

TEST_CASE("grad_vl1 matches central differences away from kinks") {
  Rng rng(31);
  int done = 0;
  while (done < 5) {
    const Matrix2D img = random_matrix(rng, 8, 8);
    const Matrix2D resp = conv_same(img, laplacian3());
    double mn = 1e300;
    for (double v : resp.values()) mn = std::min(mn, std::abs(v));
    if (mn <= 1e-3) continue;
    const auto fd = central_diff(
        [&](std::span<const double> x) {
          return vl1(Matrix2D(8, 8, {x.begin(), x.end()}), laplacian3());
        },
        flat(img), 1e-6);
    CHECK(norm_rel_err(grad_vl1(img, laplacian3()).values(), fd) <= 1e-5);
    ++done;
  }
}

TEST_CASE("vl_model sums per-slab losses") {
  Rng rng(37);
  const RelKernel ker = laplacian3();
  const Matrix2D a = random_matrix(rng, 5, 5);

  CHECK(vl_model(slabs_of({a}), ker, VLNorm::l2) == vl2(a, ker));
  CHECK(vl_model(slabs_of({a}), ker, VLNorm::l1) == vl1(a, ker));
  CHECK(vl_model(slabs_of({a, a}), ker, VLNorm::l2) == 2.0 * vl2(a, ker));

  std::vector<Matrix2D> many;
  double expect = 0.0;
  for (int i = 0; i < 10; ++i) {
    many.push_back(random_matrix(rng, 4, 6));
    expect += vl2(many.back(), ker);
  }
  CHECK(vl_model(slabs_of(many), ker, VLNorm::l2) == expect);

  CHECK_THROWS_AS(vl_model(VRWeights{}, ker, VLNorm::l2), std::invalid_argument);
  CHECK_THROWS_AS(grad_vl_model(VRWeights{}, ker, VLNorm::l1), std::invalid_argument);
}

TEST_CASE("vl_model is additive over slab-set partitions") {
  Rng rng(41);
  const RelKernel ker = random_kernel(rng, 1);
  std::vector<Matrix2D> all;
  for (int i = 0; i < 8; ++i) all.push_back(random_matrix(rng, 5, 5));
  const std::vector<Matrix2D> first(all.begin(), all.begin() + 3);
  const std::vector<Matrix2D> rest(all.begin() + 3, all.end());
  CHECK(vl_model(slabs_of(all), ker, VLNorm::l1) ==
        vl_model(slabs_of(first), ker, VLNorm::l1) + vl_model(slabs_of(rest), ker, VLNorm::l1));
}

TEST_CASE("grad_vl_model applies per-slab gradients independently") {
  Rng rng(43);
  const RelKernel ker = random_kernel(rng, 1);
  std::vector<Matrix2D> ms = {random_matrix(rng, 6, 6), random_matrix(rng, 6, 6),
                              random_matrix(rng, 6, 6)};
  const VRWeights w = slabs_of(ms);
  const VRWeights g = grad_vl_model(w, ker, VLNorm::l2);
  REQUIRE(g.slabs.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(g.slabs[i].values == grad_vl2(ms[i], ker));
    CHECK(g.slabs[i].node == w.slabs[i].node);
  }

  // Full finite-difference check across the 3-slab instance.
  std::vector<double> x0;
  for (const auto& m : ms) {
    x0.insert(x0.end(), m.values().begin(), m.values().end());
  }
  const auto fd = central_diff(
      [&](std::span<const double> x) {
        std::vector<Matrix2D> cur;
        for (int s = 0; s < 3; ++s) {
          cur.emplace_back(6, 6, std::vector<double>(x.begin() + s * 36,
                                                     x.begin() + (s + 1) * 36));
        }
        return vl_model(slabs_of(cur), ker, VLNorm::l2);
      },
      x0, 1e-5);
  std::vector<double> analytic;
  for (const auto& slab : g.slabs) {
    analytic.insert(analytic.end(), slab.values.values().begin(), slab.values.values().end());
  }
  CHECK(norm_rel_err(analytic, fd) <= 1e-6);
}
