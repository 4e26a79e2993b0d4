#include "doctest.h"

#include "visreg/conv.hpp"
#include "visreg/rng.hpp"
#include "visreg/verify/fd.hpp"
#include "visreg/verify/oracle.hpp"

using namespace visreg;
using verify::conv_brute_oracle;
using verify::random_kernel;
using verify::random_matrix;

TEST_CASE("Matrix2D rejects degenerate dimensions") {
  CHECK_THROWS_AS(Matrix2D(0, 3), std::invalid_argument);
  CHECK_THROWS_AS(Matrix2D(3, 0), std::invalid_argument);
  CHECK_THROWS_AS(Matrix2D(2, 2, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("RelKernel layout and center indexing") {
  const RelKernel lap = laplacian3();
  CHECK(lap.halfwidth() == 1);
  CHECK(lap.at(0, 0) == 8.0);
  CHECK(lap.at(-1, -1) == -1.0);
  CHECK(lap.at(1, 1) == -1.0);
  CHECK_THROWS_AS(RelKernel(1, std::vector<double>{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(RelKernel::from_matrix(Matrix2D(2, 2)), std::invalid_argument);
}

TEST_CASE("conv_same on an all-zero image is all zero") {
  const Matrix2D img(3, 3, 0.0);
  const Matrix2D out = conv_same(img, laplacian3());
  for (double v : out.values()) CHECK(v == 0.0);
}

TEST_CASE("impulse at the center reproduces the (flip-symmetric) high-pass kernel") {
  Matrix2D img(3, 3, 0.0);
  img(1, 1) = 1.0;
  const Matrix2D out = conv_same(img, laplacian3());
  const RelKernel lap = laplacian3();
  for (int di = -1; di <= 1; ++di)
    for (int dj = -1; dj <= 1; ++dj) CHECK(out(1 + di, 1 + dj) == lap.at(di, dj));
}

TEST_CASE("all-ones image: interior cancels, borders match the brute-force oracle") {
  const Matrix2D img(3, 3, 1.0);
  const Matrix2D out = conv_same(img, laplacian3());
  CHECK(out(1, 1) == 0.0);
  CHECK(out(0, 0) == 5.0);  // 8 - 3 in-bounds neighbors
  const Matrix2D oracle = conv_brute_oracle(img, laplacian3());
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) CHECK(out(r, c) == oracle(r, c));
}

TEST_CASE("flip is index negation and an involution") {
  CHECK(flip(laplacian3()) == laplacian3());

  RelKernel k(1);
  k.at(-1, -1) = 1.0;
  const RelKernel f = flip(k);
  CHECK(f.at(1, 1) == 1.0);
  CHECK(f.at(-1, -1) == 0.0);

  Rng rng(99);
  for (int i = 0; i < 20; ++i) {
    const RelKernel r = random_kernel(rng, 2);
    CHECK(flip(flip(r)) == r);
  }
}

TEST_CASE("conv_same matches the brute-force oracle on random instances") {
  Rng rng(7);
  SUBCASE("7x9 image, 3x3 kernel") {
    const Matrix2D img = random_matrix(rng, 7, 9);
    const RelKernel ker = random_kernel(rng, 1);
    const Matrix2D a = conv_same(img, ker);
    const Matrix2D b = conv_brute_oracle(img, ker);
    CHECK(verify::max_abs_diff(a.values(), b.values()) <= 1e-12);
  }
  SUBCASE("5x5 image, 5x5 kernel") {
    const Matrix2D img = random_matrix(rng, 5, 5);
    const RelKernel ker = random_kernel(rng, 2);
    const Matrix2D a = conv_same(img, ker);
    const Matrix2D b = conv_brute_oracle(img, ker);
    CHECK(verify::max_abs_diff(a.values(), b.values()) <= 1e-12);
  }
  SUBCASE("integer-valued inputs agree exactly") {
    Matrix2D img(4, 6, 0.0);
    for (double& v : img.values()) v = rng.uniform_int(7) - 3;
    RelKernel ker(1);
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj) ker.at(di, dj) = rng.uniform_int(5) - 2;
    const Matrix2D a = conv_same(img, ker);
    const Matrix2D b = conv_brute_oracle(img, ker);
    CHECK(verify::max_abs_diff(a.values(), b.values()) == 0.0);
  }
}

TEST_CASE("conv_same is linear") {
  Rng rng(21);
  for (int i = 0; i < 25; ++i) {
    const int rows = 2 + rng.uniform_int(10);
    const int cols = 2 + rng.uniform_int(10);
    const Matrix2D i1 = random_matrix(rng, rows, cols);
    const Matrix2D i2 = random_matrix(rng, rows, cols);
    const RelKernel ker = random_kernel(rng, 1);
    const double a = rng.uniform(-2.0, 2.0);
    const double b = rng.uniform(-2.0, 2.0);
    Matrix2D mix(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) mix(r, c) = a * i1(r, c) + b * i2(r, c);
    const Matrix2D lhs = conv_same(mix, ker);
    const Matrix2D c1 = conv_same(i1, ker);
    const Matrix2D c2 = conv_same(i2, ker);
    Matrix2D rhs(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) rhs(r, c) = a * c1(r, c) + b * c2(r, c);
    CHECK(verify::norm_rel_err(lhs.values(), rhs.values()) <= 1e-10);
  }
}

TEST_CASE("interior impulse response places the flipped kernel") {
  Rng rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    const int k = 1 + rng.uniform_int(2);
    const int side = 2 * k + 3 + rng.uniform_int(5);
    const int si = k + rng.uniform_int(side - 2 * k);
    const int sj = k + rng.uniform_int(side - 2 * k);
    const RelKernel ker = random_kernel(rng, k);
    Matrix2D img(side, side, 0.0);
    img(si, sj) = 1.0;
    const Matrix2D out = conv_same(img, ker);
    for (int di = -k; di <= k; ++di)
      for (int dj = -k; dj <= k; ++dj) CHECK(out(si + di, sj + dj) == ker.at(-di, -dj));
  }
}

TEST_CASE("high-pass response of a constant image vanishes in the interior") {
  const Matrix2D img(6, 7, 3.25);
  const Matrix2D out = conv_same(img, laplacian3());
  for (int r = 1; r < 5; ++r)
    for (int c = 1; c < 6; ++c) CHECK(out(r, c) == doctest::Approx(0.0).epsilon(1e-14));
}
