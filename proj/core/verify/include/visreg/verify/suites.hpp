#pragma once

#include <functional>
#include <string>
#include <vector>

#include "visreg/kernel.hpp"
#include "visreg/verify/fd.hpp"
#include "visreg/verify/oracle.hpp"

namespace visreg::verify {

struct SuiteResult {
  std::string name;
  bool pass = false;
  double max_err = 0.0;
  double tolerance = 0.0;
  int checks = 0;
  double seconds = 0.0;
  std::string detail;
};

/// conv_same against the brute-force oracle: 200 random instances, absolute.
SuiteResult conv_oracle_suite(uint64_t seed);

/// conv(a*I1 + b*I2) == a*conv(I1) + b*conv(I2), relative.
SuiteResult conv_linearity_suite(uint64_t seed);

/// An interior impulse reproduces the flipped kernel around itself, exactly.
SuiteResult conv_impulse_suite(uint64_t seed);

/// Analytic squared-response gradient vs. central differences (h = 1e-5) on
/// 100 images per shape in {8x8, 16x16} x kernels {high-pass 3x3, random 3x3,
/// random 5x5}.
SuiteResult vl2_gradient_suite(uint64_t seed);

/// L1-response subgradient vs. central differences (h = 1e-6), instances
/// filtered so every response pixel stays clear of the kink (|r| > 1e-3).
SuiteResult vl1_gradient_suite(uint64_t seed);

/// Full composite-loss gradient on a small dense network (all regularizer
/// weights nonzero, no dropout) vs. central differences over every parameter.
SuiteResult model_gradient_suite(uint64_t seed);

/// ||G w||^2 equals the summed per-slab squared-response loss on 50 random
/// geometries, and nnz(G) stays within rows * (2k+1)^2 on every instance.
SuiteResult tikhonov_value_suite(uint64_t seed);

using FlipFn = std::function<RelKernel(const RelKernel&)>;

/// 2 G^T G w against the double-convolution gradient (both the production
/// path and one recomputed through flip_fn; a sign error in the flip makes
/// this suite fail on asymmetric kernels).
SuiteResult tikhonov_gradient_suite(uint64_t seed, const FlipFn& flip_fn = nullptr);

std::vector<SuiteResult> run_all_suites(uint64_t seed);

}  // namespace visreg::verify
