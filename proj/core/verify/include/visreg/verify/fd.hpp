#pragma once

#include <functional>
#include <span>
#include <vector>

#include "visreg/kernel.hpp"
#include "visreg/matrix.hpp"
#include "visreg/rng.hpp"

namespace visreg::verify {

/// Central finite differences of a scalar function of a flat vector.
std::vector<double> central_diff(const std::function<double(std::span<const double>)>& f,
                                 std::vector<double> x, double h);

double max_abs(std::span<const double> v);
double max_abs_diff(std::span<const double> a, std::span<const double> b);

/// Max-norm relative error: ||a - b||_inf / max(||a||_inf, ||b||_inf, floor).
double norm_rel_err(std::span<const double> a, std::span<const double> b,
                    double floor = 1e-30);

Matrix2D random_matrix(Rng& rng, int rows, int cols, double lo = -1.0, double hi = 1.0);
RelKernel random_kernel(Rng& rng, int halfwidth, double lo = -1.0, double hi = 1.0);

}  // namespace visreg::verify
