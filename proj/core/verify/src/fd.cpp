#include "visreg/verify/fd.hpp"

#include <algorithm>
#include <cmath>

namespace visreg::verify {

std::vector<double> central_diff(const std::function<double(std::span<const double>)>& f,
                                 std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double fp = f(x);
    x[i] = saved - h;
    const double fm = f(x);
    x[i] = saved;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double norm_rel_err(std::span<const double> a, std::span<const double> b, double floor) {
  return max_abs_diff(a, b) / std::max({max_abs(a), max_abs(b), floor});
}

Matrix2D random_matrix(Rng& rng, int rows, int cols, double lo, double hi) {
  Matrix2D m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

RelKernel random_kernel(Rng& rng, int halfwidth, double lo, double hi) {
  RelKernel k(halfwidth);
  for (int di = -halfwidth; di <= halfwidth; ++di) {
    for (int dj = -halfwidth; dj <= halfwidth; ++dj) {
      k.at(di, dj) = rng.uniform(lo, hi);
    }
  }
  return k;
}

}  // namespace visreg::verify
