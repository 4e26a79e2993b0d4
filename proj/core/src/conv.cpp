#include "visreg/conv.hpp"

#include <algorithm>

namespace visreg {

RelKernel flip(const RelKernel& ker) {
  const int k = ker.halfwidth();
  RelKernel out(k);
  for (int di = -k; di <= k; ++di)
    for (int dj = -k; dj <= k; ++dj)
      out.at(di, dj) = ker.at(-di, -dj);
  return out;
}

RelKernel laplacian3() {
  return RelKernel(1, {-1, -1, -1, -1, 8, -1, -1, -1, -1});
}

Matrix2D conv_same(const Matrix2D& img, const RelKernel& ker) {
  const int n = img.rows();
  const int m = img.cols();
  const int k = ker.halfwidth();
  Matrix2D out(n, m);
  for (int i = 0; i < n; ++i) {
    const int di_lo = std::max(-k, -i);
    const int di_hi = std::min(k, n - 1 - i);
    for (int j = 0; j < m; ++j) {
      const int dj_lo = std::max(-k, -j);
      const int dj_hi = std::min(k, m - 1 - j);
      double acc = 0.0;
      for (int di = di_lo; di <= di_hi; ++di) {
        for (int dj = dj_lo; dj <= dj_hi; ++dj) {
          acc += ker.at(di, dj) * img(i + di, j + dj);
        }
      }
      out(i, j) = acc;
    }
  }
  return out;
}

}  // namespace visreg
