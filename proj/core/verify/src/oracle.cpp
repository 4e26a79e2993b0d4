#include "visreg/verify/oracle.hpp"

namespace visreg::verify {

Matrix2D conv_brute_oracle(const Matrix2D& img, const RelKernel& ker) {
  const int k = ker.halfwidth();
  Matrix2D out(img.rows(), img.cols());
  for (int i = 0; i < img.rows(); ++i) {
    for (int j = 0; j < img.cols(); ++j) {
      double acc = 0.0;
      for (int di = -k; di <= k; ++di) {
        for (int dj = -k; dj <= k; ++dj) {
          const int p = i + di;
          const int q = j + dj;
          if (p >= 0 && p < img.rows() && q >= 0 && q < img.cols()) {
            acc += ker.at(di, dj) * img(p, q);
          }
        }
      }
      out(i, j) = acc;
    }
  }
  return out;
}

}  // namespace visreg::verify
