#include "visreg/visloss.hpp"

#include <cmath>
#include <stdexcept>

namespace visreg {

double vl2(const Matrix2D& img, const RelKernel& ker) {
  const Matrix2D resp = conv_same(img, ker);
  double acc = 0.0;
  for (double v : resp.values()) acc += v * v;
  return acc;
}

double vl1(const Matrix2D& img, const RelKernel& ker) {
  const Matrix2D resp = conv_same(img, ker);
  double acc = 0.0;
  for (double v : resp.values()) acc += std::abs(v);
  return acc;
}

Matrix2D sign_of(const Matrix2D& m) {
  Matrix2D out(m.rows(), m.cols());
  auto src = m.values();
  auto dst = out.values();
  for (size_t i = 0; i < src.size(); ++i) {
    dst[i] = src[i] > 0.0 ? 1.0 : (src[i] < 0.0 ? -1.0 : 0.0);
  }
  return out;
}

Matrix2D grad_vl2(const Matrix2D& img, const RelKernel& ker) {
  Matrix2D g = conv_same(conv_same(img, ker), flip(ker));
  for (double& v : g.values()) v *= 2.0;
  return g;
}

Matrix2D grad_vl1(const Matrix2D& img, const RelKernel& ker) {
  return conv_same(sign_of(conv_same(img, ker)), flip(ker));
}

namespace {

void require_slabs(const VRWeights& w) {
  if (w.empty()) {
    throw std::invalid_argument("vl_model: empty slab list (model has no VR-regularized layer)");
  }
}

}  // namespace

double vl_model(const VRWeights& w, const RelKernel& ker, VLNorm norm) {
  require_slabs(w);
  double acc = 0.0;
  for (const auto& slab : w.slabs) {
    acc += norm == VLNorm::l2 ? vl2(slab.values, ker) : vl1(slab.values, ker);
  }
  return acc;
}

VRWeights grad_vl_model(const VRWeights& w, const RelKernel& ker, VLNorm norm) {
  require_slabs(w);
  VRWeights out;
  out.slabs.reserve(w.slabs.size());
  for (const auto& slab : w.slabs) {
    Matrix2D g = norm == VLNorm::l2 ? grad_vl2(slab.values, ker) : grad_vl1(slab.values, ker);
    out.slabs.push_back({slab.node, slab.channel, std::move(g)});
  }
  return out;
}

}  // namespace visreg
