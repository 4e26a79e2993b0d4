#pragma once

#include <vector>

#include "visreg/conv.hpp"
#include "visreg/kernel.hpp"
#include "visreg/matrix.hpp"

namespace visreg {

/// The weight slabs of the regularized layer: one 2D reshape per
/// (node, input channel) pair. All slabs share the same dimensions.
struct VRWeights {
  struct Slab {
    int node = 0;
    int channel = 0;
    Matrix2D values;
  };
  std::vector<Slab> slabs;

  bool empty() const { return slabs.empty(); }
};

enum class VLNorm { l1 = 1, l2 = 2 };

/// Squared-L2 smoothness penalty: sum of squares of the high-pass response conv_same(img, ker).
double vl2(const Matrix2D& img, const RelKernel& ker);

/// L1 smoothness penalty: sum of absolute values of the high-pass response.
double vl1(const Matrix2D& img, const RelKernel& ker);

/// Analytic gradient of vl2: 2 * conv_same(conv_same(img, ker), flip(ker)).
Matrix2D grad_vl2(const Matrix2D& img, const RelKernel& ker);

/// Subgradient of vl1: conv_same(sign(conv_same(img, ker)), flip(ker)),
/// with sign(0) = 0 (zero subgradient at kinks). Carries no leading factor;
/// any constant rescaling is absorbed by the regularizer weight.
Matrix2D grad_vl1(const Matrix2D& img, const RelKernel& ker);

/// Elementwise signum, sign(0) = 0.
Matrix2D sign_of(const Matrix2D& m);

/// Sum of the per-slab loss over every slab. Throws std::invalid_argument on
/// an empty slab list (a model with no regularized layer).
double vl_model(const VRWeights& w, const RelKernel& ker, VLNorm norm);

/// Per-slab gradients, same slab structure as the input. Weights outside the
/// regularized layer are absent here and so have zero gradient by construction.
VRWeights grad_vl_model(const VRWeights& w, const RelKernel& ker, VLNorm norm);

}  // namespace visreg
