#pragma once

#include "visreg/kernel.hpp"
#include "visreg/matrix.hpp"

namespace visreg {

/// Same-size 2D convolution with relative kernel indexing:
///   out(i,j) = sum over offsets r with (i,j)+r in bounds of  ker(r) * img((i,j)+r).
/// Out-of-bounds pixels contribute nothing (implicit zero extension).
Matrix2D conv_same(const Matrix2D& img, const RelKernel& ker);

}  // namespace visreg
