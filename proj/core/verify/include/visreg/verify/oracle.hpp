#pragma once

#include "visreg/kernel.hpp"
#include "visreg/matrix.hpp"

namespace visreg::verify {

/// Literal quadruple loop over output pixels and kernel offsets with explicit
/// bounds checks. Same contract as conv_same, kept deliberately independent of
/// it; used only by tests and the verification suites.
Matrix2D conv_brute_oracle(const Matrix2D& img, const RelKernel& ker);

}  // namespace visreg::verify
