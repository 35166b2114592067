#pragma once

#include <cstddef>

namespace adalign {

// Writes sin(x[i]) and cos(x[i]) for i in [0, n). Single pass, vectorizable;
// accuracy within a few ulp of the C library for |x| <= 1e6, exact C library
// fallback beyond that.
void sincos_array(const double* x, double* sin_out, double* cos_out, std::size_t n);

}  // namespace adalign
