#pragma once

// Internal FFT plumbing shared by spectral.cpp and random_fields.cpp.
// Not installed; everything public goes through spectral.h.

#include "biharm4/grid.h"

#include <complex>
#include <cstddef>

namespace biharm4 {
namespace detail {

std::size_t complex_count(const Grid& g);

// r2c forward, unnormalized.
void fwd_fft(const Grid& g, const double* in, std::complex<double>* out);

// c2r inverse, divides by n^4. Input buffer is copied, not destroyed.
void bwd_fft(const Grid& g, const std::complex<double>* in, double* out);

} // namespace detail
} // namespace biharm4
