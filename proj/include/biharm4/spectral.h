#pragma once

//==============================================================================
// spectral.h
// Exact differential operators on the 4-torus via FFT (FFTW, r2c layout).
// Conventions, fixed here once:
//   - forward transform unnormalized, inverse divided by n^4;
//   - wavenumbers k_a = i_a for i_a <= n/2, else i_a - n;
//   - odd-order derivative factors treat the Nyquist mode k = n/2 as 0;
//   - (curl C)_{kl} = d_k C_l - d_l C_k           (1-form -> 2-form, k<l stored)
//   - (curl B)_k   = sum_l d_l B_{lk}             (2-form -> 1-form)
//   - (dB)_{ikl}   = d_i B_{kl} + d_k B_{li} + d_l B_{ik}
// With these, curl o curl = lap - grad o div on 1-forms and div o curl = 0.
//==============================================================================

#include "biharm4/grid.h"

namespace biharm4 {

// Caps FFT worker threads for plans created after the call; existing plans
// keep their thread count. Returns the previous cap. k < 1 is a ConfigError.
int set_fft_threads(int k);

// axis is 0-based: axis 0 differentiates along x1, ... axis 3 along x4.
Field derivative(const Field& f, int axis);
Field laplacian(const Field& f);
Field bilaplacian(const Field& f);

// Zero-mean inverses; throw NonZeroMean if any component has |mean| > 1e-12 * rms.
Field inv_laplacian(const Field& f);
Field inv_bilaplacian(const Field& f);

// (I + tau * lap^2)^{-1} f, tau > 0.
Field helmholtz_step_solve(const Field& f, double tau);

// rank none -> rank one (per channel), and back.
Field gradient(const Field& f);
Field divergence(const Field& v);

Field curl_1form(const Field& c);  // rank one  -> rank two
Field curl_2form(const Field& b);  // rank two  -> rank one
Field d_2form(const Field& b);     // rank two  -> rank three

struct HodgeParts {
    Field exact;    // grad(alpha)
    Field coexact;  // curl(beta) in the 2-form sense
    Field harmonic; // constant modes
    Field alpha;    // rank none potential
    Field beta;     // rank two potential
};

HodgeParts hodge_decompose(const Field& v); // v of rank one

// Quadrature-weighted norms: ||f||_2^2 = h^4 * sum over points and components.
double l2_norm(const Field& f);
double linf_norm(const Field& f);
double l2_inner(const Field& a, const Field& b);
double comp_mean(const Field& f, int c);

// Copy with every component's mean subtracted.
Field remove_mean(const Field& f);

// Pointwise algebra (shapes must match).
Field add(const Field& a, const Field& b);
Field sub(const Field& a, const Field& b);
Field scaled(const Field& a, double s);
void axpy_inplace(Field& y, double a, const Field& x); // y += a*x

} // namespace biharm4
