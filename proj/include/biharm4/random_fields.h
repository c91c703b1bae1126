#pragma once

//==============================================================================
// random_fields.h
// Seeded band-limited random fields. Coefficients are drawn per Fourier mode
// with |k|^-4 decay and a hard cutoff |k|_inf <= kmax, in an order that does
// not depend on the grid size, so one (seed, kmax) pair denotes a single
// continuum field across grid refinement. The overall scale is normalized so
// each channel has pointwise standard deviation `amplitude`.
//==============================================================================

#include "biharm4/grid.h"

#include <cstdint>
#include <random>

namespace biharm4 {

// Portable normal draws: std::normal_distribution is implementation-defined,
// which would break byte-identical reports across standard libraries.
class NormalDraw {
  public:
    explicit NormalDraw(std::uint64_t seed) : eng_(seed) {}
    double operator()();

  private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Mean-free random field; kmax defaults to n/4 when kmax == 0.
// Requires kmax <= n/2 - 1 so every mode is below the Nyquist frequency.
Field random_band_limited(const Grid& g, int channels, Rank rank, std::uint64_t seed,
                          int kmax = 0, double amplitude = 1.0);

// Antisymmetric (so(m)-valued) variants: strictly-upper channels are drawn,
// the rest mirrored, so X + X^T = 0 holds exactly.
Field random_so_matrix(const Grid& g, int m, std::uint64_t seed, int kmax = 0,
                       double amplitude = 1.0);
Field random_so_2form(const Grid& g, int m, std::uint64_t seed, int kmax = 0,
                      double amplitude = 1.0);

} // namespace biharm4
