#include "biharm4/random_fields.h"

#include "fft_internal.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace biharm4 {

double NormalDraw::operator()() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // Box-Muller on 53-bit uniforms.
    const double u1 = 1.0 - double(eng_() >> 11) * 0x1p-53; // (0,1]
    const double u2 = double(eng_() >> 11) * 0x1p-53;       // [0,1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

namespace {

using cplx = std::complex<double>;

struct Mode {
    int k[4];
};

// Canonical half of the mode lattice, fixed lexicographic order. For k4 > 0
// the r2c layout stores only this half anyway; in the k4 = 0 plane we keep the
// representative whose first nonzero entry is positive.
std::vector<Mode> half_modes(int kmax) {
    std::vector<Mode> out;
    for (int k1 = -kmax; k1 <= kmax; ++k1)
        for (int k2 = -kmax; k2 <= kmax; ++k2)
            for (int k3 = -kmax; k3 <= kmax; ++k3)
                for (int k4 = 0; k4 <= kmax; ++k4) {
                    if (k1 == 0 && k2 == 0 && k3 == 0 && k4 == 0) continue;
                    if (k4 == 0) {
                        const int lead = k1 != 0 ? k1 : (k2 != 0 ? k2 : k3);
                        if (lead < 0) continue;
                    }
                    out.push_back(Mode{{k1, k2, k3, k4}});
                }
    return out;
}

std::size_t spec_index(const Grid& g, int k1, int k2, int k3, int k4) {
    const int n = g.n;
    const int i1 = k1 >= 0 ? k1 : k1 + n;
    const int i2 = k2 >= 0 ? k2 : k2 + n;
    const int i3 = k3 >= 0 ? k3 : k3 + n;
    return ((std::size_t(i1) * n + i2) * n + i3) * (n / 2 + 1) + k4;
}

} // namespace

Field random_band_limited(const Grid& g, int channels, Rank rank, std::uint64_t seed,
                          int kmax, double amplitude) {
    if (kmax == 0) kmax = g.n / 4;
    if (kmax < 1 || kmax > g.n / 2 - 1)
        throw ConfigError("random_band_limited: kmax must be in [1, n/2-1]");
    Field out(g, channels, rank);
    NormalDraw draw(seed);
    const auto modes = half_modes(kmax);
    std::vector<cplx> spec(detail::complex_count(g));
    // Each stored half mode contributes pointwise variance (2 decay)^2; scale
    // so one channel has pointwise standard deviation `amplitude` exactly.
    double var_sum = 0.0;
    for (const Mode& mo : modes) {
        const double kk = double(mo.k[0] * mo.k[0] + mo.k[1] * mo.k[1] + mo.k[2] * mo.k[2] +
                                 mo.k[3] * mo.k[3]);
        var_sum += 4.0 / (kk * kk * kk * kk);
    }
    const double scale =
        amplitude / std::sqrt(var_sum) * double(g.points()); // n^4 undoes the inverse FFT
    for (int c = 0; c < out.comps(); ++c) {
        std::fill(spec.begin(), spec.end(), cplx(0.0, 0.0));
        for (const Mode& mo : modes) {
            const double a = draw(), b = draw();
            const double kk = double(mo.k[0] * mo.k[0] + mo.k[1] * mo.k[1] +
                                     mo.k[2] * mo.k[2] + mo.k[3] * mo.k[3]);
            const double decay = 1.0 / (kk * kk); // |k|^-4
            const cplx coeff = cplx(a, b) * (decay * scale);
            spec[spec_index(g, mo.k[0], mo.k[1], mo.k[2], mo.k[3])] += coeff;
            if (mo.k[3] == 0)
                spec[spec_index(g, -mo.k[0], -mo.k[1], -mo.k[2], 0)] += std::conj(coeff);
        }
        detail::bwd_fft(g, spec.data(), out.comp(c));
    }
    return out;
}

namespace {

Field mirror_antisymmetric(Field&& f, int m, const Field& upper, Rank rank) {
    const int rc = rank_comps(rank);
    const std::size_t np = f.points();
    int u = 0;
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j, ++u)
            for (int s = 0; s < rc; ++s) {
                const double* src = upper.at(u, s);
                double* pij = f.at(i * m + j, s);
                double* pji = f.at(j * m + i, s);
                for (std::size_t p = 0; p < np; ++p) {
                    pij[p] = src[p];
                    pji[p] = -src[p];
                }
            }
    return std::move(f);
}

} // namespace

Field random_so_matrix(const Grid& g, int m, std::uint64_t seed, int kmax, double amplitude) {
    Field upper = random_band_limited(g, m * (m - 1) / 2, Rank::none, seed, kmax, amplitude);
    return mirror_antisymmetric(Field(g, m * m, Rank::none), m, upper, Rank::none);
}

Field random_so_2form(const Grid& g, int m, std::uint64_t seed, int kmax, double amplitude) {
    Field upper(g, m * (m - 1) / 2, Rank::two);
    {
        Field tmp = random_band_limited(g, m * (m - 1) / 2 * 6, Rank::none, seed, kmax, amplitude);
        upper.data = std::move(tmp.data);
    }
    return mirror_antisymmetric(Field(g, m * m, Rank::two), m, upper, Rank::two);
}

} // namespace biharm4
