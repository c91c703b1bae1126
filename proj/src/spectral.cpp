#include "biharm4/spectral.h"

#include "fft_internal.h"

#include <fftw3.h>

#include <atomic>
#include <cmath>
#include <complex>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>

namespace biharm4 {
namespace {

using cplx = std::complex<double>;

std::atomic<int> g_fft_threads{1};

void apply_thread_cap() {
#ifdef BIHARM4_HAVE_FFTW_THREADS
    static std::once_flag init;
    std::call_once(init, [] { fftw_init_threads(); });
    fftw_plan_with_nthreads(g_fft_threads.load());
#endif
}

// One r2c/c2r plan pair per grid size, with dedicated aligned buffers.
// fftw planning is not thread safe and the buffers are shared, so every
// transform takes the per-size lock; kernels are sequential anyway.
struct PlanSet {
    int n = 0;
    std::size_t nc = 0; // complex count n*n*n*(n/2+1)
    double* rbuf = nullptr;
    fftw_complex* cbuf = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    std::mutex mtx;

    explicit PlanSet(int n_) : n(n_) {
        const std::size_t nr = std::size_t(n) * n * n * n;
        nc = std::size_t(n) * n * n * (n / 2 + 1);
        rbuf = fftw_alloc_real(nr);
        cbuf = fftw_alloc_complex(nc);
        apply_thread_cap();
        const int dims[4] = {n, n, n, n};
        // FFTW_ESTIMATE keeps planning deterministic (no runtime measurement).
        fwd = fftw_plan_dft_r2c(4, dims, rbuf, cbuf, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_c2r(4, dims, cbuf, rbuf, FFTW_ESTIMATE);
    }
    ~PlanSet() {
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
        fftw_free(rbuf);
        fftw_free(cbuf);
    }
};

PlanSet& plans_for(int n) {
    static std::mutex reg_mtx;
    static std::map<int, std::unique_ptr<PlanSet>> reg;
    std::scoped_lock lk(reg_mtx);
    auto& p = reg[n];
    if (!p) p = std::make_unique<PlanSet>(n);
    return *p;
}

// Visit every retained mode; k4 runs over 0..n/2 only (r2c).
template <class F>
void for_each_mode(int n, F&& f) {
    std::size_t idx = 0;
    const int h = n / 2;
    for (int i1 = 0; i1 < n; ++i1) {
        const int k1 = i1 <= h ? i1 : i1 - n;
        for (int i2 = 0; i2 < n; ++i2) {
            const int k2 = i2 <= h ? i2 : i2 - n;
            for (int i3 = 0; i3 < n; ++i3) {
                const int k3 = i3 <= h ? i3 : i3 - n;
                for (int k4 = 0; k4 <= h; ++k4) f(idx++, k1, k2, k3, k4);
            }
        }
    }
}

using detail::bwd_fft;
using detail::complex_count;
using detail::fwd_fft;

// Apply a diagonal Fourier multiplier to every component.
template <class Sym>
Field apply_symbol(const Field& f, Sym&& sym) {
    Field out(f.grid, f.channels, f.rank);
    std::vector<cplx> spec(complex_count(f.grid));
    const int nyq = f.grid.n / 2;
    for (int c = 0; c < f.comps(); ++c) {
        fwd_fft(f.grid, f.comp(c), spec.data());
        for_each_mode(f.grid.n, [&](std::size_t i, int k1, int k2, int k3, int k4) {
            spec[i] *= sym(k1, k2, k3, k4, nyq);
        });
        bwd_fft(f.grid, spec.data(), out.comp(c));
    }
    return out;
}

void check_zero_mean(const Field& f, const char* who) {
    const std::size_t np = f.points();
    for (int c = 0; c < f.comps(); ++c) {
        const double* v = f.comp(c);
        double s = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < np; ++i) { s += v[i]; s2 += v[i] * v[i]; }
        const double mean = std::abs(s) / double(np);
        const double rms = std::sqrt(s2 / double(np));
        if (mean > 1e-12 * rms + 1e-300)
            throw NonZeroMean(std::string(who) + ": component " + std::to_string(c) +
                              " has nonzero mean " + std::to_string(mean));
    }
}

int ksq(int k1, int k2, int k3, int k4) { return k1 * k1 + k2 * k2 + k3 * k3 + k4 * k4; }

} // namespace

namespace detail {

std::size_t complex_count(const Grid& g) {
    return std::size_t(g.n) * g.n * g.n * (g.n / 2 + 1);
}

void fwd_fft(const Grid& g, const double* in, std::complex<double>* out) {
    PlanSet& p = plans_for(g.n);
    std::scoped_lock lk(p.mtx);
    std::memcpy(p.rbuf, in, g.points() * sizeof(double));
    fftw_execute(p.fwd);
    std::memcpy(out, p.cbuf, p.nc * sizeof(cplx));
}

void bwd_fft(const Grid& g, const std::complex<double>* in, double* out) {
    PlanSet& p = plans_for(g.n);
    std::scoped_lock lk(p.mtx);
    std::memcpy(p.cbuf, in, p.nc * sizeof(cplx));
    fftw_execute(p.bwd);
    const double scale = 1.0 / double(g.points());
    const std::size_t nr = g.points();
    for (std::size_t i = 0; i < nr; ++i) out[i] = p.rbuf[i] * scale;
}

} // namespace detail

int set_fft_threads(int k) {
    if (k < 1) throw ConfigError("set_fft_threads: thread count must be >= 1");
    return g_fft_threads.exchange(k);
}

Field derivative(const Field& f, int axis) {
    if (axis < 0 || axis > 3) throw ShapeMismatch("derivative: axis out of range");
    return apply_symbol(f, [axis](int k1, int k2, int k3, int k4, int nyq) -> cplx {
        const int k[4] = {k1, k2, k3, k4};
        const int ka = std::abs(k[axis]) == nyq ? 0 : k[axis];
        return cplx(0.0, double(ka));
    });
}

Field laplacian(const Field& f) {
    return apply_symbol(f, [](int k1, int k2, int k3, int k4, int) -> cplx {
        return cplx(-double(ksq(k1, k2, k3, k4)), 0.0);
    });
}

Field bilaplacian(const Field& f) {
    return apply_symbol(f, [](int k1, int k2, int k3, int k4, int) -> cplx {
        const double q = double(ksq(k1, k2, k3, k4));
        return cplx(q * q, 0.0);
    });
}

Field inv_laplacian(const Field& f) {
    check_zero_mean(f, "inv_laplacian");
    return apply_symbol(f, [](int k1, int k2, int k3, int k4, int) -> cplx {
        const int q = ksq(k1, k2, k3, k4);
        return q == 0 ? cplx(0.0, 0.0) : cplx(-1.0 / double(q), 0.0);
    });
}

Field inv_bilaplacian(const Field& f) {
    check_zero_mean(f, "inv_bilaplacian");
    return apply_symbol(f, [](int k1, int k2, int k3, int k4, int) -> cplx {
        const double q = double(ksq(k1, k2, k3, k4));
        return q == 0.0 ? cplx(0.0, 0.0) : cplx(1.0 / (q * q), 0.0);
    });
}

Field helmholtz_step_solve(const Field& f, double tau) {
    if (!(tau > 0.0)) throw ConfigError("helmholtz_step_solve: tau must be positive");
    return apply_symbol(f, [tau](int k1, int k2, int k3, int k4, int) -> cplx {
        const double q = double(ksq(k1, k2, k3, k4));
        return cplx(1.0 / (1.0 + tau * q * q), 0.0);
    });
}

Field gradient(const Field& f) {
    if (f.rank != Rank::none) throw ShapeMismatch("gradient: expects a rank-none field");
    Field out(f.grid, f.channels, Rank::one);
    std::vector<cplx> spec(complex_count(f.grid)), ds(complex_count(f.grid));
    const int nyq = f.grid.n / 2;
    for (int ch = 0; ch < f.channels; ++ch) {
        fwd_fft(f.grid, f.at(ch), spec.data());
        for (int a = 0; a < 4; ++a) {
            for_each_mode(f.grid.n, [&](std::size_t i, int k1, int k2, int k3, int k4) {
                const int k[4] = {k1, k2, k3, k4};
                const int ka = std::abs(k[a]) == nyq ? 0 : k[a];
                ds[i] = spec[i] * cplx(0.0, double(ka));
            });
            bwd_fft(f.grid, ds.data(), out.at(ch, a));
        }
    }
    return out;
}

Field divergence(const Field& v) {
    if (v.rank != Rank::one) throw ShapeMismatch("divergence: expects a rank-one field");
    Field out(v.grid, v.channels, Rank::none);
    std::vector<cplx> acc(complex_count(v.grid)), spec(complex_count(v.grid));
    const int nyq = v.grid.n / 2;
    for (int ch = 0; ch < v.channels; ++ch) {
        std::fill(acc.begin(), acc.end(), cplx(0.0, 0.0));
        for (int a = 0; a < 4; ++a) {
            fwd_fft(v.grid, v.at(ch, a), spec.data());
            for_each_mode(v.grid.n, [&](std::size_t i, int k1, int k2, int k3, int k4) {
                const int k[4] = {k1, k2, k3, k4};
                const int ka = std::abs(k[a]) == nyq ? 0 : k[a];
                acc[i] += spec[i] * cplx(0.0, double(ka));
            });
        }
        bwd_fft(v.grid, acc.data(), out.at(ch));
    }
    return out;
}

Field curl_1form(const Field& c) {
    if (c.rank != Rank::one) throw ShapeMismatch("curl_1form: expects a rank-one field");
    Field out(c.grid, c.channels, Rank::two);
    // (curl C)_{kl} = d_k C_l - d_l C_k, stored for k<l
    std::vector<Field> d(4);
    for (int a = 0; a < 4; ++a) d[a] = derivative(c, a);
    const std::size_t np = c.points();
    for (int ch = 0; ch < c.channels; ++ch)
        for (int k = 0; k < 4; ++k)
            for (int l = k + 1; l < 4; ++l) {
                double* dst = out.at(ch, pair_index(k, l));
                const double* dkcl = d[k].at(ch, l);
                const double* dlck = d[l].at(ch, k);
                for (std::size_t i = 0; i < np; ++i) dst[i] = dkcl[i] - dlck[i];
            }
    return out;
}

Field curl_2form(const Field& b) {
    if (b.rank != Rank::two) throw ShapeMismatch("curl_2form: expects a rank-two field");
    Field out(b.grid, b.channels, Rank::one);
    // (curl B)_k = sum_l d_l B_{lk}, B_{lk} = -B_{kl} for l>k
    for (int l = 0; l < 4; ++l) {
        Field slice(b.grid, b.channels, Rank::none);
        for (int k = 0; k < 4; ++k) {
            if (k == l) continue;
            const std::size_t np = b.points();
            for (int ch = 0; ch < b.channels; ++ch) {
                const double sgn = pair_sign(l, k);
                const double* src = b.at(ch, pair_index(std::min(l, k), std::max(l, k)));
                double* dst = slice.at(ch);
                std::memcpy(dst, src, np * sizeof(double));
                if (sgn < 0)
                    for (std::size_t i = 0; i < np; ++i) dst[i] = -dst[i];
            }
            Field dd = derivative(slice, l);
            const std::size_t npts = b.points();
            for (int ch = 0; ch < b.channels; ++ch) {
                double* dst = out.at(ch, k);
                const double* src = dd.at(ch);
                for (std::size_t i = 0; i < npts; ++i) dst[i] += src[i];
            }
        }
    }
    return out;
}

Field d_2form(const Field& b) {
    if (b.rank != Rank::two) throw ShapeMismatch("d_2form: expects a rank-two field");
    Field out(b.grid, b.channels, Rank::three);
    std::vector<Field> d(4); // d[a] = derivative of all components along axis a
    for (int a = 0; a < 4; ++a) d[a] = derivative(b, a);
    static constexpr int triples[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
    const std::size_t np = b.points();
    auto bcomp = [&](const Field& src, int ch, int k, int l) {
        return std::pair<const double*, double>(
            src.at(ch, pair_index(std::min(k, l), std::max(k, l))), pair_sign(k, l));
    };
    for (int t = 0; t < 4; ++t) {
        const int i = triples[t][0], k = triples[t][1], l = triples[t][2];
        for (int ch = 0; ch < b.channels; ++ch) {
            double* dst = out.at(ch, t);
            auto [bkl, s1] = bcomp(d[i], ch, k, l);
            auto [bli, s2] = bcomp(d[k], ch, l, i);
            auto [bik, s3] = bcomp(d[l], ch, i, k);
            for (std::size_t p = 0; p < np; ++p) dst[p] = s1 * bkl[p] + s2 * bli[p] + s3 * bik[p];
        }
    }
    return out;
}

HodgeParts hodge_decompose(const Field& v) {
    if (v.rank != Rank::one) throw ShapeMismatch("hodge_decompose: expects a rank-one field");
    HodgeParts parts;
    parts.alpha = inv_laplacian(divergence(v)); // div v is mean-free by construction
    parts.exact = gradient(parts.alpha);
    parts.harmonic = Field(v.grid, v.channels, Rank::one);
    const std::size_t np = v.points();
    for (int c = 0; c < v.comps(); ++c) {
        double s = 0.0;
        const double* src = v.comp(c);
        for (std::size_t i = 0; i < np; ++i) s += src[i];
        const double mean = s / double(np);
        double* dst = parts.harmonic.comp(c);
        for (std::size_t i = 0; i < np; ++i) dst[i] = mean;
    }
    parts.coexact = sub(sub(v, parts.exact), parts.harmonic);
    // mean-free by construction; the subtraction roundoff would trip the
    // solver gate whenever the coexact part is much smaller than v
    parts.beta = curl_1form(inv_laplacian(remove_mean(parts.coexact)));
    return parts;
}

double l2_norm(const Field& f) {
    double s = 0.0;
    for (double x : f.data) s += x * x;
    return std::sqrt(s * f.grid.volume_element);
}

double linf_norm(const Field& f) {
    double s = 0.0;
    for (double x : f.data) s = std::max(s, std::abs(x));
    return s;
}

double l2_inner(const Field& a, const Field& b) {
    if (a.data.size() != b.data.size()) throw ShapeMismatch("l2_inner: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s * a.grid.volume_element;
}

double comp_mean(const Field& f, int c) {
    const double* v = f.comp(c);
    double s = 0.0;
    for (std::size_t i = 0; i < f.points(); ++i) s += v[i];
    return s / double(f.points());
}

Field remove_mean(const Field& f) {
    Field out = f;
    const std::size_t np = f.points();
    for (int c = 0; c < f.comps(); ++c) {
        const double mean = comp_mean(f, c);
        double* v = out.comp(c);
        for (std::size_t i = 0; i < np; ++i) v[i] -= mean;
    }
    return out;
}

Field add(const Field& a, const Field& b) {
    if (a.data.size() != b.data.size()) throw ShapeMismatch("add: size mismatch");
    Field out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

Field sub(const Field& a, const Field& b) {
    if (a.data.size() != b.data.size()) throw ShapeMismatch("sub: size mismatch");
    Field out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

Field scaled(const Field& a, double s) {
    Field out = a;
    for (double& x : out.data) x *= s;
    return out;
}

void axpy_inplace(Field& y, double a, const Field& x) {
    if (y.data.size() != x.data.size()) throw ShapeMismatch("axpy: size mismatch");
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += a * x.data[i];
}

} // namespace biharm4
