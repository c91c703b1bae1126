#include "biharm4/targets.h"

#include "biharm4/pointwise.h"
#include "biharm4/random_fields.h"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace biharm4 {

namespace {

double dot(const double* a, const double* b, int m) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += a[i] * b[i];
    return s;
}

double norm(const double* a, int m) { return std::sqrt(dot(a, a, m)); }

} // namespace

void Target::project(const double* y, double* out) const {
    if (kind == Kind::sphere) {
        const double r = norm(y, m);
        if (r < 0.5) throw OutsideTube("projection: point too close to the origin, |y| = " + std::to_string(r));
        for (int i = 0; i < m; ++i) out[i] = y[i] / r;
        return;
    }
    std::vector<double> x(y, y + m), g(m);
    double f = phi(x.data());
    if (std::abs(f) > tube_radius)
        throw OutsideTube("projection: level value " + std::to_string(f) + " outside tube " +
                          std::to_string(tube_radius));
    for (int it = 0; it < 50 && std::abs(f) > 1e-12; ++it) {
        phi_grad(x.data(), g.data());
        const double g2 = dot(g.data(), g.data(), m);
        if (g2 < 1e-14) throw OutsideTube("projection: degenerate level-set gradient");
        const double step = f / g2;
        for (int i = 0; i < m; ++i) x[i] -= step * g[i];
        f = phi(x.data());
    }
    if (std::abs(f) > 1e-12) throw OutsideTube("projection: level-set iteration stalled at " + std::to_string(f));
    std::memcpy(out, x.data(), m * sizeof(double));
}

void Target::normal(const double* y, double* out) const {
    if (kind == Kind::sphere) {
        const double r = norm(y, m);
        for (int i = 0; i < m; ++i) out[i] = y[i] / r;
        return;
    }
    std::vector<double> g(m);
    phi_grad(y, g.data());
    const double gn = norm(g.data(), m);
    for (int i = 0; i < m; ++i) out[i] = g[i] / gn;
}

double Target::level_error(const double* y) const {
    if (kind == Kind::sphere) return std::abs(norm(y, m) - 1.0);
    return std::abs(phi(y));
}

void Target::tangent_projector(const double* y, double* P) const {
    if (level_error(y) > on_tol)
        throw NotOnManifold("tangent_projector: point off the target by " + std::to_string(level_error(y)));
    std::vector<double> n(m);
    normal(y, n.data());
    for (int s = 0; s < m; ++s)
        for (int k = 0; k < m; ++k) P[s * m + k] = (s == k ? 1.0 : 0.0) - n[s] * n[k];
}

void Target::sff_unchecked(const double* y, const double* X, const double* Y, double* out) const {
    std::vector<double> n(m);
    normal(y, n.data());
    double c;
    if (kind == Kind::sphere) {
        // shape operator is the identity on the tangent space
        c = dot(X, Y, m) - dot(X, n.data(), m) * dot(Y, n.data(), m);
    } else {
        std::vector<double> g(m), H(m * m), v(m);
        phi_grad(y, g.data());
        const double gn = norm(g.data(), m);
        phi_hess(y, H.data());
        for (int s = 0; s < m; ++s) v[s] = dot(&H[s * m], X, m) / gn;
        const double vn = dot(v.data(), n.data(), m);
        c = 0.0;
        for (int s = 0; s < m; ++s) c += (v[s] - vn * n[s]) * Y[s];
    }
    for (int s = 0; s < m; ++s) out[s] = -c * n[s];
}

void Target::second_fundamental_form(const double* y, const double* X, const double* Y, double* out) const {
    if (level_error(y) > on_tol)
        throw NotOnManifold("second_fundamental_form: point off the target by " +
                            std::to_string(level_error(y)));
    std::vector<double> n(m);
    normal(y, n.data());
    const double tx = std::abs(dot(X, n.data(), m));
    const double ty = std::abs(dot(Y, n.data(), m));
    if (tx > on_tol * (1.0 + norm(X, m)) || ty > on_tol * (1.0 + norm(Y, m)))
        throw NotOnManifold("second_fundamental_form: argument not tangent");
    sff_unchecked(y, X, Y, out);
}

void Target::projector_derivative(const double* y, std::vector<std::vector<double>>& out) const {
    std::vector<double> n(m), M(m * m);
    normal(y, n.data());
    if (kind == Kind::sphere) {
        // M = dn = P on the sphere
        for (int s = 0; s < m; ++s)
            for (int k = 0; k < m; ++k) M[s * m + k] = (s == k ? 1.0 : 0.0) - n[s] * n[k];
    } else {
        std::vector<double> g(m), H(m * m);
        phi_grad(y, g.data());
        const double gn = norm(g.data(), m);
        phi_hess(y, H.data());
        // M = (I - n n^T) H / |grad phi|
        for (int s = 0; s < m; ++s)
            for (int k = 0; k < m; ++k) M[s * m + k] = H[s * m + k] / gn;
        for (int k = 0; k < m; ++k) {
            double c = 0.0;
            for (int s = 0; s < m; ++s) c += n[s] * M[s * m + k];
            for (int s = 0; s < m; ++s) M[s * m + k] -= c * n[s];
        }
    }
    out.assign(m, std::vector<double>(m * m));
    for (int j = 0; j < m; ++j)
        for (int s = 0; s < m; ++s)
            for (int k = 0; k < m; ++k)
                out[j][s * m + k] = -(M[s * m + j] * n[k] + n[s] * M[k * m + j]);
}

Target make_sphere_target(int m) {
    if (m < 2) throw ConfigError("sphere target needs ambient dimension >= 2");
    Target t;
    t.kind = Target::Kind::sphere;
    t.m = m;
    t.base.assign(m, 0.0);
    t.base[0] = 1.0;
    return t;
}

Target make_torus_of_revolution_target(double R0, double r0, double tube) {
    if (!(R0 > 0.0) || !(r0 > 0.0) || !(r0 < R0))
        throw ConfigError("torus of revolution needs 0 < minor_radius < major_radius");
    Target t;
    t.kind = Target::Kind::implicit;
    t.m = 3;
    t.tube_radius = tube;
    t.base = {R0 + r0, 0.0, 0.0};
    t.phi = [R0, r0](const double* y) {
        const double rho = std::sqrt(y[0] * y[0] + y[1] * y[1]);
        const double d = rho - R0;
        return d * d + y[2] * y[2] - r0 * r0;
    };
    t.phi_grad = [R0](const double* y, double* g) {
        const double rho = std::sqrt(y[0] * y[0] + y[1] * y[1]);
        const double f = 2.0 * (1.0 - R0 / rho);
        g[0] = f * y[0];
        g[1] = f * y[1];
        g[2] = 2.0 * y[2];
    };
    t.phi_hess = [R0](const double* y, double* H) {
        const double rho = std::sqrt(y[0] * y[0] + y[1] * y[1]);
        const double r3 = rho * rho * rho;
        H[0] = 2.0 - 2.0 * R0 * y[1] * y[1] / r3;
        H[4] = 2.0 - 2.0 * R0 * y[0] * y[0] / r3;
        H[1] = H[3] = 2.0 * R0 * y[0] * y[1] / r3;
        H[2] = H[5] = H[6] = H[7] = 0.0;
        H[8] = 2.0;
    };
    return t;
}

Field project_map(const Target& t, const Field& y) {
    y.require(t.m, Rank::none, "project_map");
    Field out(y.grid, t.m, Rank::none);
    const std::size_t np = y.points();
    std::vector<double> p(t.m), q(t.m);
    for (std::size_t idx = 0; idx < np; ++idx) {
        for (int c = 0; c < t.m; ++c) p[c] = y.comp(c)[idx];
        t.project(p.data(), q.data());
        for (int c = 0; c < t.m; ++c) out.comp(c)[idx] = q[c];
    }
    return out;
}

Field tangent_projector_field(const Target& t, const Field& u) {
    u.require(t.m, Rank::none, "tangent_projector_field");
    const int m = t.m;
    Field out(u.grid, m * m, Rank::none);
    const std::size_t np = u.points();
    std::vector<double> p(m), P(m * m);
    for (std::size_t idx = 0; idx < np; ++idx) {
        for (int c = 0; c < m; ++c) p[c] = u.comp(c)[idx];
        t.tangent_projector(p.data(), P.data());
        for (int c = 0; c < m * m; ++c) out.comp(c)[idx] = P[c];
    }
    return out;
}

Field sff_trace(const Target& t, const Field& u, const Field& du) {
    const int m = t.m;
    u.require(m, Rank::none, "sff_trace");
    du.require(m, Rank::one, "sff_trace");
    Field out(u.grid, m, Rank::none);
    const std::size_t np = u.points();
    std::vector<double> p(m), X(m), A(m);
    for (std::size_t idx = 0; idx < np; ++idx) {
        for (int c = 0; c < m; ++c) p[c] = u.comp(c)[idx];
        for (int l = 0; l < 4; ++l) {
            for (int c = 0; c < m; ++c) X[c] = du.at(c, l)[idx];
            t.sff_unchecked(p.data(), X.data(), X.data(), A.data());
            for (int c = 0; c < m; ++c) out.comp(c)[idx] += A[c];
        }
    }
    return out;
}

double max_level_error(const Target& t, const Field& u) {
    u.require(t.m, Rank::none, "max_level_error");
    const std::size_t np = u.points();
    std::vector<double> p(t.m);
    double worst = 0.0;
    for (std::size_t idx = 0; idx < np; ++idx) {
        for (int c = 0; c < t.m; ++c) p[c] = u.comp(c)[idx];
        worst = std::max(worst, t.level_error(p.data()));
    }
    return worst;
}

Field apply_matrix_map(const std::vector<double>& Q, const Field& u) {
    const int m = u.channels;
    if (int(Q.size()) != m * m || u.rank != Rank::none)
        throw ShapeMismatch("apply_matrix_map: expected m x m matrix and a map field");
    Field out(u.grid, m, Rank::none);
    const std::size_t np = u.points();
    for (int i = 0; i < m; ++i) {
        double* dst = out.comp(i);
        for (int j = 0; j < m; ++j) {
            const double* s = u.comp(j);
            const double q = Q[i * m + j];
            for (std::size_t p = 0; p < np; ++p) dst[p] += q * s[p];
        }
    }
    return out;
}

Field great_circle_map(const Grid& g, int m) {
    if (m < 2) throw ConfigError("great_circle_map needs ambient dimension >= 2");
    Field out(g, m, Rank::none);
    const int n = g.n;
    for (int i1 = 0; i1 < n; ++i1) {
        const double c = std::cos(i1 * g.h), s = std::sin(i1 * g.h);
        const std::size_t row = std::size_t(i1) * n * n * n;
        for (std::size_t r = 0; r < std::size_t(n) * n * n; ++r) {
            out.comp(0)[row + r] = c;
            out.comp(1)[row + r] = s;
        }
    }
    return out;
}

Field perturbed_map(const Target& t, const Grid& g, std::uint64_t seed, double amplitude, int kmax) {
    Field y(g, t.m, Rank::none);
    if (amplitude != 0.0) y = random_band_limited(g, t.m, Rank::none, seed, kmax, amplitude);
    const std::size_t np = y.points();
    for (int c = 0; c < t.m; ++c) {
        double* d = y.comp(c);
        const double b = t.base[c];
        for (std::size_t p = 0; p < np; ++p) d[p] += b;
    }
    return project_map(t, y);
}

Field bump_map(const Grid& g, int m, double width, double amplitude) {
    if (m < 2) throw ConfigError("bump_map needs ambient dimension >= 2");
    if (!(width > 0.0)) throw ConfigError("bump_map needs a positive width");
    Field y(g, m, Rank::none);
    const double inv2 = 1.0 / (width * width);
    for (std::size_t idx = 0; idx < y.points(); ++idx) {
        const auto ix = unflatten(g, idx);
        double c = 0.0;
        for (int a = 0; a < 4; ++a) c += std::cos(ix[a] * g.h - std::numbers::pi) - 1.0;
        const double bump = amplitude * std::exp(c * inv2);
        y.comp(0)[idx] = 1.0;
        y.comp(1)[idx] = bump;
    }
    Target s = make_sphere_target(m);
    return project_map(s, y);
}

Field harmonic_eigenmap(const Grid& g, const std::array<int, 4>& freq_a,
                        const std::array<int, 4>& freq_b, std::uint64_t rot_seed) {
    int la = 0, lb = 0, kinf = 0;
    for (int a = 0; a < 4; ++a) {
        la += freq_a[a] * freq_a[a];
        lb += freq_b[a] * freq_b[a];
        kinf = std::max({kinf, std::abs(freq_a[a]), std::abs(freq_b[a])});
    }
    if (la == 0 || la != lb)
        throw ConfigError("harmonic_eigenmap: frequency rows must be nonzero with |a|^2 = |b|^2");
    if (kinf >= g.n / 2)
        throw ConfigError("harmonic_eigenmap: frequency reaches the Nyquist index");

    const int m = 4;
    Field raw(g, m, Rank::none);
    const double inv = 1.0 / std::sqrt(2.0);
    for (std::size_t idx = 0; idx < raw.points(); ++idx) {
        const auto ix = unflatten(g, idx);
        double pa = 0.0, pb = 0.0;
        for (int a = 0; a < 4; ++a) {
            pa += freq_a[a] * ix[a] * g.h;
            pb += freq_b[a] * ix[a] * g.h;
        }
        raw.comp(0)[idx] = inv * std::cos(pa);
        raw.comp(1)[idx] = inv * std::sin(pa);
        raw.comp(2)[idx] = inv * std::cos(pb);
        raw.comp(3)[idx] = inv * std::sin(pb);
    }

    std::vector<double> S(m * m, 0.0), Q(m * m), work(3 * m * m);
    NormalDraw draw(rot_seed);
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
            const double v = 0.5 * draw();
            S[i * m + j] = v;
            S[j * m + i] = -v;
        }
    dense_expm(S.data(), Q.data(), m, work.data());
    return apply_matrix_map(Q, raw);
}

} // namespace biharm4
