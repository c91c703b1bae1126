#include "biharm4/gauge.h"

#include "biharm4/pointwise.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

namespace biharm4 {

namespace {

// out_l = M_l * v for a matrix-1-form M and map v.
Field form_times_map(const Field& M, const Field& v) {
    const int m = v.channels;
    M.require(m * m, Rank::one, "form_times_map");
    v.require(m, Rank::none, "form_times_map");
    Field out(v.grid, m, Rank::one);
    const std::size_t np = v.points();
    for (int s = 0; s < m; ++s)
        for (int l = 0; l < 4; ++l) {
            double* dst = out.at(s, l);
            for (int j = 0; j < m; ++j) {
                const double* a = M.at(s * m + j, l);
                const double* b = v.comp(j);
                for (std::size_t p = 0; p < np; ++p) dst[p] += a[p] * b[p];
            }
        }
    return out;
}

// Residual field of the gauge equation for A = I + Ahat:
//   grad(Lap A) + Lap(A) V - grad(A) w + A W - curl B.
Field gauge_eq_defect(const Field& Ahat, const Field& B, const RawPotentials& p) {
    const Field lapA = laplacian(Ahat);
    Field R = gradient(lapA);
    R = add(R, mat_times_form(lapA, p.V));
    R = sub(R, form_times_mat(gradient(Ahat), p.w));
    R = add(R, p.W);
    R = add(R, mat_times_form(Ahat, p.W));
    return sub(R, curl_2form(B));
}

// Iterate map for the A-equation: Lap^2 Ahat = div G(Ahat) with
// G = -(Lap(A) V - grad(A) w + A W) restricted to the non-identity part plus W.
Field picard_G(const Field& Ahat, const RawPotentials& p) {
    Field G = mat_times_form(laplacian(Ahat), p.V);
    G = sub(G, form_times_mat(gradient(Ahat), p.w));
    G = add(G, p.W);
    G = add(G, mat_times_form(Ahat, p.W));
    return scaled(G, -1.0);
}

// B capturing the curl-representable part of grad(Lap Ahat) - G.
Field slaved_B(const Field& Ahat, const Field& G) {
    const Field H = sub(gradient(laplacian(Ahat)), G);
    return hodge_decompose(H).beta;
}

void require_matrix_1form(const Field& f, const char* who) {
    int m = 1;
    while (m * m < f.channels) ++m;
    if (m * m != f.channels || f.rank != Rank::one)
        throw ShapeMismatch(std::string(who) + ": expected a matrix-1-form field");
}

} // namespace

Field solve_B_for_sphere(const Field& W) {
    require_matrix_1form(W, "solve_B_for_sphere");
    const double wn = l2_norm(W);
    for (int c = 0; c < W.comps(); ++c) {
        const double mean = std::abs(comp_mean(W, c));
        if (mean > 1e-12 * (1.0 + wn))
            throw NonZeroMean("solve_B_for_sphere: component " + std::to_string(c) +
                              " has mean " + std::to_string(mean));
    }
    const double dn = l2_norm(divergence(W));
    if (dn > 1e-6 * wn)
        throw NotDivergenceFree("solve_B_for_sphere: relative divergence " +
                                std::to_string(wn > 0 ? dn / wn : dn));
    if (wn == 0.0) return Field(W.grid, W.channels, Rank::two);
    return curl_1form(inv_laplacian(remove_mean(W)));
}

Field coulomb_gauge(const Field& omega) {
    const int m = ambient_dim_of_matrix(omega, "coulomb_gauge");
    const std::size_t np = omega.points();
    double worst = 0.0, amax = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j <= i; ++j) {
            const double* a = omega.at(i * m + j);
            const double* b = omega.at(j * m + i);
            for (std::size_t p = 0; p < np; ++p) {
                worst = std::max(worst, std::abs(a[p] + b[p]));
                amax = std::max(amax, std::abs(a[p]));
            }
        }
    if (worst > 1e-12 * (1.0 + amax))
        throw ShapeMismatch("coulomb_gauge: input is not so(m)-valued");
    for (int c = 0; c < omega.comps(); ++c) {
        const double mean = std::abs(comp_mean(omega, c));
        if (mean > 1e-12 * (1.0 + amax))
            throw NonZeroMean("coulomb_gauge: component " + std::to_string(c) +
                              " has mean " + std::to_string(mean));
    }
    return scaled(gradient(inv_laplacian(omega)), -1.0);
}

double gauge_smallness(const Field& Omega) {
    double grad2 = 0.0;
    for (int a = 0; a < 4; ++a) {
        const double nrm = l2_norm(derivative(Omega, a));
        grad2 += nrm * nrm;
    }
    const Field sq = pointwise_sqnorm(Omega);
    double quart = 0.0;
    const double* s = sq.at(0);
    for (std::size_t p = 0; p < Omega.points(); ++p) quart += s[p] * s[p];
    return grad2 + std::sqrt(quart * Omega.grid.volume_element);
}

UhlenbeckGauge uhlenbeck_gauge(const Field& Omega, double eps_gauge, int max_iter,
                               double tol_factor) {
    require_matrix_1form(Omega, "uhlenbeck_gauge");
    int m = 1;
    while (m * m < Omega.channels) ++m;
    const double small = gauge_smallness(Omega);
    if (small >= eps_gauge)
        throw NotSmallEnough("uhlenbeck_gauge: smallness functional " + std::to_string(small) +
                             " >= " + std::to_string(eps_gauge));

    UhlenbeckGauge g;
    g.U = make_matrix(Omega.grid, m);
    g.xi = make_matrix2form(Omega.grid, m);
    const double tol = tol_factor * std::max(l2_norm(Omega), 1.0);

    for (int it = 0; it <= max_iter; ++it) {
        const Field E = matrix_exp(g.U);
        const Field Einv = transpose_matrix(E); // U in so(m), e^U orthogonal
        Field defect = sub(Omega, mat_times_form(Einv, gradient(E)));
        defect = sub(defect, mat_times_form(Einv, form_times_mat(curl_2form(g.xi), E)));
        const double res = l2_norm(defect);
        g.history.push_back(res);
        g.residual = res;
        if (res <= tol) return g;
        const std::size_t h = g.history.size();
        if (h >= 4 && g.history[h - 4] < 1.1 * g.history[h - 3] &&
            g.history[h - 3] < 1.1 * g.history[h - 2] && g.history[h - 2] < 1.1 * res)
            throw NoConvergence("uhlenbeck_gauge: stalled at residual " + std::to_string(res));
        if (it == max_iter) break;

        // conjugate the defect back and absorb its exact/coexact parts
        const HodgeParts parts = hodge_decompose(mat_times_form(E, form_times_mat(defect, Einv)));
        g.U = add(g.U, parts.alpha);
        antisymmetrize(g.U);
        g.xi = add(g.xi, parts.beta);
        antisymmetrize(g.xi);
    }
    throw NoConvergence("uhlenbeck_gauge: no convergence after " + std::to_string(max_iter) +
                        " iterations, residual " + std::to_string(g.residual));
}

GaugeBuildResult build_gauge_pair(const PotentialSet& pots, double eps, double eps_max,
                                  double tol, int max_iter) {
    if (!(eps > 0.0)) throw ConfigError("build_gauge_pair: eps must be positive");
    if (eps > eps_max)
        throw NotSmallEnough("build_gauge_pair: eps " + std::to_string(eps) +
                             " exceeds the smallness threshold " + std::to_string(eps_max));
    RawPotentials raw = sigma_scaled(pots);
    const int dim = int(std::lround(std::sqrt(double(raw.w.channels))));
    const double combined = l2_norm(raw.V) + l2_norm(raw.w) + l2_norm(raw.W);

    GaugeBuildResult out;
    if (combined == 0.0) {
        out.pair.A = identity_matrix_field(raw.w.grid, dim);
        out.pair.B = Field(raw.w.grid, raw.w.channels, Rank::two);
        out.pair.min_abs_det = 1.0;
        out.scaled_pots = std::move(raw);
        return out;
    }
    const double sc = eps / combined;
    raw.V = scaled(raw.V, sc);
    raw.w = scaled(raw.w, sc);
    raw.W = scaled(raw.W, sc);

    Field Ahat = make_matrix(raw.w.grid, dim);
    Field B = slaved_B(Ahat, picard_G(Ahat, raw));
    const double accept = tol * (1.0 + eps);
    GaugePair& pair = out.pair;

    for (int it = 0; it <= max_iter; ++it) {
        const double res = l2_norm(gauge_eq_defect(Ahat, B, raw));
        pair.residual_history.push_back(res);
        pair.residual_gauge_eq = res;
        pair.iterations = it;
        if (res <= accept) break;
        const std::size_t h = pair.residual_history.size();
        if (h >= 4 && pair.residual_history[h - 4] < 1.1 * pair.residual_history[h - 3] &&
            pair.residual_history[h - 3] < 1.1 * pair.residual_history[h - 2] &&
            pair.residual_history[h - 2] < 1.1 * res)
            throw NoConvergence("build_gauge_pair: stalled at residual " + std::to_string(res));
        if (it == max_iter)
            throw NoConvergence("build_gauge_pair: no convergence after " +
                                std::to_string(max_iter) + " iterations");
        Ahat = inv_bilaplacian(divergence(picard_G(Ahat, raw)));
        B = slaved_B(Ahat, picard_G(Ahat, raw));
    }

    pair.A = add(identity_matrix_field(raw.w.grid, dim), Ahat);
    pair.B = std::move(B);
    pair.dist_to_SO = max_dist_to_SO(pair.A);
    pair.min_abs_det = min_abs_det(pair.A);
    if (pair.min_abs_det < 0.5)
        throw NoConvergence("build_gauge_pair: accepted pair lost invertibility, min |det A| = " +
                            std::to_string(pair.min_abs_det));
    out.scaled_pots = std::move(raw);
    return out;
}

namespace {

// W never enters the flux, only V and w do.
Field flux_impl(const Field& u, const Field& A, const Field& B, const Field& V,
                const Field& w) {
    const Field du = gradient(u);
    const Field lap = laplacian(u);
    const Field dA = gradient(A);
    const Field Vdu = contract_form_grad(V, du);

    Field J = gradient(mat_map(A, lap));                         // grad(A Lap u)
    axpy_inplace(J, -2.0, form_times_map(dA, lap));              // -2 grad A Lap u
    J = add(J, matrix_times_grad(laplacian(A), du));             // + Lap A grad u
    J = sub(J, matrix_times_grad(A, matrix_times_grad(w, du)));  // - A w grad u
    J = add(J, form_times_map(dA, Vdu));                         // + grad A (V.grad u)
    J = sub(J, matrix_times_grad(A, gradient(Vdu)));             // - A grad(V.grad u)
    J = sub(J, form2_times_grad(B, du));                         // - B . grad u
    return J;
}

} // namespace

Field assemble_flux(const Field& u, const Field& A, const Field& B, const RawPotentials& pots) {
    return flux_impl(u, A, B, pots.V, pots.w);
}

ConservedFlux conservation_flux(const Field& u, const GaugePair& pair, const RawPotentials& pots) {
    ConservedFlux out;
    out.J = assemble_flux(u, pair.A, pair.B, pots);
    out.divJ_norm = l2_norm(divergence(out.J));
    out.identity_defect =
        identity_residual(u, pair.A, pair.B, pots.V, pots.w, pots.W).r_total;
    return out;
}

IdentityResidual identity_residual(const Field& u, const Field& A, const Field& B,
                                   const Field& V, const Field& w, const Field& W) {
    const Field du = gradient(u);

    Field R_pde = bilaplacian(u);
    axpy_inplace(R_pde, -1.0, apply_rhs(u, V, w, W));

    const Field lapA = laplacian(A);
    Field R_gauge = gradient(lapA);
    R_gauge = add(R_gauge, mat_times_form(lapA, V));
    R_gauge = sub(R_gauge, form_times_mat(gradient(A), w));
    R_gauge = add(R_gauge, mat_times_form(A, W));
    R_gauge = sub(R_gauge, curl_2form(B));

    Field defect = divergence(flux_impl(u, A, B, V, w));
    defect = sub(defect, mat_map(A, R_pde));
    defect = sub(defect, contract_form_grad(R_gauge, du));

    IdentityResidual out;
    out.r_total = l2_norm(defect);
    out.r_pde = l2_norm(R_pde);
    out.r_gauge = l2_norm(R_gauge);
    return out;
}

double max_dist_to_SO(const Field& A) {
    const int m = ambient_dim_of_matrix(A, "max_dist_to_SO");
    const std::size_t np = A.points();
    Eigen::MatrixXd M(m, m);
    double worst = 0.0;
    for (std::size_t p = 0; p < np; ++p) {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) M(i, j) = A.at(i * m + j)[p];
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Eigen::MatrixXd R = svd.matrixU() * svd.matrixV().transpose();
        if (R.determinant() < 0.0) {
            Eigen::MatrixXd U = svd.matrixU();
            U.col(m - 1) *= -1.0;
            R = U * svd.matrixV().transpose();
        }
        worst = std::max(worst, (M - R).norm());
    }
    return worst;
}

double min_abs_det(const Field& A) {
    const int m = ambient_dim_of_matrix(A, "min_abs_det");
    const std::size_t np = A.points();
    Eigen::MatrixXd M(m, m);
    double best = 1e300;
    for (std::size_t p = 0; p < np; ++p) {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) M(i, j) = A.at(i * m + j)[p];
        best = std::min(best, std::abs(M.determinant()));
    }
    return best;
}

} // namespace biharm4
