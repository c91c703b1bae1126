#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <biharm4/errors.h>
#include <biharm4/gauge.h>
#include <biharm4/pointwise.h>
#include <biharm4/random_fields.h>
#include <biharm4/spectral.h>
#include <biharm4/targets.h>

#include <cmath>
#include <cstddef>

using namespace biharm4;

namespace {

// cos(x1) times a fixed so(3) generator, placed in the given 1-form slot
Field cos_x1_so3(const Grid& g, int slot) {
    Field W(g, 9, Rank::one);
    for (std::size_t p = 0; p < g.points(); ++p) {
        const auto ix = unflatten(g, p);
        const double v = 0.7 * std::cos(ix[0] * g.h);
        W.at(0 * 3 + 1, slot)[p] = v;
        W.at(1 * 3 + 0, slot)[p] = -v;
    }
    return W;
}

double gauge_defect_norm(const Field& A, const Field& B, const RawPotentials& pots) {
    Field lhs = gradient(laplacian(A));
    lhs = add(lhs, mat_times_form(laplacian(A), pots.V));
    lhs = sub(lhs, form_times_mat(gradient(A), pots.w));
    lhs = add(lhs, mat_times_form(A, pots.W));
    return l2_norm(sub(lhs, curl_2form(B)));
}

} // namespace

TEST_CASE("curl solve: cosine input has a sine 2-form potential") {
    Grid g = make_grid(8);
    Field W = cos_x1_so3(g, 1); // W_2 = cos(x1) M, divergence-free
    Field B = solve_B_for_sphere(W);

    // expected: B_{12} = sin(x1) M, all other pairs zero
    double worst = 0.0;
    for (std::size_t p = 0; p < g.points(); ++p) {
        const auto ix = unflatten(g, p);
        const double v = 0.7 * std::sin(ix[0] * g.h);
        worst = std::max(worst, std::abs(B.at(0 * 3 + 1, 0)[p] - v));
        worst = std::max(worst, std::abs(B.at(1 * 3 + 0, 0)[p] + v));
    }
    CHECK(worst < 1e-12);
    for (int s = 1; s < 6; ++s) {
        CHECK(std::abs(B.at(0 * 3 + 1, s)[0]) < 1e-13);
    }

    CHECK(l2_norm(sub(curl_2form(B), W)) < 1e-11);
    CHECK(l2_norm(d_2form(B)) < 1e-11);       // closed
    for (int c = 0; c < B.comps(); ++c) {
        double mean = 0.0;
        const double* d = B.data.data() + std::size_t(c) * B.points();
        for (std::size_t p = 0; p < B.points(); ++p) mean += d[p];
        CHECK(std::abs(mean / double(B.points())) < 1e-13);
    }
}

TEST_CASE("curl solve gates: mean and divergence preconditions") {
    Grid g = make_grid(8);
    Field bad_mean(g, 9, Rank::one);
    for (std::size_t p = 0; p < g.points(); ++p) {
        bad_mean.at(0 * 3 + 1, 0)[p] = 0.5;
        bad_mean.at(1 * 3 + 0, 0)[p] = -0.5;
    }
    CHECK_THROWS_AS((void)solve_B_for_sphere(bad_mean), NonZeroMean);

    // W_1 = cos(x1) M has divergence -0.7 sin(x1) M
    CHECK_THROWS_AS((void)solve_B_for_sphere(cos_x1_so3(g, 0)), NotDivergenceFree);
}

TEST_CASE("Coulomb gauge: explicit solution and the divergence property") {
    Grid g = make_grid(8);
    Field omega(g, 9, Rank::none);
    for (std::size_t p = 0; p < g.points(); ++p) {
        const auto ix = unflatten(g, p);
        const double v = 0.7 * std::cos(ix[0] * g.h);
        omega.at(0 * 3 + 1)[p] = v;
        omega.at(1 * 3 + 0)[p] = -v;
    }
    Field Om = coulomb_gauge(omega);
    double worst = 0.0;
    for (std::size_t p = 0; p < g.points(); ++p) {
        const auto ix = unflatten(g, p);
        const double v = -0.7 * std::sin(ix[0] * g.h);
        worst = std::max(worst, std::abs(Om.at(0 * 3 + 1, 0)[p] - v));
    }
    CHECK(worst < 1e-12);
    CHECK(l2_norm(add(divergence(Om), omega)) < 1e-12 * (1.0 + l2_norm(omega)));

    Field rnd = random_so_matrix(g, 3, 21, 2, 1.0);
    Field Om2 = coulomb_gauge(rnd);
    CHECK(l2_norm(add(divergence(Om2), rnd)) < 1e-11 * (1.0 + l2_norm(rnd)));
}

TEST_CASE("the smallness functional is exactly quadratic in scale") {
    Grid g = make_grid(8);
    Field Om = random_so_matrix(g, 3, 37, 2, 0.01);
    // both terms, the Dirichlet part and the L^4 part, scale with the square
    const double s1 = gauge_smallness(Om);
    const double s2 = gauge_smallness(scaled(Om, 2.0));
    CHECK(s2 == doctest::Approx(4.0 * s1).epsilon(1e-12));
}

TEST_CASE("factorization of a forward-synthesized connection") {
    Grid g = make_grid(16);
    const int m = 3;
    Field U0 = random_so_matrix(g, m, 122, 2, 0.0015);
    Field xi0 = random_so_2form(g, m, 123, 2, 0.0015);

    // Omega = e^{-U0} grad e^{U0} + e^{-U0} (curl xi0) e^{U0}
    Field ep = matrix_exp(U0);
    Field em = matrix_exp(scaled(U0, -1.0));
    Field Om = add(mat_times_form(em, gradient(ep)),
                   form_times_mat(mat_times_form(em, curl_2form(xi0)), ep));

    REQUIRE(gauge_smallness(Om) < 0.5);
    UhlenbeckGauge ug = uhlenbeck_gauge(Om, 0.5);
    CHECK(ug.residual < 1e-8);
    REQUIRE(ug.history.size() >= 2);
    for (std::size_t i = 1; i < ug.history.size(); ++i)
        CHECK(ug.history[i] <= ug.history[i - 1] * (1.0 + 1e-9));

    // reconstruct the connection from the returned pair
    Field rp = matrix_exp(ug.U);
    Field rm = matrix_exp(scaled(ug.U, -1.0));
    Field back = add(mat_times_form(rm, gradient(rp)),
                     form_times_mat(mat_times_form(rm, curl_2form(ug.xi)), rp));
    CHECK(l2_norm(sub(back, Om)) < 1e-8 * (1.0 + l2_norm(Om)));
}

TEST_CASE("factorization refuses large connections") {
    Grid g = make_grid(8);
    Field Om = random_band_limited(g, 9, Rank::one, 9, 2, 10.0);
    antisymmetrize(Om);
    CHECK_THROWS_AS((void)uhlenbeck_gauge(Om, 0.5), NotSmallEnough);
}

TEST_CASE("gauge pair: normalization, residual, and epsilon scaling") {
    Grid g = make_grid(8);
    Target s3 = make_sphere_target(3);
    Field u = perturbed_map(s3, g, 105, 0.005, 2);
    PotentialSet pots = build_sphere_extrinsic(u);

    const double eps = 3e-4;
    GaugeBuildResult r = build_gauge_pair(pots, eps);
    const int m = 3;

    // mean(A) = I, mean(B) = 0
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            CHECK(std::abs(comp_mean(r.pair.A, i * m + j) - (i == j ? 1.0 : 0.0)) < 1e-13);
    for (int c = 0; c < r.pair.B.comps(); ++c) {
        double mean = 0.0;
        const double* d = r.pair.B.data.data() + std::size_t(c) * r.pair.B.points();
        for (std::size_t p = 0; p < r.pair.B.points(); ++p) mean += d[p];
        CHECK(std::abs(mean / double(r.pair.B.points())) < 1e-13);
    }

    CHECK(r.pair.residual_gauge_eq < 1e-6);
    CHECK(r.pair.min_abs_det > 0.9);
    CHECK(r.pair.dist_to_SO < 0.1);

    // the reported residual is the defect of the linear system it solves
    const double defect = gauge_defect_norm(r.pair.A, r.pair.B, r.scaled_pots);
    CHECK(std::abs(defect - r.pair.residual_gauge_eq) < 1e-10 * (1.0 + defect));

    // near-linear response of the solution size under eps -> eps/2
    GaugeBuildResult half = build_gauge_pair(pots, 0.5 * eps);
    const Field I = identity_matrix_field(g, m);
    const double a_ratio = l2_norm(sub(r.pair.A, I)) / l2_norm(sub(half.pair.A, I));
    const double b_ratio = l2_norm(r.pair.B) / l2_norm(half.pair.B);
    CHECK(a_ratio > 1.0);
    CHECK(a_ratio < 4.0);
    CHECK(b_ratio > 1.0);
    CHECK(b_ratio < 4.0);

    CHECK_THROWS_AS((void)build_gauge_pair(pots, 0.3), NotSmallEnough);
}

TEST_CASE("the flux of the great-circle solution vanishes") {
    Grid g = make_grid(8);
    Field u = great_circle_map(g, 3);
    PotentialSet p = build_sphere_extrinsic(u);
    // the builder potentials already satisfy the gauge equation with A = I and
    // B = 0: the commutator term of W is what curl B would otherwise carry
    RawPotentials raw{p.V, p.w, p.W};
    Field A = identity_matrix_field(g, 3);
    Field B(g, 9, Rank::two);
    Field J = assemble_flux(u, A, B, raw);
    CHECK(l2_norm(J) < 1e-11);
    CHECK(l2_norm(divergence(J)) < 1e-11);

    IdentityResidual ir = identity_residual(u, A, B, p.V, p.w, p.W);
    CHECK(ir.r_total < 1e-10);
}

TEST_CASE("pointwise divergence identity for arbitrary fields") {
    // products of three modes-up-to-2 factors occupy modes up to 6, so the
    // discrete product rule is exact on 16 points per axis but not on 8
    Grid g = make_grid(16);
    const int m = 3;
    Field u = random_band_limited(g, m, Rank::none, 301, 2, 1.0);
    Field A = add(identity_matrix_field(g, m),
                  random_band_limited(g, m * m, Rank::none, 302, 2, 0.3));
    Field B = random_band_limited(g, m * m, Rank::two, 303, 2, 0.3);
    Field V = random_band_limited(g, m * m, Rank::one, 304, 2, 0.5);
    Field w = random_band_limited(g, m * m, Rank::none, 305, 2, 0.5);
    Field W = random_band_limited(g, m * m, Rank::one, 306, 2, 0.5);

    IdentityResidual ir = identity_residual(u, A, B, V, w, W);
    const double scale = l2_norm(u) + l2_norm(A) + l2_norm(B) + l2_norm(V) +
                         l2_norm(w) + l2_norm(W);
    CHECK(ir.r_total < 1e-10 * scale);
    // the two bracketed residuals are genuinely nonzero for random data
    CHECK(ir.r_pde > 1e-3);
    CHECK(ir.r_gauge > 1e-3);
}
