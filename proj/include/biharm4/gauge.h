#pragma once

//==============================================================================
// gauge.h
// The gauge machinery that puts the fourth-order system into divergence form:
//  * curl-solve for B when W is divergence-free (sphere potentials),
//  * Coulomb gauge div(Omega) = -omega,
//  * nonlinear factorization Omega = e^{-U} grad e^U + e^{-U} (curl xi) e^U,
//  * Picard construction of a pair (A, B) solving
//        grad(Lap A) + Lap(A) V - grad(A) w + A W = curl B
//    for small potentials, normalized by mean(A) = I and mean-free B,
//  * the conserved flux J and the pointwise divergence identity behind it.
//==============================================================================

#include "biharm4/grid.h"
#include "biharm4/potentials.h"
#include "biharm4/spectral.h"

#include <vector>

namespace biharm4 {

// The potentials as they enter the gauge equation and the flux: scaled by the
// calibrated sign, so that div J = A * pde_residual holds with the same
// residual the flow drives to zero.
struct RawPotentials {
    Field V; // matrix-1-form
    Field w; // matrix
    Field W; // matrix-1-form
};

inline RawPotentials sigma_scaled(const PotentialSet& p) {
    const double s = double(p.sigma);
    return RawPotentials{scaled(p.V, s), scaled(p.w, s), scaled(p.W, s)};
}

struct GaugePair {
    Field A;                 // matrix field, mean I
    Field B;                 // matrix-2-form, mean-free
    double residual_gauge_eq = 0.0;
    double dist_to_SO = 0.0; // max over grid points
    double min_abs_det = 0.0;
    int iterations = 0;
    std::vector<double> residual_history;
};

struct UhlenbeckGauge {
    Field U;  // so(m) matrix field
    Field xi; // so(m) matrix-2-form
    double residual = 0.0;
    std::vector<double> history;
};

struct ConservedFlux {
    Field J; // map-valued 1-form
    double divJ_norm = 0.0;
    double identity_defect = 0.0;
};

struct IdentityResidual {
    double r_total = 0.0;
    double r_pde = 0.0;   // norm of the interior equation residual
    double r_gauge = 0.0; // norm of the gauge equation residual
};

// B with curl B = W, for per-component mean-free and divergence-free W
// (relative divergence above 1e-6 rejects). B is exactly antisymmetric,
// mean-free, and closed (d B = 0).
Field solve_B_for_sphere(const Field& W);

// Omega = -grad(inv_laplacian(omega)); div Omega = -omega to spectral
// accuracy; so(m)-valuedness is preserved exactly.
Field coulomb_gauge(const Field& omega);

// Factorize Omega; iterates Hodge corrections of the conjugated defect.
UhlenbeckGauge uhlenbeck_gauge(const Field& Omega, double eps_gauge,
                               int max_iter = 60, double tol_factor = 1e-8);

// Smallness functional gating the factorization: h^4 sum |grad Omega|^2 +
// sqrt(h^4 sum |Omega|^4).
double gauge_smallness(const Field& Omega);

// Picard construction. The potential set is sign-scaled and then normalized to
// combined norm eps before solving; the returned pair belongs to those scaled
// fields (also returned). NotSmallEnough when eps exceeds eps_max.
struct GaugeBuildResult {
    GaugePair pair;
    RawPotentials scaled_pots;
};
GaugeBuildResult build_gauge_pair(const PotentialSet& pots, double eps,
                                  double eps_max = 0.25, double tol = 1e-6,
                                  int max_iter = 80);

// The flux J = grad(A Lap u) - 2 grad(A) Lap u + Lap(A) grad u - A w grad u
//            + grad(A)(V . grad u) - A grad(V . grad u) - B . grad u.
Field assemble_flux(const Field& u, const Field& A, const Field& B,
                    const RawPotentials& pots);

ConservedFlux conservation_flux(const Field& u, const GaugePair& pair,
                                const RawPotentials& pots);

// Pointwise divergence identity for arbitrary fields:
//   div J = A (Lap^2 u - Lap(V.grad u) - div(w grad u) - W.grad u)
//         + (grad Lap A + Lap(A)V - grad(A)w + A W - curl B) . grad u.
// r_total is the norm of the defect, r_pde/r_gauge the norms of the two
// bracketed residuals.
IdentityResidual identity_residual(const Field& u, const Field& A, const Field& B,
                                   const Field& V, const Field& w, const Field& W);

// max over grid points of the Frobenius distance from A(x) to SO(m).
double max_dist_to_SO(const Field& A);

double min_abs_det(const Field& A);

} // namespace biharm4
