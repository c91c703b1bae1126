#pragma once

//==============================================================================
// targets.h
// Closed target manifolds N embedded in R^m: the round unit sphere, plus
// implicit level sets phi = 0 with user-supplied gradient and Hessian (the
// torus of revolution below is the stock example). Pointwise geometry:
// nearest-point style projection, tangent projector P(y), second fundamental
// form A_y(X, Y). Map-level helpers vectorize these over a grid field.
//==============================================================================

#include "biharm4/grid.h"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace biharm4 {

struct Target {
    enum class Kind { sphere, implicit };

    Kind kind = Kind::sphere;
    int m = 3; // ambient dimension

    // Implicit data; unused for the sphere.
    std::function<double(const double*)> phi;
    std::function<void(const double*, double*)> phi_grad; // m values
    std::function<void(const double*, double*)> phi_hess; // m*m values, row-major
    double tube_radius = 0.2; // |phi| admitted into the projection iteration

    // Base point on N, used when synthesizing maps.
    std::vector<double> base;

    // Tolerance for "is this point on N" preconditions.
    double on_tol = 1e-8;

    // --- pointwise operations ------------------------------------------------

    // Nearest-point projection of an ambient point onto N. Throws OutsideTube
    // when y is too far from N for the projection to be trustworthy (sphere:
    // |y| < 0.5; implicit: |phi(y)| > tube_radius or Newton stagnates).
    void project(const double* y, double* out) const;

    // Unit normal at a point of N (sphere: y itself).
    void normal(const double* y, double* out) const;

    // Tangent projector P(y) = I - n n^T, m x m row-major.
    // Throws NotOnManifold if y is off N by more than on_tol.
    void tangent_projector(const double* y, double* P) const;

    // Second fundamental form A_y(X, Y), an ambient (normal) vector.
    // X and Y must be tangent at y up to on_tol.
    void second_fundamental_form(const double* y, const double* X,
                                 const double* Y, double* out) const;

    // Same bilinear formula without the on-manifold / tangency checks; used on
    // grid data where spectral derivatives are only tangent to truncation
    // error.
    void sff_unchecked(const double* y, const double* X, const double* Y,
                       double* out) const;

    // d/dy_j of the projector extension P(y) = I - n(y) n(y)^T, all j at once:
    // out[j][s*m+k] = (d_j P)^{sk}. y must lie on N.
    void projector_derivative(const double* y, std::vector<std::vector<double>>& out) const;

    // Signed distance proxy used in on-manifold checks: | |y|-1 | for the
    // sphere, |phi(y)| for implicit targets.
    double level_error(const double* y) const;
};

Target make_sphere_target(int m);

// (sqrt(y1^2+y2^2) - R0)^2 + y3^2 - r0^2 = 0 in R^3.
Target make_torus_of_revolution_target(double major_radius, double minor_radius,
                                       double tube_radius);

// --- map-level helpers -------------------------------------------------------

// Pointwise projection of an ambient map field onto N.
Field project_map(const Target& t, const Field& y);

// P(u(x)) as a matrix field. Checks u lies on N (on_tol).
Field tangent_projector_field(const Target& t, const Field& u);

// sum_l A_u(d_l u, d_l u) as a map field; du is the spectral gradient of u.
Field sff_trace(const Target& t, const Field& u, const Field& du);

// max over grid points of the level error; 0 means exactly on N.
double max_level_error(const Target& t, const Field& u);

// Pointwise u(x) -> Q u(x) for a constant m x m matrix Q (row-major).
Field apply_matrix_map(const std::vector<double>& Q, const Field& u);

// --- stock maps --------------------------------------------------------------

// (cos x1, sin x1, 0, ..., 0): an explicit closed geodesic sweep, stationary
// for the flows treated here.
Field great_circle_map(const Grid& g, int m);

// Projection of base + amplitude * (band-limited noise). Deterministic in the
// seed and independent of n for fixed kmax.
Field perturbed_map(const Target& t, const Grid& g, std::uint64_t seed,
                    double amplitude, int kmax = 0);

// Sphere map concentrating near x0 = (pi,pi,pi,pi): base point tilted by a
// smooth periodic bump of angular size `width`. Shrinking width localizes
// second-derivative energy, which is what the concentration scale probes.
Field bump_map(const Grid& g, int m, double width, double amplitude);

// Eigenmaps of the torus Laplacian into S^3 in R^4:
//   x -> Q (cos a.x, sin a.x, cos b.x, sin b.x) / sqrt(2)
// for integer frequency rows with |a|^2 = |b|^2 != 0 and a seeded rotation
// Q in SO(4). Lap u = -|a|^2 u pointwise, |grad u|^2 is constant, and the map
// is harmonic as a sphere map. Frequencies must stay below the Nyquist index.
Field harmonic_eigenmap(const Grid& g, const std::array<int, 4>& freq_a,
                        const std::array<int, 4>& freq_b, std::uint64_t rot_seed);

} // namespace biharm4
