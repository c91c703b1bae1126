#pragma once

//==============================================================================
// potentials.h
// The divergence-form rewrite of the fourth-order system
//    Delta^2 u = Delta(V . grad u) + div(w grad u) + W . grad u,
// with the splitting W = grad(omega) + F, omega so(m)-valued. Builders for the
// round sphere (extrinsic and intrinsic energies) and for generic implicit
// targets via the tangent projector. A finite-difference variational oracle
// pins the sign convention relating the right-hand side to the energy
// gradient; the calibrated sign sigma travels with the PotentialSet.
//==============================================================================

#include "biharm4/grid.h"
#include "biharm4/targets.h"

#include <cstdint>
#include <vector>

namespace biharm4 {

enum class BuilderKind { sphere_extrinsic, sphere_intrinsic, general_extrinsic };

struct PotentialSet {
    Field V;     // matrix-1-form
    Field w;     // matrix field
    Field W;     // matrix-1-form, built directly
    Field omega; // so(m)-valued matrix field
    Field F;     // matrix-1-form, W - grad(omega)
    int sigma = 0; // calibrated sign; +1 or -1
    BuilderKind builder = BuilderKind::sphere_extrinsic;
};

// Frozen results of the variational calibration below; builders stamp these
// onto their output. calibrate_signs re-derives them at runtime.
int calibrated_sigma(BuilderKind kind);

PotentialSet build_sphere_extrinsic(const Field& u);
PotentialSet build_sphere_intrinsic(const Field& u);
PotentialSet build_general_extrinsic(const Field& u, const Target& target);

// grad(omega) + F; equals W up to spectral tolerance.
Field assembled_W(const PotentialSet& pots);

// Raw right-hand side N(u) = Delta(V . grad u) + div(w grad u) + W . grad u.
Field apply_rhs(const Field& u, const Field& V, const Field& w, const Field& W);
Field apply_rhs(const Field& u, const PotentialSet& pots);

// Delta^2 u - sigma * N(u).
Field pde_residual(const Field& u, const PotentialSet& pots);

// quadratures of |Delta u|^2 resp. of the squared tension field |P(u) Delta u|^2
double energy_ext(const Field& u);
double energy_int(const Field& u, const Target& target);

// integral |A_u(grad u, grad u)|^2, the gap between the two energies
double sff_quartic_integral(const Field& u, const Target& target);

// Variational oracle: picks the sign for which the central finite difference
// of the builder's energy along ambient probe directions phi matches
// 2 <residual, phi> to rel_tol, over every sample and probe. Throws
// CalibrationAmbiguous when zero or both signs pass (e.g. constant-only
// samples).
int calibrate_signs(const std::vector<Field>& u_samples, BuilderKind kind,
                    const Target& target, double rel_tol = 1e-4,
                    std::uint64_t probe_seed = 2026, int n_probes = 5);

} // namespace biharm4
