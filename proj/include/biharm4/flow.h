#pragma once

//==============================================================================
// flow.h
// Semi-implicit time integration of the fourth-order gradient flow
//     d_t u = -Lap^2 u + sigma * N(u),   N(u) = Lap(V.grad u) + div(w grad u)
//                                               + W.grad u,
// with the potentials rebuilt from u every step and the stiff Lap^2 part
// absorbed by helmholtz_step_solve. Steps are accepted only when the map stays
// on the target and the quadratic energy does not increase; otherwise the step
// size is halved. Alongside: the windowed concentration functional
//     kappa(u;R) = max_x  integral over B_{32R}(x) of |grad^2 u|^2
//                                                    + R^{-2}|grad u|^2,
// its level radius R_t with kappa = eps/2, and a trajectory driver emitting
// per-step diagnostics including the conserved-flux divergence.
//==============================================================================

#include "biharm4/config.h"
#include "biharm4/potentials.h"
#include "biharm4/targets.h"

#include <array>
#include <vector>

namespace biharm4 {

struct FlowState {
    Field u;
    double t = 0.0;
    double dt = 0.0; // step size actually used by the last accepted step
    std::vector<std::array<double, 3>> energy_history; // (t, quadratic, tangential)
    std::vector<std::array<double, 3>> kappa_history;  // (t, R_t, kappa); filled by run_flow
    long rejected_steps = 0;
};

struct StepOptions {
    double energy_slack = 1e-10; // relative per-step increase tolerated
    double energy_floor = 1e-20; // absolute slack; covers roundoff near zero energy
    double min_radius = 0.5;     // sphere targets: |u*| floor before projection
    int max_retries = 10;
};

// One step from s.u with initial step size tau; halves tau on rejection, up to
// max_retries times, then throws StepRejected. Appends to energy_history.
FlowState step(const FlowState& s, double tau, const Target& target,
               const StepOptions& opt = {});

// Same scheme plus an explicit source term, no rejection logic. Used by the
// manufactured-solution order measurement, where the source is chosen so a
// closed-form trajectory solves the forced flow exactly.
Field step_forced(const Field& u, double tau, const Field& force, const Target& target);

struct ConcentrationReport {
    double R = 0.0;
    double kappa = 0.0;
    std::array<int, 4> argmax_center{0, 0, 0, 0};
};

enum class KappaPath { automatic, brute, windowed };

// Admissible radii are 0 < R < pi/32 (the probe ball has radius 32R and must
// fit the torus); anything else throws RadiusOutOfRange. `automatic` uses
// brute force for n <= 16 and the FFT-windowed correlation otherwise; both
// paths share the same ball indicator (periodic distance <= 32R, inclusive).
ConcentrationReport concentration(const Field& u, double R,
                                  KappaPath path = KappaPath::automatic);

struct CriticalRadius {
    double R = 0.0;
    double kappa_at_R = 0.0;
    bool saturated_low = false;  // smallest resolved radius already exceeds eps/2
    bool saturated_high = false; // no admissible radius reaches eps/2; R = R_max
};

// Smallest R with kappa(u;R) = eps/2, located by a geometric scan for the
// first upward crossing followed by bisection to 1e-3 relative in R; the
// bracket property kappa(lo) < eps/2 <= kappa(hi) is asserted every halving.
// The scan starts a couple of lattice spacings up, where the discrete ball
// stops degenerating to its center cell. Saturation at either end is
// flagged, not thrown; a concentrating sequence drives R to the low end.
CriticalRadius critical_radius(const Field& u, double eps);

struct TrajectoryRow {
    long step = 0;
    double t = 0.0;
    double dt = 0.0;
    double energy_ext = 0.0;
    double energy_int = 0.0;
    double grad_norm = 0.0; // ||u_next - u|| / dt for the step ending here
    double kappa = 0.0;
    double R_t = 0.0;
    double divJ_norm = 0.0;
    long rejected_steps = 0;
};

struct RunRecord {
    std::vector<TrajectoryRow> rows; // row per accepted step, plus step 0
    FlowState state;                 // final
    double max_level_err = 0.0;      // worst on-target deviation over the run
    double worst_energy_jump = 0.0;  // most positive per-step relative increase
    double max_flux_excess = 0.0;    // max divJ / (velocity bound); ~1 when healthy
};

// Steps until t_end (t_end = 0: initial diagnostics only). The flux diagnostic
// uses A = I and the curl-solvable part of the sign-scaled W. Only the
// quadratic-energy flow is integrated; energy = "intrinsic" is a ConfigError.
RunRecord run_flow(const RunConfig& cfg);

} // namespace biharm4
