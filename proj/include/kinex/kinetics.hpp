#pragma once

// Deterministic side: loss/gain evolution operators for the three exchange
// models, explicit time stepping, Picard steady-state iteration and
// relaxation-time measurement.

#include <cstddef>
#include <utility>
#include <vector>

#include "kinex/core.hpp"
#include "kinex/models.hpp"

namespace kinex::kinetics {

/// int_u^umax dU int_0^U du1 f(u1) f(U-u1) / U, nested trapezoid with
/// interpolated off-grid values.
double gain_pure(const core::GridPdf& f, double u);
/// The same operator at every node, O(nodes^2) via the autoconvolution.
std::vector<double> gain_pure(const core::GridPdf& f);

/// int_u^umax dU/((1-lambda)U) int_lo^hi du1 f(u1) f(U-u1) with
/// lo = max((u-(1-lambda)U)/lambda, 0) and hi = min(u/lambda, U).
/// lambda = 0 delegates to gain_pure; lambda > 0.999 is rejected.
double gain_saving(const core::GridPdf& f, double u, const models::ModelParams& params);
/// All nodes at once with the integration order swapped:
/// (1/(1-lambda)) [int_0^u f(s) T(s,(u-s)/(1-lambda)) ds + int_u^{u/lambda} f(s) T(s,0) ds],
/// T(s,x) = int_x^umax f(v)/(s+v) dv.
std::vector<double> gain_saving(const core::GridPdf& f, const models::ModelParams& params);

struct AngleGain {
    double winner = 0.0;
    double loser = 0.0;
};

/// Winner term int_0^u du1 int_{(u-u1)/omega}^umax du2 f(u1) f(u2)/(omega u2)
/// and loser term int_u^{min(u/(1-omega),umax)} f(u2)/(omega u2) du2.
AngleGain gain_angle(const core::GridPdf& f, double u, const models::ModelParams& params);
std::vector<AngleGain> gain_angle(const core::GridPdf& f, const models::ModelParams& params);

/// Steady-state map K[f]: the gain for Pure/Saving, (winner + loser)/2 for Angle.
std::vector<double> gain_operator(const core::GridPdf& f, const models::ModelParams& params);

struct EvolutionState {
    core::GridPdf pdf;
    models::ModelParams model;
    double time = 0.0;        // elapsed steps
    double n_agents = 1000.0; // N in N df/dt
    double clipped_mass = 0.0;
};

/// N df/dt per node: -2f + 2 gain (Pure/Saving), -2f + winner + loser (Angle).
std::vector<double> evolution_rate(const EvolutionState& state);

/// Explicit Euler step of dt_steps collisions; requires dt_steps <= N/4.
/// Negative values are clipped before renormalization; more than 1e-3 clipped
/// mass is a NumericError.
EvolutionState advance(const EvolutionState& state, double dt_steps);

struct FixedPointReport {
    int iterations = 0;
    bool converged = false;
    bool damped = false;
    double final_sup_residual = 0.0;
    /// sup|f - K[f]| of the iterate before each update; entry 0 is the seed.
    std::vector<double> residuals;
    /// L1 distance between successive iterates.
    std::vector<double> step_distances;
};

/// Picard iteration f <- normalize(K[f]) from the seed until
/// sup|f - K[f]| <= tol or max_iter updates. Switches to 0.5 damping after two
/// consecutive residual increases. Non-convergence is reported, not thrown.
std::pair<core::GridPdf, FixedPointReport> solve_steady(const models::ModelParams& model,
                                                        const core::GridPdf& seed, int max_iter,
                                                        double tol);

/// Default grid preset per model: log-head when the Gamma candidate has shape
/// n <= 2 (Angle with omega >= 3/8, Saving with lambda <= 1/4), uniform otherwise.
core::GridHandle default_grid(const models::ModelParams& model);

struct RelaxationFit {
    double tau = 0.0;
    double tau_over_n = 0.0;
    double rms_residual = 0.0;
    double t_start = 0.0;
    double t_end = 0.0;
    std::vector<double> times;
    std::vector<double> distances;
};

struct RelaxationOptions {
    double dt_fraction = 0.1;   // dt = fraction * N
    double horizon_over_n = 3.0;
    int steady_max_iter = 100;
    double steady_tol = 1e-4;
};

/// Mixture (1 - weight) f_eq + weight g with g the Gamma of shape
/// max(2, 2n) at the same mean; renormalized on f_eq's grid.
core::GridPdf perturbed(const core::GridPdf& f_eq, double weight = 0.1);

/// Advances f0 over [0, horizon N], records d(t) = L1(f(t), f_eq) at every
/// step and fits ln d linearly: tau = -1/slope.
RelaxationFit relaxation_time(const models::ModelParams& model, const core::GridPdf& f0,
                              const core::GridPdf& f_eq, double n_agents,
                              const RelaxationOptions& opts = {});
/// Same, with f_eq computed by solve_steady from the reference seed on f0's grid.
RelaxationFit relaxation_time(const models::ModelParams& model, const core::GridPdf& f0,
                              double n_agents, const RelaxationOptions& opts = {});

} // namespace kinex::kinetics
