#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "kinprice/grid.hpp"
#include "kinprice/model.hpp"
#include "kinprice/monte_carlo.hpp"

namespace kinprice {

class StabilityError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Per-step diagnostics of the price solver.
struct StepDiagnostics {
    /// Mass held by the two boundary cells after the step.
    double boundary_mass = 0.0;
    /// Set when boundary_mass exceeds the truncation threshold.
    bool truncation_warning = false;
};

/// Mass in the outermost cells above which the price domain is considered too narrow.
inline constexpr double truncation_threshold = 1e-6;

// ---------------------------------------------------------------------------
// Conservative exponentially fitted (Chang-Cooper / Scharfetter-Gummel) steps.
// Drift and diffusion are both taken implicitly, so the update is an M-matrix
// solve: positivity holds for every dt > 0 and mass is conserved to rounding.

/// One step of
///   f_t + [(rho a1 H(y)(Y - y) + rho a2 (Phi - y)) f]_y = (sigma2 rho / 2) [D(y)^2 f]_yy
/// with zero-flux walls at y = +-1. Y and phi are frozen over the step.
DensityGrid fp_opinion_step(const DensityGrid& grid, const ModelParams& params, double Y,
                            double phi, double dt);

/// One step of
///   V_t + [beta (rho Y s + rho_F gamma_F (S_F - s)) V]_s = (zeta2 / 2) [s^2 V]_ss
/// with zero-flux truncation boundaries.
DensityGrid fp_price_step(const DensityGrid& grid, const ModelParams& params, double Y, double dt,
                          StepDiagnostics* diagnostics = nullptr);

/// Cell-averaged right-hand side (-(F_{i+1/2} - F_{i-1/2}) / w_i) of the discrete
/// price operator applied to `grid`.
Eigen::ArrayXd price_operator(const DensityGrid& grid, const ModelParams& params, double Y);

/// Numerical flux at each interior face of the discrete price operator
/// (size n - 1, face i sits at edges[i + 1]).
Eigen::ArrayXd price_face_fluxes(const DensityGrid& grid, const ModelParams& params, double Y);

// ---------------------------------------------------------------------------
// Closed forms

/// Piecewise-constant Y(t): value `values[k]` on [knots[k], knots[k+1]), the last
/// value extending to infinity. knots[0] must be 0.
struct PropensityPath {
    std::vector<double> knots{0.0};
    std::vector<double> values{0.0};

    static PropensityPath constant(double Y) { return {{0.0}, {Y}}; }
    /// Integral of Y over [0, t].
    double integral(double t) const;
};

/// Second moment along a propensity path: E' = (2 beta rho Y + zeta2) E.
double integrate_E(double E0, const PropensityPath& path, const ModelParams& params, double t);

/// Self-similar lognormal price density at time t with Y frozen, market price
/// S(t) = S0 exp(beta rho Y t) and E(t) from integrate_E.
double analytic_lognormal(double s, double t, double E0, double S0, const ModelParams& params,
                          double Y);

/// Exact flux beta rho Y s V - (zeta2/2) d/ds(s^2 V) of the lognormal solution.
double analytic_lognormal_flux(double s, double t, double E0, double S0,
                               const ModelParams& params, double Y);

/// Pareto exponent 1 + 2 rho_F gamma_F / zeta2.
double pareto_mu(double rho_F, double gamma_F, double zeta2);

/// Tail exponent of the steady state of the price equation, keeping the
/// price speed: 1 + 2 beta rho_F gamma_F / zeta2 (equals pareto_mu when beta = 1).
double steady_state_mu(const ModelParams& params);

/// Inverse-Gamma steady density C(mu) s^{-(1+mu)} exp(-(mu - 1) S_F / s).
double analytic_gamma_steady(double s, double mu, double S_F);

// ---------------------------------------------------------------------------
// Drivers

struct PriceGridSpec {
    std::int64_t cells = 512;
    double s_min_rel = 1e-3;  // relative to S_F
    double s_max_rel = 1e3;
    bool operator==(const PriceGridSpec&) const = default;
};

struct FpRunReport {
    DensityGrid grid;
    double mass_drift = 0.0;
    std::int64_t steps = 0;
    double steady_residual = 0.0;  // L1 change per unit time at termination
    double t = 0.0;
    bool converged = false;
    bool truncation_warning = false;
};

struct SteadyOptions {
    double tol = 1e-9;
    double dt_initial = 1e-2;
    double dt_max = 50.0;
    double dt_growth = 1.1;
    std::int64_t max_steps = 200000;
    bool operator==(const SteadyOptions&) const = default;
};

/// Marches the price equation with Y = 0 until the L1 change per unit time
/// drops below `opts.tol` or max_steps is reached (report.converged tells which).
FpRunReport march_to_steady(const ModelParams& params, const PriceGridSpec& grid_spec,
                            const SteadyOptions& opts = {});

/// march_to_steady that throws ConvergenceError when max_steps is exhausted.
FpRunReport solve_steady(const ModelParams& params, const PriceGridSpec& grid_spec,
                         const SteadyOptions& opts = {});

struct FpCoupledConfig {
    std::int64_t opinion_cells = 400;
    PriceGridSpec price_grid{};
    double dt = 1e-3;
    double t_end = 1.0;
    std::int64_t snapshot_every = 0;
    bool operator==(const FpCoupledConfig&) const = default;
};

struct FpSnapshot {
    double t;
    DensityGrid opinion;
    DensityGrid price;
};

struct FpCoupledRun {
    std::vector<TrajectoryRow> rows;  // acceptance columns are 1
    std::vector<FpSnapshot> snapshots;
    DensityGrid opinion;
    DensityGrid price;
    double opinion_mass_drift = 0.0;
    double price_mass_drift = 0.0;
    bool truncation_warning = false;
};

/// Initial grids: cell averages of the uniform opinion law (mass rho) and the
/// lognormal price law (mass 1).
DensityGrid initial_opinion_grid(const ModelParams& params, const InitialCondition& init,
                                 std::int64_t cells);
DensityGrid initial_price_grid(const ModelParams& params, const InitialCondition& init,
                               const PriceGridSpec& spec);

/// Alternates one opinion and one price step; Y, S and the trend are recomputed
/// from the grids between steps.
FpCoupledRun solve_coupled(const ModelParams& params, const InitialCondition& init,
                           const FpCoupledConfig& cfg);

}  // namespace kinprice
