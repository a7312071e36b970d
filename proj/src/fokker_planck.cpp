#include "kinprice/fokker_planck.hpp"

#include <algorithm>
#include <cmath>

namespace kinprice {

namespace {

/// z / (e^z - 1), continuous at z = 0.
double bernoulli_fn(double z) {
    if (std::abs(z) < 1e-10) return 1.0 - 0.5 * z;
    return z / std::expm1(z);
}

/// Flux through face f is alpha[f] * V[f] - beta[f] * V[f + 1].
struct FaceCoefficients {
    Eigen::ArrayXd alpha;
    Eigen::ArrayXd beta;
};

/// Exponentially fitted face coefficients for the flux A V - d/dx(D V)
/// written as (A - D') V - D V'. `drift` and `diff` / `diff_slope` are
/// evaluated at the interior faces.
template <typename Drift, typename Diff, typename DiffSlope>
FaceCoefficients fitted_coefficients(const DensityGrid& grid, Drift drift, Diff diff,
                                     DiffSlope diff_slope) {
    const Eigen::Index n = grid.size();
    const Eigen::ArrayXd c = grid.centers();
    FaceCoefficients k{Eigen::ArrayXd(n - 1), Eigen::ArrayXd(n - 1)};
    for (Eigen::Index f = 0; f + 1 < n; ++f) {
        const double x = grid.edges(f + 1);
        const double h = c(f + 1) - c(f);
        const double a_eff = drift(x) - diff_slope(x);
        const double d = diff(x);
        const double peclet = d > 0.0 ? a_eff * h / d : 0.0;
        if (d <= 0.0 || std::abs(peclet) > 600.0) {
            k.alpha(f) = std::max(a_eff, 0.0);
            k.beta(f) = std::max(-a_eff, 0.0);
        } else {
            k.alpha(f) = d / h * bernoulli_fn(-peclet);
            k.beta(f) = d / h * bernoulli_fn(peclet);
        }
    }
    return k;
}

/// Backward-Euler step (w/dt + A) V_new = (w/dt) V_old with the tridiagonal
/// flux operator A; solved by the Thomas algorithm.
Eigen::ArrayXd implicit_step(const DensityGrid& grid, const FaceCoefficients& k, double dt) {
    if (!(dt > 0.0 && std::isfinite(dt))) throw StabilityError("FP step: dt must be finite and > 0");
    const Eigen::Index n = grid.size();
    const Eigen::ArrayXd w = grid.widths();

    Eigen::ArrayXd lower = Eigen::ArrayXd::Zero(n);
    Eigen::ArrayXd diag = w / dt;
    Eigen::ArrayXd upper = Eigen::ArrayXd::Zero(n);
    Eigen::ArrayXd rhs = w / dt * grid.values;
    for (Eigen::Index f = 0; f + 1 < n; ++f) {
        diag(f) += k.alpha(f);
        upper(f) = -k.beta(f);
        diag(f + 1) += k.beta(f);
        lower(f + 1) = -k.alpha(f);
    }

    for (Eigen::Index i = 1; i < n; ++i) {
        const double m = lower(i) / diag(i - 1);
        diag(i) -= m * upper(i - 1);
        rhs(i) -= m * rhs(i - 1);
    }
    Eigen::ArrayXd v(n);
    v(n - 1) = rhs(n - 1) / diag(n - 1);
    for (Eigen::Index i = n - 2; i >= 0; --i) v(i) = (rhs(i) - upper(i) * v(i + 1)) / diag(i);
    // the M-matrix inverse is nonnegative; this only clears rounding-level negatives
    return v.max(0.0);
}

Eigen::ArrayXd face_fluxes(const DensityGrid& grid, const FaceCoefficients& k) {
    const Eigen::Index n = grid.size();
    return k.alpha * grid.values.head(n - 1) - k.beta * grid.values.tail(n - 1);
}

FaceCoefficients opinion_coefficients(const DensityGrid& grid, const ModelParams& p, double Y,
                                      double phi) {
    const double diff_scale = 0.5 * p.sigma2 * p.rho;
    return fitted_coefficients(
        grid,
        [&](double y) {
            return p.rho * p.alpha1 * herding(y, p.a, p.b) * (Y - y) + p.rho * p.alpha2 * (phi - y);
        },
        [&](double y) { return diff_scale * std::pow(1.0 - y * y, 2.0 * p.gamma_D); },
        [&](double y) {
            return diff_scale * 2.0 * p.gamma_D * std::pow(1.0 - y * y, 2.0 * p.gamma_D - 1.0) *
                   (-2.0 * y);
        });
}

FaceCoefficients price_coefficients(const DensityGrid& grid, const ModelParams& p, double Y) {
    return fitted_coefficients(
        grid,
        [&](double s) { return p.beta * (p.rho * Y * s + p.rho_F * p.gamma_F * (p.S_F - s)); },
        [&](double s) { return 0.5 * p.zeta2 * s * s; }, [&](double s) { return p.zeta2 * s; });
}

void require_domain(const DensityGrid& grid, GridDomain domain, const char* who) {
    if (grid.domain != domain) throw std::invalid_argument(std::string(who) + ": wrong grid domain");
    if (grid.size() < 2) throw std::invalid_argument(std::string(who) + ": need at least 2 cells");
}

}  // namespace

DensityGrid fp_opinion_step(const DensityGrid& grid, const ModelParams& params, double Y,
                            double phi, double dt) {
    require_domain(grid, GridDomain::opinion, "fp_opinion_step");
    DensityGrid out = grid;
    out.values = implicit_step(grid, opinion_coefficients(grid, params, Y, phi), dt);
    return out;
}

DensityGrid fp_price_step(const DensityGrid& grid, const ModelParams& params, double Y, double dt,
                          StepDiagnostics* diagnostics) {
    require_domain(grid, GridDomain::price, "fp_price_step");
    DensityGrid out = grid;
    out.values = implicit_step(grid, price_coefficients(grid, params, Y), dt);
    if (diagnostics) {
        const Eigen::Index n = out.size();
        diagnostics->boundary_mass = out.values(0) * (out.edges(1) - out.edges(0)) +
                                     out.values(n - 1) * (out.edges(n) - out.edges(n - 1));
        diagnostics->truncation_warning = diagnostics->boundary_mass > truncation_threshold;
    }
    return out;
}

Eigen::ArrayXd price_face_fluxes(const DensityGrid& grid, const ModelParams& params, double Y) {
    require_domain(grid, GridDomain::price, "price_face_fluxes");
    return face_fluxes(grid, price_coefficients(grid, params, Y));
}

Eigen::ArrayXd price_operator(const DensityGrid& grid, const ModelParams& params, double Y) {
    const Eigen::ArrayXd flux = price_face_fluxes(grid, params, Y);
    const Eigen::Index n = grid.size();
    Eigen::ArrayXd div = Eigen::ArrayXd::Zero(n);
    div.head(n - 1) += flux;
    div.tail(n - 1) -= flux;
    return -div / grid.widths();
}

// ---------------------------------------------------------------------------

double PropensityPath::integral(double t) const {
    if (knots.empty() || knots.size() != values.size() || knots.front() != 0.0)
        throw std::invalid_argument("PropensityPath: knots must start at 0 and match values");
    double sum = 0.0;
    for (std::size_t k = 0; k < knots.size(); ++k) {
        const double start = knots[k];
        if (t <= start) break;
        const double end = k + 1 < knots.size() ? std::min(knots[k + 1], t) : t;
        sum += values[k] * (end - start);
    }
    return sum;
}

double integrate_E(double E0, const PropensityPath& path, const ModelParams& params, double t) {
    if (!(E0 > 0.0)) throw std::invalid_argument("integrate_E: E0 must be > 0");
    return E0 * std::exp(2.0 * params.beta * params.rho * path.integral(t) + params.zeta2 * t);
}

namespace {

struct LognormalShape {
    double log_mean;  // of s
    double log_var;   // log Z^2
};

LognormalShape lognormal_shape(double t, double E0, double S0, const ModelParams& params,
                               double Y) {
    if (!(S0 > 0.0)) throw std::invalid_argument("analytic_lognormal: S0 must be > 0");
    const double log_S = std::log(S0) + params.beta * params.rho * Y * t;
    const double log_E = std::log(integrate_E(E0, PropensityPath::constant(Y), params, t));
    const double log_z2 = log_E - 2.0 * log_S;
    if (!(log_z2 > 0.0))
        throw std::domain_error("analytic_lognormal: degenerate variance (need E > S^2)");
    return {log_S - 0.5 * log_z2, log_z2};
}

}  // namespace

double analytic_lognormal(double s, double t, double E0, double S0, const ModelParams& params,
                          double Y) {
    const LognormalShape shape = lognormal_shape(t, E0, S0, params, Y);
    if (!(s > 0.0)) return 0.0;
    const double z = std::log(s) - shape.log_mean;
    return std::exp(-z * z / (2.0 * shape.log_var)) / (s * std::sqrt(2.0 * M_PI * shape.log_var));
}

double analytic_lognormal_flux(double s, double t, double E0, double S0,
                               const ModelParams& params, double Y) {
    const LognormalShape shape = lognormal_shape(t, E0, S0, params, Y);
    if (!(s > 0.0)) return 0.0;
    const double v = analytic_lognormal(s, t, E0, S0, params, Y);
    const double d_s2v = s * v * (1.0 - (std::log(s) - shape.log_mean) / shape.log_var);
    return params.beta * params.rho * Y * s * v - 0.5 * params.zeta2 * d_s2v;
}

double pareto_mu(double rho_F, double gamma_F, double zeta2) {
    if (!(zeta2 > 0.0)) throw ParameterError("zeta2", "Pareto exponent undefined for zeta2 = 0");
    const double mu = 1.0 + 2.0 * rho_F * gamma_F / zeta2;
    if (!(mu > 1.0)) throw ParameterError("gamma_F", "Pareto exponent requires rho_F gamma_F > 0");
    return mu;
}

double steady_state_mu(const ModelParams& params) {
    return pareto_mu(params.rho_F, params.beta * params.gamma_F, params.zeta2);
}

double analytic_gamma_steady(double s, double mu, double S_F) {
    if (!(mu > 1.0)) throw ParameterError("mu", "must be > 1");
    if (!(S_F > 0.0)) throw ParameterError("S_F", "must be > 0");
    if (!(s > 0.0)) return 0.0;
    const double scale = (mu - 1.0) * S_F;
    const double log_c = mu * std::log(scale) - std::lgamma(mu);
    return std::exp(log_c - (1.0 + mu) * std::log(s) - scale / s);
}

// ---------------------------------------------------------------------------

DensityGrid initial_opinion_grid(const ModelParams& params, const InitialCondition& init,
                                 std::int64_t cells) {
    DensityGrid grid = make_opinion_grid(cells);
    const double lo = init.opinion_center - init.opinion_half_width;
    const double hi = init.opinion_center + init.opinion_half_width;
    if (hi > lo) {
        fill_from_cdf(grid, [&](double y) { return std::clamp((y - lo) / (hi - lo), 0.0, 1.0); },
                      params.rho);
    } else {
        // point mass: put it in the containing cell
        const double* first = grid.edges.data();
        auto it = std::upper_bound(first, first + grid.edges.size(), lo);
        auto cell = std::clamp<Eigen::Index>(it - first - 1, 0, grid.size() - 1);
        grid.values(cell) = params.rho / (grid.edges(cell + 1) - grid.edges(cell));
    }
    return grid;
}

DensityGrid initial_price_grid(const ModelParams& params, const InitialCondition& init,
                               const PriceGridSpec& spec) {
    DensityGrid grid =
        make_price_grid(spec.cells, spec.s_min_rel * params.S_F, spec.s_max_rel * params.S_F);
    if (init.price_log_var > 0.0) {
        const double sd = std::sqrt(init.price_log_var);
        const double m = std::log(init.price_mean) - 0.5 * init.price_log_var;
        fill_from_cdf(grid, [&](double s) {
            return 0.5 * std::erfc(-(std::log(s) - m) / (sd * std::sqrt(2.0)));
        });
        grid.values /= grid.mass();
    } else {
        const double* first = grid.edges.data();
        auto it = std::upper_bound(first, first + grid.edges.size(), init.price_mean);
        auto cell = std::clamp<Eigen::Index>(it - first - 1, 0, grid.size() - 1);
        grid.values(cell) = 1.0 / (grid.edges(cell + 1) - grid.edges(cell));
    }
    return grid;
}

FpRunReport march_to_steady(const ModelParams& params, const PriceGridSpec& grid_spec,
                            const SteadyOptions& opts) {
    params.validate();
    if (!(params.rho_F * params.gamma_F > 0.0))
        throw ParameterError("gamma_F", "steady state needs rho_F * gamma_F > 0");
    if (!(params.zeta2 > 0.0)) throw ParameterError("zeta2", "steady state needs zeta2 > 0");

    InitialCondition init;
    init.price_mean = params.S_F;
    init.price_log_var = 0.1;
    FpRunReport report;
    report.grid = initial_price_grid(params, init, grid_spec);
    const double mass0 = report.grid.mass();

    double dt = opts.dt_initial;
    for (std::int64_t step = 1; step <= opts.max_steps; ++step) {
        StepDiagnostics diag;
        DensityGrid next = fp_price_step(report.grid, params, 0.0, dt, &diag);
        report.steady_residual =
            ((next.values - report.grid.values).abs() * next.widths()).sum() / dt;
        report.grid = std::move(next);
        report.t += dt;
        report.steps = step;
        report.truncation_warning = report.truncation_warning || diag.truncation_warning;
        if (report.steady_residual < opts.tol) {
            report.converged = true;
            break;
        }
        dt = std::min(dt * opts.dt_growth, opts.dt_max);
    }
    report.mass_drift = std::abs(report.grid.mass() - mass0);
    return report;
}

FpRunReport solve_steady(const ModelParams& params, const PriceGridSpec& grid_spec,
                         const SteadyOptions& opts) {
    FpRunReport report = march_to_steady(params, grid_spec, opts);
    if (!report.converged)
        throw ConvergenceError("solve_steady: no convergence after " +
                               std::to_string(opts.max_steps) + " steps");
    return report;
}

FpCoupledRun solve_coupled(const ModelParams& params, const InitialCondition& init,
                           const FpCoupledConfig& cfg) {
    params.validate();
    init.validate();
    if (!(cfg.dt > 0.0)) throw ParameterError("fp.dt", "must be > 0");
    if (!(cfg.t_end >= 0.0)) throw ParameterError("fp.t_end", "must be >= 0");

    FpCoupledRun out;
    out.opinion = initial_opinion_grid(params, init, cfg.opinion_cells);
    out.price = initial_price_grid(params, init, cfg.price_grid);
    const double opinion_mass0 = out.opinion.mass();
    const double price_mass0 = out.price.mass();

    auto record = [&](double t) {
        out.rows.push_back({t, out.price.mean(), out.opinion.mean(),
                            out.price.second_moment() / out.price.mass(), 1.0, 1.0});
    };
    record(0.0);
    out.snapshots.push_back({0.0, out.opinion, out.price});

    const auto steps = static_cast<std::int64_t>(std::llround(cfg.t_end / cfg.dt));
    double S_prev = 0.0;
    bool last_snapshot_current = true;
    for (std::int64_t k = 1; k <= steps; ++k) {
        const double Y = out.opinion.mean();
        const double S = out.price.mean();
        const double trend = S_prev > 0.0 ? estimate_trend(S, S_prev, cfg.dt) : 0.0;
        const double phi = value_function(trend, params.value_fn);

        StepDiagnostics diag;
        out.opinion = fp_opinion_step(out.opinion, params, Y, phi, cfg.dt);
        out.price = fp_price_step(out.price, params, Y, cfg.dt, &diag);
        out.truncation_warning = out.truncation_warning || diag.truncation_warning;
        S_prev = S;

        const double t = static_cast<double>(k) * cfg.dt;
        record(t);
        last_snapshot_current = false;
        if (cfg.snapshot_every > 0 && k % cfg.snapshot_every == 0) {
            out.snapshots.push_back({t, out.opinion, out.price});
            last_snapshot_current = true;
        }
    }
    if (!last_snapshot_current) out.snapshots.push_back({out.rows.back().t, out.opinion, out.price});
    out.opinion_mass_drift = std::abs(out.opinion.mass() - opinion_mass0);
    out.price_mass_drift = std::abs(out.price.mass() - price_mass0);
    return out;
}

}  // namespace kinprice
