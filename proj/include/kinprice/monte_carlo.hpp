#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "kinprice/grid.hpp"
#include "kinprice/model.hpp"
#include "kinprice/rng.hpp"

namespace kinprice {

/// Raised when the market price reaches zero and the relative trend is undefined.
class DegeneratePriceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Initial data shared by the particle and grid solvers.
struct InitialCondition {
    /// Opinions uniform on [center - half_width, center + half_width].
    double opinion_center = 0.0;
    double opinion_half_width = 0.5;
    /// Prices lognormal with mean `price_mean` and log-variance `price_log_var`
    /// (zero log-variance puts every sample at price_mean).
    double price_mean = 1.0;
    double price_log_var = 0.05;

    void validate() const;
    bool operator==(const InitialCondition&) const = default;
};

/// Time stepping of the particle solver. `dt` is the microscopic step; with
/// `scale_eps` = eps each step advances macroscopic time by eps * dt and the
/// model is rescaled by `scaled(params, eps)`. `t_end` is macroscopic.
struct McConfig {
    std::int64_t n_agents = 10000;
    std::int64_t n_prices = 10000;
    double dt = 1.0;
    double t_end = 1.0;
    /// Pair interaction frequency per unit chartist density; a pair meets with
    /// probability interaction_rate * rho * dt per step.
    double interaction_rate = 1.0;
    double price_rate = 1.0;
    std::uint64_t seed = 1;
    std::int64_t snapshot_every = 0;  // 0 disables intermediate snapshots
    double scale_eps = 1.0;
    double crash_floor = 1e-8;  // relative to S(0)
    std::int64_t opinion_bins = 50;
    std::int64_t price_bins = 60;
    double price_hist_min = 1e-3;  // relative to S_F
    double price_hist_max = 1e3;

    void validate(const ModelParams& params) const;
    std::int64_t steps() const;
    double macro_dt() const { return scale_eps * dt; }
    bool operator==(const McConfig&) const = default;
};

struct TrajectoryRow {
    double t;
    double S;
    double Y;
    double E;
    double acc_op;
    double acc_pr;
};

struct Snapshot {
    double t;
    DensityGrid opinion;  // mass rho
    DensityGrid price;    // mass <= 1 (samples outside the histogram range drop out)
};

enum class RunStatus { completed, crash };

struct Trajectory {
    std::vector<TrajectoryRow> rows;
    std::vector<Snapshot> snapshots;
    RunStatus status = RunStatus::completed;
};

/// Relative price trend (S_now - S_prev) / (dt S_now).
double estimate_trend(double S_now, double S_prev, double dt);

/// Full particle state between steps.
struct McState {
    AgentEnsemble agents;
    PriceEnsemble prices;
    double t = 0.0;
    double S_prev = 0.0;  // market price at the previous step start; 0 means no history
};

struct StepStats {
    double Y = 0.0;
    double S = 0.0;
    double phi = 0.0;
    std::int64_t attempted_op = 0;
    std::int64_t accepted_op = 0;
    std::int64_t attempted_pr = 0;
    std::int64_t accepted_pr = 0;

    double acceptance_op() const {
        return attempted_op == 0 ? 1.0 : static_cast<double>(accepted_op) / attempted_op;
    }
    double acceptance_pr() const {
        return attempted_pr == 0 ? 1.0 : static_cast<double>(accepted_pr) / attempted_pr;
    }
};

McState initial_state(const ModelParams& params, const McConfig& cfg,
                      const InitialCondition& init, Rng& rng);

/// One Nanbu-style step. `params` are the unscaled model parameters.
StepStats mc_step(McState& state, const ModelParams& params, const McConfig& cfg, Rng& rng);

struct McRun {
    Trajectory trajectory;
    McState final_state;
};

/// Time-marches the particle system from `init`. Deterministic in cfg.seed.
McRun run(const ModelParams& params, const McConfig& cfg, const InitialCondition& init);

/// Opinion and price histograms of the current state on the configured bins.
Snapshot take_snapshot(const McState& state, const ModelParams& params, const McConfig& cfg);

}  // namespace kinprice
