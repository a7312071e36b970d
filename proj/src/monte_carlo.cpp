#include "kinprice/monte_carlo.hpp"

#include <cmath>
#include <numeric>
#include <utility>

namespace kinprice {

void InitialCondition::validate() const {
    if (!(opinion_half_width >= 0.0))
        throw ParameterError("init.opinion_half_width", "must be >= 0");
    if (!(std::abs(opinion_center) + opinion_half_width <= 1.0))
        throw ParameterError("init.opinion_center", "initial opinions must stay inside [-1, 1]");
    if (!(price_mean > 0.0 && std::isfinite(price_mean)))
        throw ParameterError("init.price_mean", "must be > 0");
    if (!(price_log_var >= 0.0 && std::isfinite(price_log_var)))
        throw ParameterError("init.price_log_var", "must be >= 0");
}

void McConfig::validate(const ModelParams& params) const {
    if (n_agents < 2) throw ParameterError("mc.n_agents", "need at least 2 agents");
    if (n_prices < 1) throw ParameterError("mc.n_prices", "need at least 1 price sample");
    if (!(dt > 0.0 && std::isfinite(dt))) throw ParameterError("mc.dt", "must be > 0");
    if (!(t_end >= 0.0 && std::isfinite(t_end))) throw ParameterError("mc.t_end", "must be >= 0");
    if (!(interaction_rate >= 0.0))
        throw ParameterError("mc.interaction_rate", "must be >= 0");
    if (interaction_rate * params.rho * dt > 1.0)
        throw ParameterError("mc.dt", "interaction_rate * rho * dt must be <= 1");
    if (!(price_rate >= 0.0)) throw ParameterError("mc.price_rate", "must be >= 0");
    if (price_rate * dt > 1.0) throw ParameterError("mc.dt", "price_rate * dt must be <= 1");
    if (snapshot_every < 0) throw ParameterError("mc.snapshot_every", "must be >= 0");
    if (!(scale_eps > 0.0 && scale_eps <= 1.0))
        throw ParameterError("mc.scale_eps", "must lie in (0, 1]");
    if (!(crash_floor >= 0.0 && crash_floor < 1.0))
        throw ParameterError("mc.crash_floor", "must lie in [0, 1)");
    if (opinion_bins < 2) throw ParameterError("mc.opinion_bins", "need at least 2 bins");
    if (price_bins < 2) throw ParameterError("mc.price_bins", "need at least 2 bins");
    if (!(price_hist_min > 0.0 && price_hist_max > price_hist_min))
        throw ParameterError("mc.price_hist_min", "need 0 < price_hist_min < price_hist_max");
}

std::int64_t McConfig::steps() const {
    return static_cast<std::int64_t>(std::llround(t_end / macro_dt()));
}

double estimate_trend(double S_now, double S_prev, double dt) {
    if (S_now == 0.0) throw DegeneratePriceError("estimate_trend: market price is zero");
    if (!(S_prev > 0.0)) throw std::invalid_argument("estimate_trend: S_prev must be > 0");
    if (!(dt > 0.0)) throw std::invalid_argument("estimate_trend: dt must be > 0");
    return (S_now - S_prev) / (dt * S_now);
}

McState initial_state(const ModelParams& params, const McConfig& cfg,
                      const InitialCondition& init, Rng& rng) {
    McState state;
    const auto n = static_cast<Eigen::Index>(cfg.n_agents);
    state.agents.y.resize(n);
    state.agents.weight = params.rho / static_cast<double>(n);
    // antithetic pairs keep the sample mean at the center exactly
    for (Eigen::Index i = 0; i < n; i += 2) {
        const double u = init.opinion_half_width * (2.0 * rng.uniform() - 1.0);
        state.agents.y(i) = init.opinion_center + u;
        if (i + 1 < n) state.agents.y(i + 1) = init.opinion_center - u;
    }

    const auto m = static_cast<Eigen::Index>(cfg.n_prices);
    state.prices.s.resize(m);
    state.prices.weight = 1.0 / static_cast<double>(m);
    const double sd = std::sqrt(init.price_log_var);
    const double log_mean = std::log(init.price_mean) - 0.5 * init.price_log_var;
    for (Eigen::Index j = 0; j < m; j += 2) {
        const double z = sd > 0.0 ? rng.normal() : 0.0;
        state.prices.s(j) = std::exp(log_mean + sd * z);
        if (j + 1 < m) state.prices.s(j + 1) = std::exp(log_mean - sd * z);
    }
    return state;
}

StepStats mc_step(McState& state, const ModelParams& params, const McConfig& cfg, Rng& rng) {
    const ModelParams micro = scaled(params, cfg.scale_eps);
    const NoiseSampler opinion_noise(params.noise, micro.sigma2);
    const NoiseSampler price_noise(params.noise, micro.zeta2);

    StepStats stats;
    stats.Y = mean_propensity(state.agents);
    stats.S = mean_price(state.prices);
    if (stats.S == 0.0) throw DegeneratePriceError("mc_step: market price is zero");
    const double trend =
        state.S_prev > 0.0 ? estimate_trend(stats.S, state.S_prev, cfg.macro_dt()) : 0.0;
    stats.phi = value_function(trend, params.value_fn);

    // random disjoint pairs; with an odd count the last shuffled agent sits out
    auto& y = state.agents.y;
    const Eigen::Index n = y.size();
    for (Eigen::Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
        std::swap(y(i), y(j));
    }
    const double p_meet = cfg.interaction_rate * params.rho * cfg.dt;
    for (Eigen::Index i = 0; i + 1 < n; i += 2) {
        if (!rng.bernoulli(p_meet)) continue;
        const double eta = opinion_noise(rng);
        const double eta_star = opinion_noise(rng);
        ++stats.attempted_op;
        if (auto out = interact_opinions(y(i), y(i + 1), stats.phi, eta, eta_star, micro)) {
            y(i) = out->y;
            y(i + 1) = out->y_star;
            ++stats.accepted_op;
        }
    }

    auto& s = state.prices.s;
    const double p_update = cfg.price_rate * cfg.dt;
    for (Eigen::Index j = 0; j < s.size(); ++j) {
        if (!rng.bernoulli(p_update)) continue;
        ++stats.attempted_pr;
        if (auto out = update_price(s(j), stats.Y, price_noise(rng), micro)) {
            s(j) = *out;
            ++stats.accepted_pr;
        }
    }

    state.S_prev = stats.S;
    state.t += cfg.macro_dt();
    return stats;
}

Snapshot take_snapshot(const McState& state, const ModelParams& params, const McConfig& cfg) {
    Snapshot snap;
    snap.t = state.t;
    const auto& y = state.agents.y;
    snap.opinion = histogram(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())),
                             make_opinion_grid(cfg.opinion_bins), state.agents.weight);
    const auto& s = state.prices.s;
    snap.price = histogram(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())),
                           make_price_grid(cfg.price_bins, cfg.price_hist_min * params.S_F,
                                           cfg.price_hist_max * params.S_F),
                           state.prices.weight);
    return snap;
}

namespace {

TrajectoryRow observe(const McState& state, double acc_op, double acc_pr) {
    return {state.t, mean_price(state.prices), mean_propensity(state.agents),
            second_moment(state.prices), acc_op, acc_pr};
}

}  // namespace

McRun run(const ModelParams& params, const McConfig& cfg, const InitialCondition& init) {
    params.validate();
    cfg.validate(params);
    init.validate();

    Rng rng(cfg.seed);
    McRun result;
    McState& state = result.final_state;
    state = initial_state(params, cfg, init, rng);
    Trajectory& traj = result.trajectory;

    traj.rows.push_back(observe(state, 1.0, 1.0));
    traj.snapshots.push_back(take_snapshot(state, params, cfg));
    const double S0 = traj.rows.front().S;

    const std::int64_t steps = cfg.steps();
    bool last_snapshot_current = true;
    for (std::int64_t k = 1; k <= steps; ++k) {
        StepStats stats;
        try {
            stats = mc_step(state, params, cfg, rng);
        } catch (const DegeneratePriceError&) {
            traj.status = RunStatus::crash;
            break;
        }
        traj.rows.push_back(observe(state, stats.acceptance_op(), stats.acceptance_pr()));
        last_snapshot_current = false;
        if (cfg.snapshot_every > 0 && k % cfg.snapshot_every == 0) {
            traj.snapshots.push_back(take_snapshot(state, params, cfg));
            last_snapshot_current = true;
        }
        if (traj.rows.back().S < cfg.crash_floor * S0) {
            traj.status = RunStatus::crash;
            break;
        }
    }
    if (!last_snapshot_current) traj.snapshots.push_back(take_snapshot(state, params, cfg));
    return result;
}

}  // namespace kinprice
