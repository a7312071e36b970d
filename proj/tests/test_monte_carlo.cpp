#include <doctest.h>

#include <cmath>

#include "kinprice/monte_carlo.hpp"
#include "oracles.hpp"

using namespace kinprice;

namespace {

McConfig small_config() {
    McConfig cfg;
    cfg.n_agents = 2000;
    cfg.n_prices = 2000;
    cfg.dt = 1.0;
    cfg.t_end = 2.0;
    cfg.scale_eps = 0.1;
    cfg.seed = 9;
    return cfg;
}

}  // namespace

TEST_CASE("initial state") {
    ModelParams p;
    p.rho = 0.6;
    McConfig cfg = small_config();
    cfg.n_agents = 20001;
    cfg.n_prices = 200000;
    InitialCondition init;
    init.opinion_center = 0.3;
    init.opinion_half_width = 0.4;
    init.price_mean = 2.0;
    init.price_log_var = 0.1;
    Rng rng(1);
    const McState st = initial_state(p, cfg, init, rng);
    CHECK(st.agents.y.size() == 20001);
    CHECK(st.agents.weight * 20001 == doctest::Approx(0.6));
    CHECK(st.agents.y.minCoeff() >= -0.1);
    CHECK(st.agents.y.maxCoeff() <= 0.7);
    CHECK(st.agents.y.head(20000).mean() == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(mean_price(st.prices) == doctest::Approx(2.0).epsilon(5e-3));
    const double log_var = (st.prices.s.log() - st.prices.s.log().mean()).square().mean();
    CHECK(log_var == doctest::Approx(0.1).epsilon(0.02));
}

TEST_CASE("runs are deterministic in the seed") {
    ModelParams p;
    p.alpha2 = 0.2;
    const McConfig cfg = small_config();
    const InitialCondition init;
    const McRun a = run(p, cfg, init);
    const McRun b = run(p, cfg, init);
    REQUIRE(a.trajectory.rows.size() == b.trajectory.rows.size());
    for (std::size_t k = 0; k < a.trajectory.rows.size(); ++k) {
        CHECK(a.trajectory.rows[k].S == b.trajectory.rows[k].S);
        CHECK(a.trajectory.rows[k].Y == b.trajectory.rows[k].Y);
    }
    CHECK((a.final_state.prices.s == b.final_state.prices.s).all());
    McConfig other = cfg;
    other.seed = 10;
    CHECK(run(p, other, init).trajectory.rows.back().S != a.trajectory.rows.back().S);
}

TEST_CASE("every step keeps opinions in [-1, 1] and prices nonnegative") {
    ModelParams p;
    p.alpha1 = 0.5;
    p.alpha2 = 0.5;
    p.sigma2 = 0.8;
    p.zeta2 = 0.8;
    p.noise = NoiseLaw::truncated_gaussian;
    McConfig cfg = small_config();
    cfg.scale_eps = 1.0;
    Rng rng(cfg.seed);
    McState st = initial_state(p, cfg, InitialCondition{}, rng);
    std::int64_t rejected = 0;
    for (int k = 0; k < 200; ++k) {
        const StepStats s = mc_step(st, p, cfg, rng);
        rejected += (s.attempted_op - s.accepted_op) + (s.attempted_pr - s.accepted_pr);
        REQUIRE((st.agents.y.abs() <= 1.0).all());
        REQUIRE((st.prices.s >= 0.0).all());
    }
    CHECK(rejected > 0);
}

TEST_CASE("noise-free run accepts every event and meeting probability is rho * rate * dt") {
    ModelParams p;
    p.sigma2 = 0.0;
    p.zeta2 = 0.0;
    p.rho = 0.5;
    McConfig cfg = small_config();
    cfg.n_agents = 100000;
    Rng rng(3);
    McState st = initial_state(p, cfg, InitialCondition{}, rng);
    const StepStats s = mc_step(st, p, cfg, rng);
    CHECK(s.acceptance_op() == 1.0);
    CHECK(s.acceptance_pr() == 1.0);
    CHECK(static_cast<double>(s.attempted_op) / 50000.0 == doctest::Approx(0.5).epsilon(0.02));
    CHECK(s.attempted_pr == cfg.n_prices);
}

TEST_CASE("mean price relaxes towards the fundamental price like the moment ODE") {
    ModelParams p;
    p.alpha1 = 0.5;
    p.rho = 1.0;
    p.rho_F = 0.5;
    p.gamma_F = 0.8;
    p.S_F = 1.0;
    p.zeta2 = 0.02;
    McConfig cfg = small_config();
    cfg.n_agents = 20000;
    cfg.n_prices = 20000;
    cfg.scale_eps = 0.01;
    cfg.t_end = 2.0;
    InitialCondition init;
    init.price_mean = 3.0;
    init.price_log_var = 0.01;
    const McRun r = run(p, cfg, init);
    // dS/dt = beta (rho Y S + rho_F gamma_F (S_F - S)) with Y ~ 0 (symmetric opinions)
    const double S0 = r.trajectory.rows.front().S;
    const double expected = oracles::rk4(
        [&](double, double S) { return p.beta * p.rho_F * p.gamma_F * (p.S_F - S); }, S0, 0.0,
        2.0, 200);
    CHECK(std::abs(r.trajectory.rows.back().Y) < 1e-2);
    CHECK(r.trajectory.rows.back().S == doctest::Approx(expected).epsilon(1e-2));
}

TEST_CASE("second moment grows like exp((2 beta rho Y + zeta2) t)") {
    ModelParams p;
    p.alpha1 = 0.0;
    p.sigma2 = 0.0;
    p.zeta2 = 0.1;
    McConfig cfg = small_config();
    cfg.n_agents = 1000;
    cfg.n_prices = 200000;
    cfg.scale_eps = 0.01;
    cfg.t_end = 1.0;
    InitialCondition init;
    init.opinion_center = 0.2;
    init.opinion_half_width = 0.0;
    const McRun r = run(p, cfg, init);
    const auto& rows = r.trajectory.rows;
    CHECK(rows.back().Y == doctest::Approx(0.2));
    CHECK(rows.back().E / rows.front().E == doctest::Approx(std::exp(0.4 + 0.1)).epsilon(2e-2));
    CHECK(rows.back().S / rows.front().S == doctest::Approx(std::exp(0.2)).epsilon(5e-3));
}

TEST_CASE("crash floor ends the run") {
    ModelParams p;
    p.alpha1 = 0.1;
    p.sigma2 = 0.0;
    p.zeta2 = 0.01;
    McConfig cfg = small_config();
    cfg.scale_eps = 0.1;
    cfg.t_end = 50.0;
    cfg.crash_floor = 1e-3;
    InitialCondition init;
    init.opinion_center = -0.9;
    init.opinion_half_width = 0.05;
    const McRun r = run(p, cfg, init);
    CHECK(r.trajectory.status == RunStatus::crash);
    CHECK(r.trajectory.rows.back().t < 50.0);
    CHECK(r.trajectory.rows.back().S < 1e-3 * r.trajectory.rows.front().S);
}

TEST_CASE("snapshots") {
    ModelParams p;
    McConfig cfg = small_config();
    cfg.t_end = 1.0;
    cfg.snapshot_every = 3;
    const McRun r = run(p, cfg, InitialCondition{});
    // 10 steps: t0, steps 3/6/9 and the final state
    REQUIRE(r.trajectory.snapshots.size() == 5);
    CHECK(r.trajectory.snapshots.back().t == doctest::Approx(1.0));
    CHECK(r.trajectory.snapshots.front().opinion.mass() == doctest::Approx(p.rho));
    CHECK(r.trajectory.snapshots.front().price.mass() == doctest::Approx(1.0));
    CHECK(r.trajectory.rows.size() == 11);
}

TEST_CASE("trend estimate") {
    CHECK(estimate_trend(1.1, 1.0, 0.1) == doctest::Approx(0.1 / (0.1 * 1.1)));
    CHECK_THROWS_AS(estimate_trend(0.0, 1.0, 0.1), DegeneratePriceError);
    CHECK_THROWS_AS(estimate_trend(1.0, 0.0, 0.1), std::invalid_argument);
}

TEST_CASE("configuration validation") {
    ModelParams p;
    p.rho = 2.0;
    McConfig cfg;
    try {
        cfg.validate(p);
        FAIL("expected ParameterError");
    } catch (const ParameterError& e) {
        CHECK(e.key() == "mc.dt");
    }
    cfg.dt = 0.5;
    CHECK_NOTHROW(cfg.validate(p));
    cfg.scale_eps = 0.0;
    CHECK_THROWS_AS(cfg.validate(p), ParameterError);
    InitialCondition init;
    init.opinion_center = 0.8;
    init.opinion_half_width = 0.3;
    CHECK_THROWS_AS(init.validate(), ParameterError);
}
