#include <doctest.h>

#include <cmath>

#include "kinprice/analysis.hpp"
#include "kinprice/fokker_planck.hpp"
#include "oracles.hpp"

using namespace kinprice;

namespace {

ModelParams coupled_params() {
    ModelParams p;
    p.alpha1 = 0.4;
    p.alpha2 = 0.2;
    p.sigma2 = 0.2;
    p.a = 0.2;
    p.b = 0.6;
    p.rho = 0.7;
    p.rho_F = 0.3;
    p.gamma_F = 0.5;
    p.zeta2 = 0.2;
    return p;
}

}  // namespace

TEST_CASE("opinion step conserves mass and positivity") {
    const ModelParams p = coupled_params();
    InitialCondition init;
    init.opinion_center = -0.4;
    init.opinion_half_width = 0.5;
    DensityGrid f = initial_opinion_grid(p, init, 200);
    const double m0 = f.mass();
    CHECK(m0 == doctest::Approx(p.rho).epsilon(1e-14));
    for (int k = 0; k < 2000; ++k) {
        f = fp_opinion_step(f, p, f.mean(), 0.3, 5e-3);
        REQUIRE(f.values.minCoeff() >= 0.0);
    }
    CHECK(std::abs(f.mass() - m0) < 1e-12);
}

TEST_CASE("opinion mean follows dY/dt = rho alpha2 (Phi - Y) without herding") {
    ModelParams p;
    p.alpha1 = 0.0;
    p.alpha2 = 0.5;
    p.sigma2 = 0.0;
    p.rho = 0.8;
    InitialCondition init;
    init.opinion_center = -0.3;
    init.opinion_half_width = 0.2;
    DensityGrid f = initial_opinion_grid(p, init, 800);
    const double phi = 0.6;
    const double dt = 1e-3;
    for (int k = 0; k < 1000; ++k) f = fp_opinion_step(f, p, f.mean(), phi, dt);
    const double expected =
        oracles::rk4([&](double, double Y) { return p.rho * p.alpha2 * (phi - Y); }, -0.3, 0.0, 1.0, 100);
    CHECK(f.mean() == doctest::Approx(expected).epsilon(5e-3));
}

TEST_CASE("price step conserves mass and positivity") {
    const ModelParams p = coupled_params();
    DensityGrid V = initial_price_grid(p, InitialCondition{}, PriceGridSpec{300, 1e-3, 1e3});
    const double m0 = V.mass();
    CHECK(m0 == doctest::Approx(1.0).epsilon(1e-14));
    StepDiagnostics diag;
    for (int k = 0; k < 2000; ++k) {
        V = fp_price_step(V, p, 0.3, 5e-3, &diag);
        REQUIRE(V.values.minCoeff() >= 0.0);
    }
    CHECK(std::abs(V.mass() - m0) < 1e-12);
    CHECK_FALSE(diag.truncation_warning);
}

TEST_CASE("price mean follows the moment ODE") {
    ModelParams p = coupled_params();
    const double Y = 0.25;
    InitialCondition init;
    init.price_mean = 2.0;
    init.price_log_var = 0.05;
    DensityGrid V = initial_price_grid(p, init, PriceGridSpec{800, 1e-3, 1e3});
    const double S0 = V.mean();
    const double dt = 1e-3;
    for (int k = 0; k < 1000; ++k) V = fp_price_step(V, p, Y, dt);
    const double expected = oracles::rk4(
        [&](double, double S) { return p.beta * (p.rho * Y * S + p.rho_F * p.gamma_F * (p.S_F - S)); },
        S0, 0.0, 1.0, 100);
    CHECK(V.mean() == doctest::Approx(expected).epsilon(2e-3));
}

TEST_CASE("pure drift transport matches the characteristics solution") {
    ModelParams p;
    p.zeta2 = 0.0;
    p.rho = 1.0;
    p.beta = 1.0;
    const double Y = 0.4;
    const double c = p.beta * p.rho * Y;
    auto V0 = [](double s) { return analytic_lognormal(s, 0.0, 1.1, 1.0, ModelParams{}, 0.0); };
    DensityGrid V = make_price_grid(2000, 1e-2, 1e2);
    fill_from_density(V, V0);
    for (int k = 0; k < 500; ++k) V = fp_price_step(V, p, Y, 1e-3);
    DensityGrid exact = V;
    fill_from_density(exact, [&](double s) { return oracles::transported_density(V0, c, s, 0.5); });
    CHECK(V.mean() == doctest::Approx(exact.mean()).epsilon(2e-3));
    CHECK(l1_distance(V, exact) < 0.05);
}

TEST_CASE("lognormal closed form") {
    ModelParams p;
    p.zeta2 = 0.2;
    p.rho = 0.9;
    p.beta = 1.3;
    const double Y = 0.15, t = 0.7, S0 = 1.5, E0 = 1.5 * 1.5 * std::exp(0.05);
    auto V = [&](double s) { return analytic_lognormal(s, t, E0, S0, p, Y); };
    // integrate in log s for accuracy
    auto in_log = [&](auto g) {
        return oracles::integrate([&](double u) { return g(std::exp(u)) * std::exp(u); }, -10.0, 10.0);
    };
    CHECK(in_log(V) == doctest::Approx(1.0).epsilon(1e-10));
    const double S_t = S0 * std::exp(p.beta * p.rho * Y * t);
    CHECK(in_log([&](double s) { return s * V(s); }) == doctest::Approx(S_t).epsilon(1e-10));
    const double E_t = E0 * std::exp((2 * p.beta * p.rho * Y + p.zeta2) * t);
    CHECK(in_log([&](double s) { return s * s * V(s); }) == doctest::Approx(E_t).epsilon(1e-10));
    CHECK(integrate_E(E0, PropensityPath::constant(Y), p, t) == doctest::Approx(E_t));
    CHECK_THROWS_AS(analytic_lognormal(1.0, 0.0, 1.0, 1.0, p, Y), std::domain_error);
}

TEST_CASE("second moment along a piecewise propensity path") {
    ModelParams p;
    p.zeta2 = 0.1;
    p.rho = 0.5;
    const PropensityPath path{{0.0, 1.0}, {0.2, -0.4}};
    auto rate = [&](double Y) {
        return [&p, Y](double, double E) { return (2 * p.beta * p.rho * Y + p.zeta2) * E; };
    };
    const double mid = oracles::rk4(rate(0.2), 1.0, 0.0, 1.0, 1000);
    const double direct = oracles::rk4(rate(-0.4), mid, 1.0, 2.0, 1000);
    CHECK(integrate_E(1.0, path, p, 1.0) == doctest::Approx(mid).epsilon(1e-10));
    CHECK(integrate_E(1.0, path, p, 2.0) == doctest::Approx(direct).epsilon(1e-10));
    CHECK(path.integral(2.5) == doctest::Approx(0.2 - 0.6));
}

TEST_CASE("analytic Gamma steady state") {
    for (double mu : {1.5, 3.0, 6.0}) {
        auto f = [&](double u) { return analytic_gamma_steady(std::exp(u), mu, 2.0) * std::exp(u); };
        CHECK(oracles::integrate(f, -12.0, 25.0) == doctest::Approx(1.0).epsilon(1e-9));
        auto g = [&](double u) { return f(u) * std::exp(u); };
        CHECK(oracles::integrate(g, -12.0, 40.0) == doctest::Approx(2.0).epsilon(1e-6));
    }
    CHECK(pareto_mu(0.5, 0.4, 0.2) == doctest::Approx(3.0));
    CHECK(pareto_mu(0.5, 0.6, 0.2) == doctest::Approx(4.0));
    ModelParams p;
    p.beta = 2.0;
    p.rho_F = 0.5;
    p.gamma_F = 0.4;
    p.zeta2 = 0.2;
    CHECK(steady_state_mu(p) == doctest::Approx(5.0));
    CHECK_THROWS_AS(pareto_mu(0.5, 0.4, 0.0), ParameterError);
    CHECK_THROWS_AS(pareto_mu(0.0, 0.4, 0.2), ParameterError);
}

TEST_CASE("steady state approaches the Gamma law") {
    ModelParams p;
    p.rho_F = 0.5;
    p.gamma_F = 0.4;
    p.zeta2 = 0.2;
    const FpRunReport r = solve_steady(p, PriceGridSpec{256, 1e-3, 1e3});
    CHECK(r.converged);
    CHECK(r.mass_drift < 1e-12);
    DensityGrid exact = r.grid;
    fill_from_density(exact, [&](double s) { return analytic_gamma_steady(s, 3.0, 1.0); });
    CHECK(l1_distance(r.grid, exact) < 5e-2);
    CHECK(r.grid.mean() == doctest::Approx(1.0).epsilon(1e-2));

    SteadyOptions quick;
    quick.max_steps = 3;
    CHECK_THROWS_AS(solve_steady(p, PriceGridSpec{64, 1e-3, 1e3}, quick), ConvergenceError);
    CHECK_FALSE(march_to_steady(p, PriceGridSpec{64, 1e-3, 1e3}, quick).converged);
    ModelParams none = p;
    none.rho_F = 0.0;
    CHECK_THROWS_AS(solve_steady(none, PriceGridSpec{64, 1e-3, 1e3}), ParameterError);
}

TEST_CASE("discrete operator annihilates its own steady state") {
    ModelParams p;
    p.rho_F = 0.5;
    p.gamma_F = 0.4;
    p.zeta2 = 0.2;
    const FpRunReport r = solve_steady(p, PriceGridSpec{128, 1e-3, 1e3});
    const Eigen::ArrayXd flux = price_face_fluxes(r.grid, p, 0.0);
    CHECK(flux.size() == 127);
    CHECK(flux.abs().maxCoeff() < 1e-8);
    CHECK(price_operator(r.grid, p, 0.0).abs().maxCoeff() < 1e-5);
}

TEST_CASE("invalid steps") {
    const ModelParams p;
    DensityGrid V = make_price_grid(10, 0.1, 10.0);
    fill_from_density(V, [](double) { return 0.1; });
    CHECK_THROWS_AS(fp_price_step(V, p, 0.0, 0.0), StabilityError);
    CHECK_THROWS_AS(fp_price_step(V, p, 0.0, std::nan("")), StabilityError);
    CHECK_THROWS_AS(fp_opinion_step(V, p, 0.0, 0.0, 0.1), std::invalid_argument);
}

TEST_CASE("coupled driver") {
    const ModelParams p = coupled_params();
    InitialCondition init;
    init.opinion_center = 0.2;
    init.opinion_half_width = 0.5;
    FpCoupledConfig cfg;
    cfg.opinion_cells = 100;
    cfg.price_grid = PriceGridSpec{200, 1e-3, 1e3};
    cfg.dt = 1e-2;
    cfg.t_end = 1.0;
    cfg.snapshot_every = 25;
    const FpCoupledRun r = solve_coupled(p, init, cfg);
    CHECK(r.rows.size() == 101);
    CHECK(r.snapshots.size() == 5);
    CHECK(r.opinion_mass_drift < 1e-12);
    CHECK(r.price_mass_drift < 1e-12);
    CHECK(r.rows.front().Y == doctest::Approx(0.2));
    CHECK(r.rows.back().t == doctest::Approx(1.0));
}
