#include "kinprice/experiment.hpp"

#include <cstdio>
#include <cstdlib>
#include <thread>

#include "kinprice/analysis.hpp"
#include "kinprice/csv.hpp"

namespace kinprice {

namespace fs = std::filesystem;

namespace {

std::string snapshot_name(const char* kind, std::size_t index) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%06zu.csv", kind, index);
    return buf;
}

std::string yes_no(bool v) { return v ? "true" : "false"; }

}  // namespace

std::string format_key_values(const KeyValues& kv) {
    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + '\n';
    return out;
}

unsigned thread_count() {
    if (const char* env = std::getenv("KINPRICE_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0) return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

fs::path experiment_directory(const ExperimentConfig& cfg) {
    fs::path root = cfg.output_dir;
    if (const char* env = std::getenv("KINPRICE_OUTPUT_ROOT"); env && root.is_relative())
        root = fs::path(env) / root;
    return root / cfg.name;
}

int simulate_mc(const ExperimentConfig& cfg, const fs::path& dir) {
    cfg.validate();
    save_config(cfg, dir / "config.cfg");
    const McRun result = run(cfg.model, cfg.mc, cfg.init);
    const Trajectory& traj = result.trajectory;

    write_atomic(dir / "trajectory.csv", trajectory_csv(traj.rows));
    std::string index = "index,t\n";
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        const Snapshot& snap = traj.snapshots[k];
        write_atomic(dir / "snapshots" / snapshot_name("opinion", k), histogram_csv(snap.opinion));
        write_atomic(dir / "snapshots" / snapshot_name("price", k), histogram_csv(snap.price));
        index += std::to_string(k) + ',' + format_double(snap.t) + '\n';
    }
    write_atomic(dir / "snapshots" / "index.csv", index);
    write_atomic(dir / "opinions_final.csv", samples_csv("y", result.final_state.agents.y));
    write_atomic(dir / "prices_final.csv", samples_csv("s", result.final_state.prices.s));

    const TrajectoryRow& last = traj.rows.back();
    const bool crashed = traj.status == RunStatus::crash;
    write_atomic(dir / "run_report.txt",
                 format_key_values({{"status", crashed ? "crash" : "completed"},
                                    {"steps", std::to_string(traj.rows.size() - 1)},
                                    {"t", format_double(last.t)},
                                    {"S", format_double(last.S)},
                                    {"Y", format_double(last.Y)},
                                    {"E", format_double(last.E)},
                                    {"snapshots", std::to_string(traj.snapshots.size())}}));
    return crashed ? 2 : 0;
}

int solve_fp(const ExperimentConfig& cfg, const fs::path& dir) {
    cfg.validate();
    save_config(cfg, dir / "config.cfg");
    const FpCoupledRun result = solve_coupled(cfg.model, cfg.init, cfg.fp);

    write_atomic(dir / "fp_trajectory.csv", trajectory_csv(result.rows));
    std::string index = "index,t\n";
    for (std::size_t k = 0; k < result.snapshots.size(); ++k) {
        const FpSnapshot& snap = result.snapshots[k];
        write_atomic(dir / "fp_snapshots" / snapshot_name("opinion", k), grid_csv(snap.opinion));
        write_atomic(dir / "fp_snapshots" / snapshot_name("price", k), grid_csv(snap.price));
        index += std::to_string(k) + ',' + format_double(snap.t) + '\n';
    }
    write_atomic(dir / "fp_snapshots" / "index.csv", index);

    const TrajectoryRow& last = result.rows.back();
    write_atomic(dir / "fp_report.txt",
                 format_key_values({{"steps", std::to_string(result.rows.size() - 1)},
                                    {"t", format_double(last.t)},
                                    {"S", format_double(last.S)},
                                    {"Y", format_double(last.Y)},
                                    {"E", format_double(last.E)},
                                    {"opinion_mass_drift", format_double(result.opinion_mass_drift)},
                                    {"price_mass_drift", format_double(result.price_mass_drift)},
                                    {"truncation_warning", yes_no(result.truncation_warning)}}));
    return 0;
}

int steady_state(const ExperimentConfig& cfg, const fs::path& dir) {
    cfg.validate();
    save_config(cfg, dir / "config.cfg");
    const FpRunReport report = march_to_steady(cfg.model, cfg.fp.price_grid, cfg.steady);

    const double mu = steady_state_mu(cfg.model);
    DensityGrid analytic = report.grid;
    fill_from_density(analytic, [&](double s) { return analytic_gamma_steady(s, mu, cfg.model.S_F); });
    const double rel_l1 = l1_distance(report.grid, analytic) / analytic.mass();
    const double mean = report.grid.mean();

    write_atomic(dir / "steady_grid.csv", grid_csv(report.grid));
    write_atomic(dir / "steady_analytic.csv", grid_csv(analytic));
    write_atomic(dir / "steady_report.txt",
                 format_key_values({{"converged", yes_no(report.converged)},
                                    {"steps", std::to_string(report.steps)},
                                    {"t", format_double(report.t)},
                                    {"steady_residual", format_double(report.steady_residual)},
                                    {"mass", format_double(report.grid.mass())},
                                    {"mass_drift", format_double(report.mass_drift)},
                                    {"truncation_warning", yes_no(report.truncation_warning)},
                                    {"mu", format_double(mu)},
                                    {"relative_l1_vs_gamma", format_double(rel_l1)},
                                    {"mean", format_double(mean)},
                                    {"mean_rel_error", format_double(std::abs(mean - cfg.model.S_F) / cfg.model.S_F)}}));
    return report.converged ? 0 : 2;
}

int analyze(const fs::path& dir) {
    const ExperimentConfig cfg = load_config(dir / "config.cfg");
    const std::vector<double> prices = read_samples_csv(dir / "prices_final.csv");
    const std::vector<TrajectoryRow> rows = read_trajectory_csv(dir / "trajectory.csv");
    if (rows.empty()) throw std::runtime_error("analyze: empty trajectory");

    KeyValues kv;
    kv.emplace_back("n_prices", std::to_string(prices.size()));

    std::vector<double> positive;
    for (double s : prices)
        if (s > 0.0) positive.push_back(s);

    std::string tail_table = "k,mu,half_width\n";
    const std::int64_t k = cfg.tail_k > 0 ? cfg.tail_k : default_tail_count(positive.size());
    if (k >= min_tail_count && static_cast<std::size_t>(k) < positive.size()) {
        const TailFit fit = hill_estimator(positive, k);
        kv.emplace_back("tail.k", std::to_string(fit.k));
        kv.emplace_back("tail.mu", format_double(fit.mu));
        kv.emplace_back("tail.half_width", format_double(fit.half_width));
        for (const TailFit& f : hill_sensitivity(positive, k))
            tail_table += std::to_string(f.k) + ',' + format_double(f.mu) + ',' +
                          format_double(f.half_width) + '\n';
    } else {
        kv.emplace_back("tail.k", "skipped");
    }
    if (cfg.model.rho_F * cfg.model.gamma_F > 0.0 && cfg.model.zeta2 > 0.0)
        kv.emplace_back("tail.mu_theory", format_double(steady_state_mu(cfg.model)));

    if (positive.size() >= static_cast<std::size_t>(min_lognormal_samples)) {
        const LognormalityReport ln = lognormality_check(positive);
        kv.emplace_back("lognormal.log_mean", format_double(ln.log_mean));
        kv.emplace_back("lognormal.log_var", format_double(ln.log_var));
        kv.emplace_back("lognormal.ks", format_double(ln.ks_statistic));
        kv.emplace_back("lognormal.p_value", format_double(ln.p_value));
    } else {
        kv.emplace_back("lognormal.p_value", "skipped");
    }

    const TrajectoryRow& last = rows.back();
    const EquilibriumReport eq =
        classify_equilibrium({cfg.model.rho_F, last.S, last.Y}, cfg.model);
    kv.emplace_back("equilibrium.label", to_string(eq.label));
    kv.emplace_back("equilibrium.S", format_double(last.S));
    kv.emplace_back("equilibrium.Y", format_double(last.Y));
    kv.emplace_back("equilibrium.phi0", format_double(eq.phi0));
    constexpr std::array<const char*, 3> names = {"i", "ii", "iii"};
    for (std::size_t c = 0; c < eq.checks.size(); ++c) {
        const auto& check = eq.checks[c];
        const std::string prefix = std::string("equilibrium.") + names[c] + '.';
        kv.emplace_back(prefix + "admissible", yes_no(check.admissible));
        for (const Residual& r : check.residuals)
            kv.emplace_back(prefix + r.name, format_double(r.value));
    }

    write_atomic(dir / "analysis_report.txt", format_key_values(kv));
    write_atomic(dir / "tail_fits.csv", tail_table);
    return 0;
}

}  // namespace kinprice
