#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "kinprice/acceptance.hpp"
#include "kinprice/csv.hpp"
#include "kinprice/experiment.hpp"

namespace fs = std::filesystem;
using namespace kinprice;

namespace {

ExperimentConfig load(const std::string& path, std::optional<std::uint64_t> seed) {
    ExperimentConfig cfg = load_config(path);
    if (seed) cfg.mc.seed = *seed;
    return cfg;
}

int report_dir(int status, const fs::path& dir) {
    std::cout << "wrote " << dir.string() << '\n';
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kinetic opinion/price model: particle and Fokker-Planck solvers"};
    app.require_subcommand(1);

    std::optional<std::uint64_t> seed;
    app.add_option("--seed", seed, "Override mc.seed from the config");

    std::string config_path;
    std::string run_dir;
    std::vector<int> ids;

    auto* mc = app.add_subcommand("simulate-mc", "Run the Monte Carlo particle solver");
    mc->add_option("config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
    auto* fp = app.add_subcommand("solve-fp", "Run the coupled Fokker-Planck solver");
    fp->add_option("config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
    auto* steady = app.add_subcommand("steady-state", "Solve the price steady state and compare to the Gamma law");
    steady->add_option("config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
    auto* an = app.add_subcommand("analyze", "Tail fit, lognormality and equilibrium report of a run");
    an->add_option("dir", run_dir, "Directory written by simulate-mc")->required()->check(CLI::ExistingDirectory);
    auto* verify = app.add_subcommand("verify", "Run the acceptance suite");
    verify->add_option("--criterion", ids, "Only run the listed criteria (1-8)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (mc->parsed()) {
            const ExperimentConfig cfg = load(config_path, seed);
            const fs::path dir = experiment_directory(cfg);
            return report_dir(simulate_mc(cfg, dir), dir);
        }
        if (fp->parsed()) {
            const ExperimentConfig cfg = load(config_path, seed);
            const fs::path dir = experiment_directory(cfg);
            return report_dir(solve_fp(cfg, dir), dir);
        }
        if (steady->parsed()) {
            const ExperimentConfig cfg = load(config_path, seed);
            const fs::path dir = experiment_directory(cfg);
            return report_dir(steady_state(cfg, dir), dir);
        }
        if (an->parsed()) return report_dir(analyze(run_dir), run_dir);
        if (verify->parsed()) {
            const auto results = acceptance::run_all(std::cout, ids);
            const auto failed = std::count_if(results.begin(), results.end(),
                                              [](const auto& r) { return !r.passed; });
            std::cout << results.size() - failed << '/' << results.size() << " criteria passed\n";
            return failed == 0 ? 0 : 2;
        }
    } catch (const ParameterError& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return 1;
    } catch (const ParseError& e) {
        std::cerr << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
