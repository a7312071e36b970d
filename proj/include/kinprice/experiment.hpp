#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "kinprice/config.hpp"

namespace kinprice {

// Subcommand drivers. Each writes into one experiment directory and returns a
// process exit status: 0 success, 2 runtime failure (crash floor, non-convergence)
// with the report still written.

/// Resolves `<output_dir>/<name>`, prefixed by $KINPRICE_OUTPUT_ROOT when that is
/// set and output_dir is relative.
std::filesystem::path experiment_directory(const ExperimentConfig& cfg);

/// Writes config.cfg, trajectory.csv, snapshots/, opinions_final.csv,
/// prices_final.csv and run_report.txt.
int simulate_mc(const ExperimentConfig& cfg, const std::filesystem::path& dir);

/// Writes fp_trajectory.csv, fp_snapshots/ and fp_report.txt.
int solve_fp(const ExperimentConfig& cfg, const std::filesystem::path& dir);

/// Writes steady_grid.csv, steady_analytic.csv and steady_report.txt.
int steady_state(const ExperimentConfig& cfg, const std::filesystem::path& dir);

/// Reads a simulate-mc directory and writes analysis_report.txt and tail_fits.csv.
int analyze(const std::filesystem::path& dir);

using KeyValues = std::vector<std::pair<std::string, std::string>>;
std::string format_key_values(const KeyValues& kv);

/// Worker count from $KINPRICE_THREADS (default: hardware concurrency, at least 1).
unsigned thread_count();

}  // namespace kinprice
