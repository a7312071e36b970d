#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kinprice/grid.hpp"
#include "kinprice/model.hpp"

namespace kinprice {

// ---------------------------------------------------------------------------
// Heavy tails

struct TailFit {
    double mu = 0.0;          // estimated tail exponent
    std::int64_t k = 0;       // order statistics used
    double half_width = 0.0;  // asymptotic 95% half-width 1.96 mu / sqrt(k)
};

inline constexpr std::int64_t min_tail_count = 20;

/// Hill estimator over the k largest samples. Requires n > k >= 20 and
/// strictly positive samples.
TailFit hill_estimator(std::span<const double> samples, std::int64_t k);

/// floor(n^{2/3}).
std::int64_t default_tail_count(std::size_t n);

/// Fits at k/2, k and 2k (entries whose k is out of range are skipped).
std::vector<TailFit> hill_sensitivity(std::span<const double> samples, std::int64_t k);

// ---------------------------------------------------------------------------
// Lognormality

struct LognormalityReport {
    std::int64_t n = 0;
    double log_mean = 0.0;
    double log_var = 0.0;
    double ks_statistic = 0.0;
    double p_value = 0.0;
};

inline constexpr std::int64_t min_lognormal_samples = 1000;

/// Kolmogorov-Smirnov distance between the log-samples and the normal law with
/// their sample mean and variance. Requires n >= 1000 positive samples.
LognormalityReport lognormality_check(std::span<const double> samples);

/// Asymptotic Kolmogorov survival function with Stephens' finite-n correction.
double kolmogorov_p_value(double d, std::int64_t n);

// ---------------------------------------------------------------------------
// Equilibria

enum class Equilibrium { i, ii, iii, none };

std::string to_string(Equilibrium label);

struct MeasuredState {
    double rho_F;
    double S;
    double Y;
};

struct EquilibriumTolerances {
    double price_rel = 1e-2;  // on |S - S_F| / S_F, and S / S_F for a crash
    double propensity = 1e-2;  // absolute, on Y
    double phi0 = 1e-8;        // absolute, on Phi(0)
};

struct Residual {
    std::string name;
    double value;
    double tolerance;
};

struct ConfigurationCheck {
    bool admissible = false;  // population gate (rho_F != 0 or rho_F == 0)
    std::vector<Residual> residuals;
    bool satisfied = false;
};

struct EquilibriumReport {
    Equilibrium label = Equilibrium::none;
    MeasuredState state{};
    double phi0 = 0.0;
    /// Nontrivial roots of Y = Phi(beta t_C Y) in [-1, 1].
    std::vector<double> crash_fixed_points;
    std::array<ConfigurationCheck, 3> checks;
};

/// Roots of Y = Phi(beta t_C Y) on [-1, 1] by scan + bisection. The trivial
/// root Y = 0 (present whenever Phi(0) = 0) is omitted.
std::vector<double> crash_fixed_points(const ModelParams& params);

EquilibriumReport classify_equilibrium(const MeasuredState& state, const ModelParams& params,
                                       const EquilibriumTolerances& tol = {});

// ---------------------------------------------------------------------------
// Densities

/// Mass of `grid` inside each cell of `partition` (piecewise-constant overlap).
Eigen::ArrayXd rebin_mass(const DensityGrid& grid, const Eigen::ArrayXd& partition);

/// L1 distance after rebinning both densities onto the coarser partition; mass
/// outside that partition counts in full. Throws when the supports are disjoint.
double l1_distance(const DensityGrid& a, const DensityGrid& b);

}  // namespace kinprice
