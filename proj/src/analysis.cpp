#include "kinprice/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace kinprice {

TailFit hill_estimator(std::span<const double> samples, std::int64_t k) {
    const auto n = static_cast<std::int64_t>(samples.size());
    if (k < min_tail_count) throw std::invalid_argument("hill_estimator: k must be >= 20");
    if (n <= k) throw std::invalid_argument("hill_estimator: need more than k samples");
    for (double x : samples)
        if (!(x > 0.0)) throw std::domain_error("hill_estimator: samples must be > 0");

    std::vector<double> sorted(samples.begin(), samples.end());
    std::partial_sort(sorted.begin(), sorted.begin() + k + 1, sorted.end(), std::greater<>());
    const double threshold = sorted[static_cast<std::size_t>(k)];
    double sum = 0.0;
    for (std::int64_t i = 0; i < k; ++i) sum += std::log(sorted[static_cast<std::size_t>(i)] / threshold);
    if (!(sum > 0.0)) throw std::domain_error("hill_estimator: degenerate tail (equal order statistics)");

    TailFit fit;
    fit.k = k;
    fit.mu = static_cast<double>(k) / sum;
    fit.half_width = 1.96 * fit.mu / std::sqrt(static_cast<double>(k));
    return fit;
}

std::int64_t default_tail_count(std::size_t n) {
    auto k = static_cast<std::int64_t>(std::floor(std::cbrt(static_cast<double>(n) * n)));
    // exact integer floor of n^{2/3}
    const auto n2 = static_cast<unsigned __int128>(n) * n;
    auto cube = [](std::int64_t x) { return static_cast<unsigned __int128>(x) * x * x; };
    while (k > 0 && cube(k) > n2) --k;
    while (cube(k + 1) <= n2) ++k;
    return k;
}

std::vector<TailFit> hill_sensitivity(std::span<const double> samples, std::int64_t k) {
    std::vector<TailFit> fits;
    const auto n = static_cast<std::int64_t>(samples.size());
    for (std::int64_t kk : {k / 2, k, 2 * k}) {
        if (kk >= min_tail_count && kk < n) fits.push_back(hill_estimator(samples, kk));
    }
    return fits;
}

// ---------------------------------------------------------------------------

double kolmogorov_p_value(double d, std::int64_t n) {
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    const double lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    if (lambda <= 0.0) return 1.0;
    if (lambda < 1.18) {
        // small-lambda form: 1 - sqrt(2 pi)/lambda sum exp(-(2j-1)^2 pi^2 / (8 lambda^2))
        double sum = 0.0;
        for (int j = 1; j <= 20; ++j) {
            const double m = 2.0 * j - 1.0;
            sum += std::exp(-m * m * M_PI * M_PI / (8.0 * lambda * lambda));
        }
        return std::clamp(1.0 - std::sqrt(2.0 * M_PI) / lambda * sum, 0.0, 1.0);
    }
    double sum = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += (j % 2 == 1 ? term : -term);
        if (term < 1e-300) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

LognormalityReport lognormality_check(std::span<const double> samples) {
    const auto n = static_cast<std::int64_t>(samples.size());
    if (n < min_lognormal_samples)
        throw std::invalid_argument("lognormality_check: need at least 1000 samples");

    std::vector<double> logs;
    logs.reserve(samples.size());
    for (double x : samples) {
        if (!(x > 0.0)) throw std::domain_error("lognormality_check: samples must be > 0");
        logs.push_back(std::log(x));
    }
    std::sort(logs.begin(), logs.end());

    LognormalityReport report;
    report.n = n;
    double mean = 0.0;
    for (double v : logs) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : logs) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n - 1);
    report.log_mean = mean;
    report.log_var = var;
    if (!(var > 0.0)) throw std::domain_error("lognormality_check: zero log-variance");

    const double sd = std::sqrt(var);
    double d = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double cdf = 0.5 * std::erfc(-(logs[static_cast<std::size_t>(i)] - mean) / (sd * M_SQRT2));
        const double lo = static_cast<double>(i) / static_cast<double>(n);
        const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
        d = std::max({d, cdf - lo, hi - cdf});
    }
    report.ks_statistic = d;
    report.p_value = kolmogorov_p_value(d, n);
    return report;
}

// ---------------------------------------------------------------------------

std::string to_string(Equilibrium label) {
    switch (label) {
        case Equilibrium::i: return "i";
        case Equilibrium::ii: return "ii";
        case Equilibrium::iii: return "iii";
        case Equilibrium::none: return "none";
    }
    return "none";
}

std::vector<double> crash_fixed_points(const ModelParams& params) {
    const double gain = params.beta * params.t_C;
    auto g = [&](double Y) { return value_function(gain * Y, params.value_fn) - Y; };
    const bool trivial_root = std::abs(value_function(0.0, params.value_fn)) == 0.0;

    constexpr int intervals = 2000;
    std::vector<double> roots;
    auto keep = [&](double r) {
        if (trivial_root && std::abs(r) < 1e-9) return;
        for (double existing : roots)
            if (std::abs(existing - r) < 1e-9) return;
        roots.push_back(r);
    };
    double lo = -1.0;
    double g_lo = g(lo);
    for (int k = 1; k <= intervals; ++k) {
        const double hi = -1.0 + 2.0 * k / intervals;
        const double g_hi = g(hi);
        if (g_lo == 0.0) keep(lo);
        if ((g_lo < 0.0 && g_hi > 0.0) || (g_lo > 0.0 && g_hi < 0.0)) {
            double a = lo, b = hi, ga = g_lo;
            for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
                const double mid = 0.5 * (a + b);
                const double gm = g(mid);
                if ((gm < 0.0) == (ga < 0.0)) {
                    a = mid;
                    ga = gm;
                } else {
                    b = mid;
                }
            }
            keep(0.5 * (a + b));
        }
        lo = hi;
        g_lo = g_hi;
    }
    if (g_lo == 0.0) keep(lo);
    std::sort(roots.begin(), roots.end());
    return roots;
}

EquilibriumReport classify_equilibrium(const MeasuredState& state, const ModelParams& params,
                                       const EquilibriumTolerances& tol) {
    EquilibriumReport report;
    report.state = state;
    report.phi0 = value_function(0.0, params.value_fn);
    report.crash_fixed_points = crash_fixed_points(params);

    const double price_dev = std::abs(state.S - params.S_F) / params.S_F;
    const double phi0_abs = std::abs(report.phi0);

    auto& fundamental = report.checks[0];
    fundamental.admissible = state.rho_F != 0.0;
    fundamental.residuals = {{"S_minus_S_F_rel", price_dev, tol.price_rel},
                             {"Y", std::abs(state.Y), tol.propensity},
                             {"phi0", phi0_abs, tol.phi0}};

    auto& speculative = report.checks[1];
    speculative.admissible = state.rho_F == 0.0;
    speculative.residuals = {{"Y", std::abs(state.Y), tol.propensity},
                             {"phi0", phi0_abs, tol.phi0}};

    auto& crash = report.checks[2];
    crash.admissible = state.rho_F == 0.0 && !report.crash_fixed_points.empty();
    double nearest = std::numeric_limits<double>::infinity();
    for (double root : report.crash_fixed_points) nearest = std::min(nearest, std::abs(state.Y - root));
    crash.residuals = {{"Y_minus_Y_star", nearest, tol.propensity},
                       {"S_rel", std::abs(state.S) / params.S_F, tol.price_rel}};

    for (auto& check : report.checks) {
        check.satisfied = check.admissible &&
                          std::all_of(check.residuals.begin(), check.residuals.end(),
                                      [](const Residual& r) { return r.value <= r.tolerance; });
    }
    constexpr std::array labels = {Equilibrium::i, Equilibrium::ii, Equilibrium::iii};
    for (std::size_t c = 0; c < labels.size(); ++c) {
        if (report.checks[c].satisfied) {
            report.label = labels[c];
            break;
        }
    }
    return report;
}

// ---------------------------------------------------------------------------

Eigen::ArrayXd rebin_mass(const DensityGrid& grid, const Eigen::ArrayXd& partition) {
    const Eigen::Index m = partition.size() - 1;
    Eigen::ArrayXd mass = Eigen::ArrayXd::Zero(m);
    Eigen::Index j = 0;
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const double lo = grid.edges(i);
        const double hi = grid.edges(i + 1);
        while (j < m && partition(j + 1) <= lo) ++j;
        for (Eigen::Index jj = j; jj < m && partition(jj) < hi; ++jj) {
            const double overlap = std::min(hi, partition(jj + 1)) - std::max(lo, partition(jj));
            if (overlap > 0.0) mass(jj) += grid.values(i) * overlap;
        }
    }
    return mass;
}

double l1_distance(const DensityGrid& a, const DensityGrid& b) {
    const double lo = std::max(a.edges(0), b.edges(0));
    const double hi = std::min(a.edges(a.size()), b.edges(b.size()));
    if (!(lo < hi)) throw std::invalid_argument("l1_distance: disjoint supports");

    const Eigen::ArrayXd& partition = a.size() <= b.size() ? a.edges : b.edges;
    const Eigen::ArrayXd ma = rebin_mass(a, partition);
    const Eigen::ArrayXd mb = rebin_mass(b, partition);
    const double outside_a = std::max(0.0, a.mass() - ma.sum());
    const double outside_b = std::max(0.0, b.mass() - mb.sum());
    return (ma - mb).abs().sum() + outside_a + outside_b;
}

}  // namespace kinprice
