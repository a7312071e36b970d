#include "kinprice/grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace kinprice {

double DensityGrid::first_moment() const {
    const Eigen::Index n = size();
    const auto lo = edges.head(n);
    const auto hi = edges.tail(n);
    return (values * (hi.square() - lo.square()) / 2.0).sum();
}

double DensityGrid::second_moment() const {
    const Eigen::Index n = size();
    const auto lo = edges.head(n);
    const auto hi = edges.tail(n);
    return (values * (hi.cube() - lo.cube()) / 3.0).sum();
}

DensityGrid make_opinion_grid(Eigen::Index n) {
    if (n < 2) throw std::invalid_argument("make_opinion_grid: need at least 2 cells");
    DensityGrid grid;
    grid.domain = GridDomain::opinion;
    grid.edges = Eigen::ArrayXd::LinSpaced(n + 1, -1.0, 1.0);
    grid.edges(0) = -1.0;
    grid.edges(n) = 1.0;
    grid.values = Eigen::ArrayXd::Zero(n);
    return grid;
}

DensityGrid make_price_grid(Eigen::Index n, double s_min, double s_max) {
    if (n < 2) throw std::invalid_argument("make_price_grid: need at least 2 cells");
    if (!(s_min > 0.0 && s_max > s_min))
        throw std::invalid_argument("make_price_grid: need 0 < s_min < s_max");
    DensityGrid grid;
    grid.domain = GridDomain::price;
    grid.edges = Eigen::ArrayXd::LinSpaced(n + 1, std::log(s_min), std::log(s_max)).exp();
    grid.edges(0) = s_min;
    grid.edges(n) = s_max;
    grid.values = Eigen::ArrayXd::Zero(n);
    return grid;
}

void fill_from_cdf(DensityGrid& grid, const std::function<double(double)>& cdf, double mass) {
    const Eigen::Index n = grid.size();
    double previous = cdf(grid.edges(0));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double next = cdf(grid.edges(i + 1));
        grid.values(i) = std::max(0.0, mass * (next - previous)) / (grid.edges(i + 1) - grid.edges(i));
        previous = next;
    }
}

void fill_from_density(DensityGrid& grid, const std::function<double(double)>& density) {
    static constexpr std::array<double, 4> nodes = {0.1834346424956498, 0.5255324099163290,
                                                    0.7966664774136267, 0.9602898564975363};
    static constexpr std::array<double, 4> weights = {0.3626837833783620, 0.3137066458778873,
                                                      0.2223810344533745, 0.1012285362903763};
    const Eigen::Index n = grid.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mid = 0.5 * (grid.edges(i) + grid.edges(i + 1));
        const double half = 0.5 * (grid.edges(i + 1) - grid.edges(i));
        double sum = 0.0;
        for (std::size_t q = 0; q < nodes.size(); ++q) {
            sum += weights[q] * (density(mid - half * nodes[q]) + density(mid + half * nodes[q]));
        }
        grid.values(i) = 0.5 * sum;
    }
}

DensityGrid histogram(std::span<const double> samples, const DensityGrid& partition,
                      double sample_mass) {
    DensityGrid out;
    out.domain = partition.domain;
    out.edges = partition.edges;
    out.values = Eigen::ArrayXd::Zero(partition.size());

    const double* first = out.edges.data();
    const double* last = first + out.edges.size();
    for (double x : samples) {
        if (x < *first || x > *(last - 1)) continue;
        auto it = std::upper_bound(first, last, x);
        auto cell = static_cast<Eigen::Index>(it - first) - 1;
        cell = std::clamp<Eigen::Index>(cell, 0, out.size() - 1);
        out.values(cell) += sample_mass;
    }
    out.values /= out.widths();
    return out;
}

}  // namespace kinprice
