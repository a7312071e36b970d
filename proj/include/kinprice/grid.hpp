#pragma once

#include <functional>
#include <span>

#include <Eigen/Core>

namespace kinprice {

enum class GridDomain { opinion, price };

/// Piecewise-constant density on a 1-D partition: `values[i]` is the average of
/// the density over [edges[i], edges[i+1]].
struct DensityGrid {
    Eigen::ArrayXd edges;
    Eigen::ArrayXd values;
    GridDomain domain = GridDomain::opinion;

    Eigen::Index size() const { return values.size(); }
    Eigen::ArrayXd widths() const { return edges.tail(size()) - edges.head(size()); }
    Eigen::ArrayXd centers() const { return 0.5 * (edges.tail(size()) + edges.head(size())); }

    double mass() const { return (values * widths()).sum(); }
    /// Exact first moment of the piecewise-constant density.
    double first_moment() const;
    /// Exact second moment of the piecewise-constant density.
    double second_moment() const;
    /// first_moment() / mass().
    double mean() const { return first_moment() / mass(); }
};

/// n uniform cells on [-1, 1].
DensityGrid make_opinion_grid(Eigen::Index n);
/// n logarithmically spaced cells on [s_min, s_max].
DensityGrid make_price_grid(Eigen::Index n, double s_min, double s_max);

/// Cell averages of a density given through its cumulative distribution,
/// scaled so the total mass is `mass` times the CDF increment over the grid.
void fill_from_cdf(DensityGrid& grid, const std::function<double(double)>& cdf,
                   double mass = 1.0);

/// Cell averages of a density by 8-point Gauss-Legendre quadrature per cell.
void fill_from_density(DensityGrid& grid, const std::function<double(double)>& density);

/// Normalized histogram of samples on the grid's partition; each sample
/// carries `sample_mass`. Samples outside the partition are dropped.
DensityGrid histogram(std::span<const double> samples, const DensityGrid& partition,
                      double sample_mass);

}  // namespace kinprice
