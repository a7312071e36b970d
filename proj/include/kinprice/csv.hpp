#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kinprice/grid.hpp"
#include "kinprice/monte_carlo.hpp"

namespace kinprice {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& what)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + what) {}
};

/// Shortest-safe decimal text: 17 significant digits, '.' separator, locale-free.
std::string format_double(double value);

/// Writes `content` to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

std::string trajectory_csv(const std::vector<TrajectoryRow>& rows);      // t,S,Y,E,acc_op,acc_pr
std::string histogram_csv(const DensityGrid& grid);                     // bin_left,bin_right,density
std::string grid_csv(const DensityGrid& grid);                          // edge_left,edge_right,value
std::string samples_csv(std::string_view column, const Eigen::ArrayXd& values);

std::vector<TrajectoryRow> read_trajectory_csv(const std::filesystem::path& path);
/// Reads either histogram or grid CSVs (three numeric columns).
DensityGrid read_density_csv(const std::filesystem::path& path, GridDomain domain);
std::vector<double> read_samples_csv(const std::filesystem::path& path);

}  // namespace kinprice
