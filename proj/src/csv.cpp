#include "kinprice/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace kinprice {

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string trajectory_csv(const std::vector<TrajectoryRow>& rows) {
    std::string out = "t,S,Y,E,acc_op,acc_pr\n";
    for (const auto& r : rows) {
        out += format_double(r.t) + ',' + format_double(r.S) + ',' + format_double(r.Y) + ',' +
               format_double(r.E) + ',' + format_double(r.acc_op) + ',' + format_double(r.acc_pr) +
               '\n';
    }
    return out;
}

namespace {

std::string three_column_csv(const DensityGrid& grid, std::string_view header) {
    std::string out(header);
    out += '\n';
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        out += format_double(grid.edges(i)) + ',' + format_double(grid.edges(i + 1)) + ',' +
               format_double(grid.values(i)) + '\n';
    }
    return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

std::vector<double> parse_row(const std::string& line, std::size_t columns,
                              const std::filesystem::path& path, std::size_t line_no) {
    std::vector<double> out;
    const char* p = line.data();
    const char* end = p + line.size();
    while (true) {
        double v = 0.0;
        const auto res = std::from_chars(p, end, v);
        if (res.ec != std::errc()) throw ParseError(path.string(), line_no, "malformed number");
        out.push_back(v);
        p = res.ptr;
        if (p == end) break;
        if (*p != ',') throw ParseError(path.string(), line_no, "expected ','");
        ++p;
    }
    if (out.size() != columns)
        throw ParseError(path.string(), line_no,
                         "expected " + std::to_string(columns) + " columns, got " +
                             std::to_string(out.size()));
    return out;
}

std::vector<std::vector<double>> read_table(const std::filesystem::path& path,
                                            std::size_t columns) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw ParseError(path.string(), 1, "missing header");
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        rows.push_back(parse_row(lines[i], columns, path, i + 1));
    }
    return rows;
}

}  // namespace

std::string histogram_csv(const DensityGrid& grid) {
    return three_column_csv(grid, "bin_left,bin_right,density");
}

std::string grid_csv(const DensityGrid& grid) {
    return three_column_csv(grid, "edge_left,edge_right,value");
}

std::string samples_csv(std::string_view column, const Eigen::ArrayXd& values) {
    std::string out(column);
    out += '\n';
    for (Eigen::Index i = 0; i < values.size(); ++i) out += format_double(values(i)) + '\n';
    return out;
}

std::vector<TrajectoryRow> read_trajectory_csv(const std::filesystem::path& path) {
    std::vector<TrajectoryRow> rows;
    for (const auto& r : read_table(path, 6)) rows.push_back({r[0], r[1], r[2], r[3], r[4], r[5]});
    return rows;
}

DensityGrid read_density_csv(const std::filesystem::path& path, GridDomain domain) {
    const auto table = read_table(path, 3);
    if (table.empty()) throw ParseError(path.string(), 2, "no cells");
    DensityGrid grid;
    grid.domain = domain;
    const auto n = static_cast<Eigen::Index>(table.size());
    grid.edges.resize(n + 1);
    grid.values.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = table[static_cast<std::size_t>(i)];
        if (i > 0 && r[0] != grid.edges(i))
            throw ParseError(path.string(), static_cast<std::size_t>(i) + 2, "cells not contiguous");
        grid.edges(i) = r[0];
        grid.edges(i + 1) = r[1];
        grid.values(i) = r[2];
    }
    return grid;
}

std::vector<double> read_samples_csv(const std::filesystem::path& path) {
    std::vector<double> out;
    for (const auto& r : read_table(path, 1)) out.push_back(r[0]);
    return out;
}

}  // namespace kinprice
