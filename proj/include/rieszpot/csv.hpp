#ifndef RIESZPOT_CSV_HPP_
#define RIESZPOT_CSV_HPP_

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rieszpot/error.hpp"
#include "rieszpot/geometry.hpp"

namespace rieszpot {

/// Shortest round-trip decimal form (17 significant digits).
inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct NumericTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        std::size_t b = 0;
        while (b < cell.size() && cell[b] == ' ') ++b;
        out.push_back(cell.substr(b));
    }
    return out;
}

inline NumericTable read_numeric_csv(std::istream& in) {
    NumericTable t;
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "CSV input is empty");
    t.header = split_csv_line(line);
    std::size_t lineNo = 1;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        require(cells.size() == t.header.size(), "CSV line " + std::to_string(lineNo) + " has wrong column count");
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(c, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            require(used == c.size() && !c.empty(), "CSV line " + std::to_string(lineNo) + ": bad number '" + c + "'");
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline std::string coordinate_header(std::size_t dim) {
    std::string h;
    for (std::size_t k = 0; k < dim; ++k) h += (k ? ",x" : "x") + std::to_string(k + 1);
    return h;
}

/// Writes `x1,...,xn,delta`.
inline void write_point_cloud_csv(std::ostream& out, const PointCloud& cloud) {
    out << coordinate_header(cloud.dim()) << ",delta\n";
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (double c : cloud.point(i)) out << format_real(c) << ',';
        out << format_real(cloud.cell_radius(i)) << '\n';
    }
}

inline PointCloud read_point_cloud_csv(std::istream& in, SampleMode tag = SampleMode::surface) {
    const NumericTable t = read_numeric_csv(in);
    require(t.header.size() >= 3 && t.header.back() == "delta", "point cloud CSV must have header x1,...,xn,delta");
    const std::size_t dim = t.header.size() - 1;
    require(t.header.front() == "x1", "point cloud CSV must have header x1,...,xn,delta");
    std::vector<double> coords, radii;
    for (const auto& r : t.rows) {
        coords.insert(coords.end(), r.begin(), r.begin() + static_cast<std::ptrdiff_t>(dim));
        radii.push_back(r.back());
    }
    return PointCloud(dim, std::move(coords), std::move(radii), tag);
}

} // namespace rieszpot

#endif // RIESZPOT_CSV_HPP_
