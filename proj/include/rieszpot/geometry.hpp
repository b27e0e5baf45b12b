#ifndef RIESZPOT_GEOMETRY_HPP_
#define RIESZPOT_GEOMETRY_HPP_

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "rieszpot/error.hpp"

namespace rieszpot {

/// A point of R^n, n >= 2, with finite coordinates.
class Point {
public:
    Point() = default;
    explicit Point(std::vector<double> coords) : coords_(std::move(coords)) { validate(); }
    Point(std::initializer_list<double> coords) : coords_(coords) { validate(); }

    static Point origin(std::size_t n) { return Point(std::vector<double>(n, 0.0)); }

    std::size_t dim() const { return coords_.size(); }
    double operator[](std::size_t i) const { return coords_[i]; }
    std::span<const double> coords() const { return coords_; }
    const std::vector<double>& vector() const { return coords_; }

    bool operator==(const Point&) const = default;

private:
    void validate() const {
        require(coords_.size() >= 2, "point dimension must be at least 2");
        for (double c : coords_) require(std::isfinite(c), "point coordinates must be finite");
    }
    std::vector<double> coords_;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_distance(a, b));
}

inline double distance(const Point& a, const Point& b) {
    require(a.dim() == b.dim(), "dimension mismatch");
    return distance(a.coords(), b.coords());
}

inline double norm(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
}

/// Inversion J_y in the unit sphere S(y, 1).
struct Inversion {
    Point center;
};

/// Maps p != center to the point on the ray from the center through p
/// whose distance to the center is 1/|p - center|.
inline Point invert(const Inversion& inv, const Point& p) {
    require(p.dim() == inv.center.dim(), "dimension mismatch between point and inversion center");
    const double r2 = squared_distance(p.coords(), inv.center.coords());
    require(r2 > 0.0, "cannot invert the inversion pole");
    std::vector<double> out(p.dim());
    for (std::size_t k = 0; k < p.dim(); ++k)
        out[k] = inv.center[k] + (p[k] - inv.center[k]) / r2;
    return Point(std::move(out));
}

enum class SampleMode { surface, volume };

inline const char* to_string(SampleMode m) { return m == SampleMode::surface ? "surface" : "volume"; }

inline SampleMode sample_mode_from_string(const std::string& s) {
    if (s == "surface") return SampleMode::surface;
    if (s == "volume") return SampleMode::volume;
    throw InvalidInput("unknown sample mode '" + s + "'");
}

/**
 * @brief Points with per-point mollification radii.
 *
 * Coordinates are stored row-major (point i occupies [i*dim, (i+1)*dim)).
 */
class PointCloud {
public:
    PointCloud() = default;
    PointCloud(std::size_t dim, SampleMode tag) : dim_(dim), tag_(tag) {
        require(dim >= 2, "point cloud dimension must be at least 2");
    }
    PointCloud(std::size_t dim, std::vector<double> coords, std::vector<double> cellRadii,
               SampleMode tag = SampleMode::surface)
        : dim_(dim), coords_(std::move(coords)), radii_(std::move(cellRadii)), tag_(tag) {
        require(dim >= 2, "point cloud dimension must be at least 2");
        require(coords_.size() == dim_ * radii_.size(), "coordinate and radius lists differ in length");
        for (double c : coords_) require(std::isfinite(c), "point coordinates must be finite");
        for (double d : radii_) require(std::isfinite(d) && d > 0.0, "cell radii must be positive");
    }

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return radii_.size(); }
    bool empty() const { return radii_.empty(); }
    SampleMode tag() const { return tag_; }

    std::span<const double> point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
    Point point_value(std::size_t i) const {
        auto p = point(i);
        return Point(std::vector<double>(p.begin(), p.end()));
    }
    double cell_radius(std::size_t i) const { return radii_[i]; }
    const std::vector<double>& coords() const { return coords_; }
    const std::vector<double>& cell_radii() const { return radii_; }

    void push_back(std::span<const double> p, double cellRadius) {
        require(p.size() == dim_, "dimension mismatch when appending to point cloud");
        require(std::isfinite(cellRadius) && cellRadius > 0.0, "cell radii must be positive");
        coords_.insert(coords_.end(), p.begin(), p.end());
        radii_.push_back(cellRadius);
    }

    /// Smallest pairwise distance (infinity for fewer than two points).
    double min_pairwise_distance() const {
        double best = INFINITY;
        for (std::size_t i = 0; i < size(); ++i)
            for (std::size_t j = i + 1; j < size(); ++j)
                best = std::min(best, squared_distance(point(i), point(j)));
        return std::sqrt(best);
    }

    bool operator==(const PointCloud&) const = default;

private:
    std::size_t dim_ = 3;
    std::vector<double> coords_;
    std::vector<double> radii_;
    SampleMode tag_ = SampleMode::surface;
};

} // namespace rieszpot

#endif // RIESZPOT_GEOMETRY_HPP_
