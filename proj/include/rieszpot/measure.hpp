#ifndef RIESZPOT_MEASURE_HPP_
#define RIESZPOT_MEASURE_HPP_

#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <vector>

#include "rieszpot/csv.hpp"
#include "rieszpot/error.hpp"
#include "rieszpot/geometry.hpp"
#include "rieszpot/region.hpp"
#include "rieszpot/riesz_params.hpp"

namespace rieszpot {

/// Finitely supported nonnegative measure: weights on a mollified point cloud.
class DiscreteMeasure {
public:
    DiscreteMeasure() = default;
    explicit DiscreteMeasure(std::size_t dim) : cloud_(dim, SampleMode::surface) {}
    DiscreteMeasure(PointCloud cloud, std::vector<double> weights)
        : cloud_(std::move(cloud)), weights_(std::move(weights)) {
        require(weights_.size() == cloud_.size(), "weights and cloud differ in length");
        for (double w : weights_) require(std::isfinite(w) && w >= 0.0, "weights must be finite and nonnegative");
    }

    const PointCloud& cloud() const { return cloud_; }
    const std::vector<double>& weights() const { return weights_; }
    std::size_t size() const { return weights_.size(); }
    std::size_t dim() const { return cloud_.dim(); }
    bool empty() const { return weights_.empty(); }
    double weight(std::size_t i) const { return weights_[i]; }

    bool operator==(const DiscreteMeasure&) const = default;

private:
    PointCloud cloud_;
    std::vector<double> weights_;
};

/// xi = plus - minus; potentials are evaluated as the difference of the parts.
struct SignedDecomposition {
    DiscreteMeasure plus;
    DiscreteMeasure minus;
};

inline double total_mass(const DiscreteMeasure& mu) {
    return std::accumulate(mu.weights().begin(), mu.weights().end(), 0.0);
}

/// Single atom at p standing in for mass times the Dirac measure at p.
inline DiscreteMeasure mollified_dirac(const Point& p, double mass, double delta) {
    require(std::isfinite(mass) && mass > 0.0, "Dirac mass must be positive");
    require(std::isfinite(delta) && delta > 0.0, "Dirac cell radius must be positive");
    return DiscreteMeasure(PointCloud(p.dim(), p.vector(), {delta}), {mass});
}

/// mu restricted to the region: keeps exactly the atoms inside, weights unchanged.
inline DiscreteMeasure restrict(const DiscreteMeasure& mu, const Region& region) {
    PointCloud cloud(mu.dim(), mu.cloud().tag());
    std::vector<double> weights;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (!contains(region, mu.cloud().point(i))) continue;
        cloud.push_back(mu.cloud().point(i), mu.cloud().cell_radius(i));
        weights.push_back(mu.weight(i));
    }
    return DiscreteMeasure(std::move(cloud), std::move(weights));
}

/**
 * @brief Kelvin transform with respect to the unit sphere S(y, 1).
 *
 * The atom w at x becomes the atom w |x - y|^{alpha - n} at J_y(x), and the
 * cell radius delta becomes delta / |x - y|^2.
 */
inline DiscreteMeasure kelvin_transform(const DiscreteMeasure& nu, const Inversion& inv, const RieszParams& params) {
    params.validate();
    require(nu.dim() == params.n && inv.center.dim() == params.n, "dimension mismatch in Kelvin transform");
    PointCloud cloud(nu.dim(), nu.cloud().tag());
    std::vector<double> weights;
    weights.reserve(nu.size());
    for (std::size_t i = 0; i < nu.size(); ++i) {
        const Point x = nu.cloud().point_value(i);
        const double r2 = squared_distance(x.coords(), inv.center.coords());
        require(r2 > 0.0, "Kelvin transform is undefined for an atom at the inversion center");
        const Point image = invert(inv, x);
        cloud.push_back(image.coords(), nu.cloud().cell_radius(i) / r2);
        weights.push_back(nu.weight(i) * std::pow(std::sqrt(r2), params.exponent()));
    }
    return DiscreteMeasure(std::move(cloud), std::move(weights));
}

/// Writes `x1,...,xn,delta,weight`.
inline void write_measure_csv(std::ostream& out, const DiscreteMeasure& mu) {
    out << coordinate_header(mu.dim()) << ",delta,weight\n";
    for (std::size_t i = 0; i < mu.size(); ++i) {
        for (double c : mu.cloud().point(i)) out << format_real(c) << ',';
        out << format_real(mu.cloud().cell_radius(i)) << ',' << format_real(mu.weight(i)) << '\n';
    }
}

inline DiscreteMeasure read_measure_csv(std::istream& in) {
    const NumericTable t = read_numeric_csv(in);
    const std::size_t cols = t.header.size();
    require(cols >= 4 && t.header[cols - 2] == "delta" && t.header[cols - 1] == "weight" && t.header.front() == "x1",
            "measure CSV must have header x1,...,xn,delta,weight");
    const std::size_t dim = cols - 2;
    std::vector<double> coords, radii, weights;
    for (const auto& r : t.rows) {
        coords.insert(coords.end(), r.begin(), r.begin() + static_cast<std::ptrdiff_t>(dim));
        radii.push_back(r[dim]);
        weights.push_back(r[dim + 1]);
    }
    return DiscreteMeasure(PointCloud(dim, std::move(coords), std::move(radii)), std::move(weights));
}

} // namespace rieszpot

#endif // RIESZPOT_MEASURE_HPP_
