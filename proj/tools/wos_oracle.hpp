#ifndef RIESZPOT_TOOLS_WOS_ORACLE_HPP_
#define RIESZPOT_TOOLS_WOS_ORACLE_HPP_

// Walk-on-spheres estimates of Newtonian hit probabilities and capacities in R^3.
// Used only as an independent check of the quadratic-program results.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include "rieszpot/error.hpp"
#include "rieszpot/geometry.hpp"
#include "rieszpot/parallel.hpp"
#include "rieszpot/principles.hpp"
#include "rieszpot/region.hpp"
#include "rieszpot/sampling.hpp"

namespace rieszpot::wos {

/// Compact target: a lower bound on the distance plus the absorption radius near x.
class Target {
public:
    virtual ~Target() = default;
    virtual double distance(const std::array<double, 3>& x) const = 0;
    virtual double hit_radius(const std::array<double, 3>& x) const = 0;
    /// Ball containing the target.
    virtual std::array<double, 3> center() const = 0;
    virtual double radius() const = 0;
};

class BallTarget final : public Target {
public:
    BallTarget(std::array<double, 3> c, double r, double eps = 1e-4) : c_(c), r_(r), eps_(eps) {
        require(r > 0.0, "ball radius must be positive");
    }
    double distance(const std::array<double, 3>& x) const override {
        const double d = std::hypot(x[0] - c_[0], x[1] - c_[1], x[2] - c_[2]);
        return std::max(0.0, d - r_);
    }
    double hit_radius(const std::array<double, 3>&) const override { return eps_ * r_; }
    std::array<double, 3> center() const override { return c_; }
    double radius() const override { return r_; }

private:
    std::array<double, 3> c_;
    double r_;
    double eps_;
};

/**
 * Rotation body truncated to |x| <= R. Distances are taken in the meridian
 * half-plane (a, b) = (axial, radial) against the face segment and a polyline
 * of the clipped profile, searched by blocks with bounding boxes.
 */
class RotationTarget final : public Target {
public:
    RotationTarget(Profile profile, std::size_t axis, double R, double spacing = 1e-3, double eps = 1e-3)
        : profile_(profile), axis_(axis), R_(R), eps_(eps) {
        require(R > 0.0 && axis < 3, "invalid rotation body truncation");
        const std::size_t m = static_cast<std::size_t>(std::ceil(R / spacing));
        t_.resize(m + 1);
        r_.resize(m + 1);
        for (std::size_t k = 0; k <= m; ++k) {
            t_[k] = R * static_cast<double>(k) / static_cast<double>(m);
            r_[k] = clipped(t_[k]);
        }
        for (std::size_t b = 0; b + 1 < t_.size(); b += kBlock) {
            const std::size_t e = std::min(b + kBlock, t_.size() - 1);
            Box box{t_[b], t_[e], r_[b], r_[b], b, e};
            for (std::size_t k = b; k <= e; ++k) {
                box.rLo = std::min(box.rLo, r_[k]);
                box.rHi = std::max(box.rHi, r_[k]);
            }
            boxes_.push_back(box);
        }
    }

    double distance(const std::array<double, 3>& x) const override {
        const auto [a, b] = meridian(x);
        if (inside(a, b)) return 0.0;
        // Face segment {0} x [0, clipped(0)].
        double best = std::hypot(a, b > r_[0] ? b - r_[0] : 0.0);
        for (const auto& box : boxes_) {
            const double dt = a < box.tLo ? box.tLo - a : (a > box.tHi ? a - box.tHi : 0.0);
            const double dr = b < box.rLo ? box.rLo - b : (b > box.rHi ? b - box.rHi : 0.0);
            if (dt * dt + dr * dr >= best * best) continue;
            for (std::size_t k = box.first; k < box.last; ++k)
                best = std::min(best, segment_distance(a, b, t_[k], r_[k], t_[k + 1], r_[k + 1]));
        }
        return best;
    }

    double hit_radius(const std::array<double, 3>& x) const override {
        const double a = std::clamp(meridian(x).first, 0.0, R_);
        return std::max(eps_ * std::min(1.0, clipped(a)), 1e-10);
    }
    std::array<double, 3> center() const override { return {0.0, 0.0, 0.0}; }
    double radius() const override { return R_; }

private:
    static constexpr std::size_t kBlock = 64;
    struct Box {
        double tLo, tHi, rLo, rHi;
        std::size_t first, last;
    };

    double clipped(double t) const {
        const double arc = std::sqrt(std::max(R_ * R_ - t * t, 0.0));
        const double lr = profile_.log_radius(t);
        return lr >= std::log(std::max(arc, 1e-300)) ? arc : std::exp(lr);
    }
    std::pair<double, double> meridian(const std::array<double, 3>& x) const {
        double perp2 = 0.0;
        for (std::size_t k = 0; k < 3; ++k)
            if (k != axis_) perp2 += x[k] * x[k];
        return {x[axis_], std::sqrt(perp2)};
    }
    bool inside(double a, double b) const {
        return a >= 0.0 && a * a + b * b <= R_ * R_ && std::log(std::max(b, 1e-300)) <= profile_.log_radius(a);
    }
    static double segment_distance(double a, double b, double t0, double r0, double t1, double r1) {
        const double dx = t1 - t0, dy = r1 - r0;
        const double L2 = dx * dx + dy * dy;
        const double u = L2 > 0.0 ? std::clamp(((a - t0) * dx + (b - r0) * dy) / L2, 0.0, 1.0) : 0.0;
        return std::hypot(a - (t0 + u * dx), b - (r0 + u * dy));
    }

    Profile profile_;
    std::size_t axis_;
    double R_;
    double eps_;
    std::vector<double> t_, r_;
    std::vector<Box> boxes_;
};

/// Builds a target from a ball, a sphere or a rotation body (truncated at R).
inline std::unique_ptr<Target> make_target(const Region& region, double R = 0.0) {
    require(region.dim() == 3, "walk-on-spheres oracle works in R^3");
    const auto& v = region.node().value;
    if (const auto* b = std::get_if<shape::Ball>(&v))
        return std::make_unique<BallTarget>(std::array<double, 3>{b->center[0], b->center[1], b->center[2]}, b->radius);
    if (const auto* s = std::get_if<shape::SphereShell>(&v))
        return std::make_unique<BallTarget>(std::array<double, 3>{s->center[0], s->center[1], s->center[2]}, s->radius);
    if (const auto* rb = std::get_if<shape::RotationBody>(&v)) {
        require(R > 0.0, "rotation bodies need a truncation radius");
        return std::make_unique<RotationTarget>(rb->profile, rb->axis, R);
    }
    if (const auto* a = std::get_if<shape::AnnulusClip>(&v)) {
        const auto* inner = std::get_if<shape::RotationBody>(&a->inner.node().value);
        require(inner && a->rLo == 0.0 && norm(a->center.coords()) == 0.0,
                "walk-on-spheres supports rotation bodies truncated by a ball at the origin");
        return std::make_unique<RotationTarget>(inner->profile, inner->axis, a->rHi);
    }
    throw InvalidInput("walk-on-spheres supports balls, spheres and truncated rotation bodies");
}

struct WalkOptions {
    /// Walks beyond outerFactor times the target radius escape or re-enter.
    double outerFactor = 2.0;
    std::size_t maxSteps = 100000;
    std::size_t chunk = 1000;
};

namespace detail {

inline void random_direction(rieszpot::detail::Rng& rng, std::array<double, 3>& v) {
    double len = 0.0;
    do {
        len = 0.0;
        for (auto& c : v) {
            c = rng.normal();
            len += c * c;
        }
    } while (len < 1e-24);
    len = std::sqrt(len);
    for (auto& c : v) c /= len;
}

/// One walk; true if absorbed by the target.
inline bool walk(const Target& target, std::array<double, 3> x, rieszpot::detail::Rng& rng, const WalkOptions& o) {
    const auto c = target.center();
    const double Rout = o.outerFactor * target.radius();
    std::array<double, 3> v{};
    for (std::size_t step = 0; step < o.maxSteps; ++step) {
        std::array<double, 3> y{x[0] - c[0], x[1] - c[1], x[2] - c[2]};
        const double r = std::hypot(y[0], y[1], y[2]);
        if (r > Rout) {
            // Escape with probability 1 - Rout / r, otherwise re-enter by the exterior Poisson kernel.
            if (rng.uniform() > Rout / r) return false;
            const double p = Rout / r;
            const double u = rng.uniform();
            const double s = 1.0 / (1.0 + p) + u * (1.0 / (1.0 - p) - 1.0 / (1.0 + p));
            const double cth = std::clamp((1.0 + p * p - 1.0 / (s * s)) / (2.0 * p), -1.0, 1.0);
            std::array<double, 3> e{y[0] / r, y[1] / r, y[2] / r};
            random_direction(rng, v);
            const double proj = v[0] * e[0] + v[1] * e[1] + v[2] * e[2];
            for (int k = 0; k < 3; ++k) v[k] -= proj * e[k];
            const double vl = std::hypot(v[0], v[1], v[2]);
            const double sth = std::sqrt(1.0 - cth * cth);
            for (int k = 0; k < 3; ++k) x[k] = c[k] + Rout * (cth * e[k] + sth * v[k] / vl);
            continue;
        }
        const double d = r > target.radius() * 1.5 ? r - target.radius() : target.distance(x);
        if (d <= target.hit_radius(x)) return true;
        random_direction(rng, v);
        for (int k = 0; k < 3; ++k) x[k] += d * v[k];
    }
    return false;
}

} // namespace detail

/// Probability that Brownian motion from `start` hits the target; deterministic for a seed.
inline WalkEstimate hit_probability(const Target& target, const Point& start, std::size_t walks, std::uint64_t seed,
                                    const WalkOptions& o = {}) {
    require(start.dim() == 3, "start point must lie in R^3");
    require(walks > 0, "walk count must be positive");
    const std::size_t chunks = (walks + o.chunk - 1) / o.chunk;
    std::vector<std::size_t> hits(chunks, 0);
    parallel_for(chunks, [&](std::size_t k) {
        rieszpot::detail::Rng rng(rieszpot::detail::splitmix64(seed) ^ (0x9E3779B97F4A7C15ull * (k + 1)));
        const std::size_t count = std::min(o.chunk, walks - k * o.chunk);
        for (std::size_t w = 0; w < count; ++w) hits[k] += detail::walk(target, {start[0], start[1], start[2]}, rng, o);
    });
    std::size_t total = 0;
    for (auto h : hits) total += h;
    WalkEstimate est;
    est.walks = walks;
    est.seed = seed;
    est.value = static_cast<double>(total) / static_cast<double>(walks);
    est.standardError = std::sqrt(est.value * (1.0 - est.value) / static_cast<double>(walks));
    return est;
}

/// Newtonian capacity as r times the mean hit probability from uniform starts on S(center, r), r = 1.5 radius.
inline WalkEstimate capacity(const Target& target, std::size_t walks, std::uint64_t seed, const WalkOptions& o = {}) {
    require(walks > 0, "walk count must be positive");
    const auto c = target.center();
    const double rs = 1.5 * target.radius();
    const std::size_t chunks = (walks + o.chunk - 1) / o.chunk;
    std::vector<std::size_t> hits(chunks, 0);
    parallel_for(chunks, [&](std::size_t k) {
        rieszpot::detail::Rng rng(rieszpot::detail::splitmix64(seed) ^ (0xD1B54A32D192ED03ull * (k + 1)));
        const std::size_t count = std::min(o.chunk, walks - k * o.chunk);
        std::array<double, 3> v{};
        for (std::size_t w = 0; w < count; ++w) {
            detail::random_direction(rng, v);
            hits[k] += detail::walk(target, {c[0] + rs * v[0], c[1] + rs * v[1], c[2] + rs * v[2]}, rng, o);
        }
    });
    std::size_t total = 0;
    for (auto h : hits) total += h;
    const double p = static_cast<double>(total) / static_cast<double>(walks);
    WalkEstimate est;
    est.walks = walks;
    est.seed = seed;
    est.value = rs * p;
    est.standardError = rs * std::sqrt(p * (1.0 - p) / static_cast<double>(walks));
    return est;
}

/// Adapter for the experiment runners.
inline WalkOracle oracle(WalkOptions o = {}) {
    return [o](const Region& family, double R, const Point& start, std::size_t walks, std::uint64_t seed) {
        const auto target = make_target(family, R);
        return hit_probability(*target, start, walks, seed, o);
    };
}

} // namespace rieszpot::wos

#endif // RIESZPOT_TOOLS_WOS_ORACLE_HPP_
