#ifndef RIESZPOT_REGION_HPP_
#define RIESZPOT_REGION_HPP_

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "rieszpot/error.hpp"
#include "rieszpot/geometry.hpp"

namespace rieszpot {

/**
 * @brief Radial profile of a rotation body, x_perp <= rho(t) with t the axial coordinate.
 *
 * PowerDecay: rho(t) = t^{-s}, s >= 0 (rho(0) is infinite for s > 0).
 * ExpDecay:   rho(t) = exp(-t^s), s > 0.
 * Radii are handled in the log domain because exp(-t^s) underflows quickly.
 */
struct Profile {
    enum class Kind { powerDecay, expDecay };
    Kind kind = Kind::powerDecay;
    double s = 0.0;

    static Profile power_decay(double s) {
        require(std::isfinite(s) && s >= 0.0, "power-decay exponent must be >= 0");
        return {Kind::powerDecay, s};
    }
    static Profile exp_decay(double s) {
        require(std::isfinite(s) && s > 0.0, "exp-decay exponent must be > 0");
        return {Kind::expDecay, s};
    }

    double log_radius(double t) const {
        if (kind == Kind::powerDecay) {
            if (s == 0.0) return 0.0;
            if (t <= 0.0) return std::numeric_limits<double>::infinity();
            return -s * std::log(t);
        }
        if (t <= 0.0) return 0.0;
        return -std::pow(t, s);
    }
    double radius(double t) const { return std::exp(log_radius(t)); }

    /// d/dt of log rho(t), for t > 0.
    double dlog_radius(double t) const {
        if (kind == Kind::powerDecay) return s == 0.0 ? 0.0 : -s / t;
        return -s * std::pow(t, s - 1.0);
    }

    bool operator==(const Profile&) const = default;
};

class Region;
struct RegionNode;

namespace shape {
struct Ball {
    Point center;
    double radius;
};
/// The closed half-space {x : <normal, x> >= offset}.
struct HalfSpace {
    std::vector<double> normal;
    double offset;
};
struct SphereShell {
    Point center;
    double radius;
};
/// {x in R^3 : x_axis >= 0, |x_perp| <= rho(x_axis)}; only defined for n = 3.
struct RotationBody {
    Profile profile;
    std::size_t axis;
};
} // namespace shape

struct BoundingBall {
    Point center;
    double radius;
};

/// Immutable descriptor tree for a subset of R^n.
class Region {
public:
    static Region ball(Point center, double radius);
    static Region half_space(std::vector<double> normal, double offset);
    static Region sphere_shell(Point center, double radius);
    static Region rotation_body(Profile profile, std::size_t axis = 0);
    static Region complement(Region inner);
    static Region intersection(std::vector<Region> parts);
    /// inner ∩ {rLo <= |x - center| < rHi}; with closedAbove the shell is rLo < |x - center| <= rHi.
    static Region annulus_clip(Region inner, Point center, double rLo, double rHi, bool closedAbove = false);

    std::size_t dim() const { return dim_; }
    const RegionNode& node() const { return *node_; }

private:
    Region(std::shared_ptr<const RegionNode> node, std::size_t dim) : node_(std::move(node)), dim_(dim) {}
    std::shared_ptr<const RegionNode> node_;
    std::size_t dim_ = 3;
};

namespace shape {
struct Complement {
    Region inner;
};
struct Intersection {
    std::vector<Region> parts;
};
struct AnnulusClip {
    Region inner;
    Point center;
    double rLo;
    double rHi;
    bool closedAbove;
};
} // namespace shape

struct RegionNode {
    std::variant<shape::Ball, shape::HalfSpace, shape::SphereShell, shape::RotationBody, shape::Complement,
                 shape::Intersection, shape::AnnulusClip>
        value;
};

inline Region Region::ball(Point center, double radius) {
    require(std::isfinite(radius) && radius > 0.0, "ball radius must be positive");
    const std::size_t n = center.dim();
    return Region(std::make_shared<RegionNode>(RegionNode{shape::Ball{std::move(center), radius}}), n);
}

inline Region Region::half_space(std::vector<double> normal, double offset) {
    require(normal.size() >= 2, "half-space normal must have dimension >= 2");
    const double len = norm(normal);
    require(std::isfinite(len) && len > 0.0, "half-space normal must be nonzero");
    require(std::isfinite(offset), "half-space offset must be finite");
    for (double& c : normal) c /= len;
    const std::size_t n = normal.size();
    return Region(std::make_shared<RegionNode>(RegionNode{shape::HalfSpace{std::move(normal), offset}}), n);
}

inline Region Region::sphere_shell(Point center, double radius) {
    require(std::isfinite(radius) && radius > 0.0, "sphere radius must be positive");
    const std::size_t n = center.dim();
    return Region(std::make_shared<RegionNode>(RegionNode{shape::SphereShell{std::move(center), radius}}), n);
}

inline Region Region::rotation_body(Profile profile, std::size_t axis) {
    require(axis < 3, "rotation body axis must be a coordinate index of R^3");
    return Region(std::make_shared<RegionNode>(RegionNode{shape::RotationBody{profile, axis}}), 3);
}

inline Region Region::complement(Region inner) {
    const std::size_t n = inner.dim();
    return Region(std::make_shared<RegionNode>(RegionNode{shape::Complement{std::move(inner)}}), n);
}

inline Region Region::intersection(std::vector<Region> parts) {
    require(!parts.empty(), "intersection needs at least one part");
    const std::size_t n = parts.front().dim();
    for (const auto& p : parts) require(p.dim() == n, "intersection parts differ in dimension");
    return Region(std::make_shared<RegionNode>(RegionNode{shape::Intersection{std::move(parts)}}), n);
}

inline Region Region::annulus_clip(Region inner, Point center, double rLo, double rHi, bool closedAbove) {
    require(center.dim() == inner.dim(), "annulus center dimension mismatch");
    require(std::isfinite(rLo) && rLo >= 0.0, "annulus inner radius must be >= 0");
    require(std::isfinite(rHi) && rHi > rLo, "annulus requires rLo < rHi");
    const std::size_t n = inner.dim();
    return Region(std::make_shared<RegionNode>(
                      RegionNode{shape::AnnulusClip{std::move(inner), std::move(center), rLo, rHi, closedAbove}}),
                  n);
}

/// F_1 = {x_1 >= 0, x_2^2 + x_3^2 <= x_1^{-2s}}.
inline Region f1_body(double s) { return Region::rotation_body(Profile::power_decay(s), 0); }
/// F_2 = {x_1 >= 0, x_2^2 + x_3^2 <= exp(-2 x_1^s)}.
inline Region f2_body(double s) { return Region::rotation_body(Profile::exp_decay(s), 0); }

namespace detail {
template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

/// Axial coordinate and squared distance to the axis of a rotation body.
inline std::pair<double, double> axial_split(std::span<const double> p, std::size_t axis) {
    double perp2 = 0.0;
    for (std::size_t k = 0; k < 3; ++k)
        if (k != axis) perp2 += p[k] * p[k];
    return {p[axis], perp2};
}

inline bool contains_impl(const Region& region, std::span<const double> p) {
    return std::visit(
        overloaded{
            [&](const shape::Ball& b) {
                return squared_distance(p, b.center.coords()) <= b.radius * b.radius;
            },
            [&](const shape::HalfSpace& h) {
                double dot = 0.0;
                for (std::size_t k = 0; k < p.size(); ++k) dot += h.normal[k] * p[k];
                return dot >= h.offset;
            },
            [&](const shape::SphereShell& s) {
                return std::abs(distance(p, s.center.coords()) - s.radius) <= 1e-9 * s.radius;
            },
            [&](const shape::RotationBody& r) {
                const auto [t, perp2] = axial_split(p, r.axis);
                if (t < 0.0) return false;
                if (perp2 == 0.0) return true;
                return 0.5 * std::log(perp2) <= r.profile.log_radius(t);
            },
            [&](const shape::Complement& c) { return !contains_impl(c.inner, p); },
            [&](const shape::Intersection& in) {
                for (const auto& part : in.parts)
                    if (!contains_impl(part, p)) return false;
                return true;
            },
            [&](const shape::AnnulusClip& a) {
                const double r = distance(p, a.center.coords());
                const bool inShell = a.closedAbove ? (r > a.rLo && r <= a.rHi) : (r >= a.rLo && r < a.rHi);
                return inShell && contains_impl(a.inner, p);
            }},
        region.node().value);
}
} // namespace detail

inline bool contains(const Region& region, std::span<const double> p) {
    require(p.size() == region.dim(), "dimension mismatch between point and region");
    return detail::contains_impl(region, p);
}

inline bool contains(const Region& region, const Point& p) { return contains(region, p.coords()); }

/// A ball enclosing the region, if the descriptor makes it bounded.
inline std::optional<BoundingBall> bounding_ball(const Region& region) {
    using detail::overloaded;
    return std::visit(
        overloaded{
            [](const shape::Ball& b) -> std::optional<BoundingBall> { return BoundingBall{b.center, b.radius}; },
            [](const shape::SphereShell& s) -> std::optional<BoundingBall> {
                return BoundingBall{s.center, s.radius};
            },
            [](const shape::HalfSpace&) -> std::optional<BoundingBall> { return std::nullopt; },
            [](const shape::RotationBody&) -> std::optional<BoundingBall> { return std::nullopt; },
            [](const shape::Complement&) -> std::optional<BoundingBall> { return std::nullopt; },
            [](const shape::Intersection& in) -> std::optional<BoundingBall> {
                std::optional<BoundingBall> best;
                for (const auto& part : in.parts) {
                    auto b = bounding_ball(part);
                    if (b && (!best || b->radius < best->radius)) best = b;
                }
                return best;
            },
            [](const shape::AnnulusClip& a) -> std::optional<BoundingBall> {
                auto inner = bounding_ball(a.inner);
                if (inner && inner->radius < a.rHi) return inner;
                return BoundingBall{a.center, a.rHi};
            }},
        region.node().value);
}

/// A_j = region ∩ {q^j <= |x - y| < q^{j+1}}.
inline Region annular_slice(const Region& region, const Point& y, double q, int j) {
    require(std::isfinite(q) && q > 1.0, "annular slices at infinity need q > 1");
    require(j >= 0, "slice index must be >= 0");
    return Region::annulus_clip(region, y, std::pow(q, j), std::pow(q, j + 1));
}

inline std::string describe(const Region& region) {
    using detail::overloaded;
    auto pt = [](const Point& p) {
        std::ostringstream os;
        os << "(";
        for (std::size_t k = 0; k < p.dim(); ++k) os << (k ? "," : "") << p[k];
        os << ")";
        return os.str();
    };
    return std::visit(
        overloaded{
            [&](const shape::Ball& b) {
                std::ostringstream os;
                os << "Ball{" << pt(b.center) << ", r=" << b.radius << "}";
                return os.str();
            },
            [&](const shape::HalfSpace& h) {
                std::ostringstream os;
                os << "HalfSpace{n=" << pt(Point(h.normal)) << ", offset=" << h.offset << "}";
                return os.str();
            },
            [&](const shape::SphereShell& s) {
                std::ostringstream os;
                os << "SphereShell{" << pt(s.center) << ", r=" << s.radius << "}";
                return os.str();
            },
            [&](const shape::RotationBody& r) {
                std::ostringstream os;
                os << "RotationBody{"
                   << (r.profile.kind == Profile::Kind::powerDecay ? "PowerDecay" : "ExpDecay")
                   << "(s=" << r.profile.s << "), axis=" << r.axis << "}";
                return os.str();
            },
            [&](const shape::Complement& c) { return "Complement{" + describe(c.inner) + "}"; },
            [&](const shape::Intersection& in) {
                std::string s = "Intersection{";
                for (std::size_t i = 0; i < in.parts.size(); ++i) s += (i ? ", " : "") + describe(in.parts[i]);
                return s + "}";
            },
            [&](const shape::AnnulusClip& a) {
                std::ostringstream os;
                os << "AnnulusClip{" << describe(a.inner) << ", center=" << pt(a.center) << ", " << a.rLo
                   << (a.closedAbove ? " < |x-c| <= " : " <= |x-c| < ") << a.rHi << "}";
                return os.str();
            }},
        region.node().value);
}

// JSON descriptor round trip.

inline Point point_from_json(const nlohmann::json& j) {
    require(j.is_array(), "point must be a JSON array");
    std::vector<double> c;
    for (const auto& v : j) {
        require(v.is_number(), "point coordinates must be numbers");
        c.push_back(v.get<double>());
    }
    return Point(std::move(c));
}

inline nlohmann::json point_to_json(const Point& p) { return nlohmann::json(p.vector()); }

inline Region region_from_json(const nlohmann::json& j) {
    require(j.is_object() && j.contains("type") && j["type"].is_string(), "region must be an object with a 'type'");
    const std::string type = j["type"];
    auto num = [&](const char* key) {
        require(j.contains(key) && j[key].is_number(), std::string("region field '") + key + "' must be a number");
        return j[key].get<double>();
    };
    if (type == "ball") return Region::ball(point_from_json(j.at("center")), num("radius"));
    if (type == "sphere") return Region::sphere_shell(point_from_json(j.at("center")), num("radius"));
    if (type == "halfspace") return Region::half_space(point_from_json(j.at("normal")).vector(), num("offset"));
    if (type == "f1") return f1_body(num("s"));
    if (type == "f2") return f2_body(num("s"));
    if (type == "rotation-body") {
        const std::string prof = j.value("profile", "");
        const std::size_t axis = j.value("axis", 0u);
        if (prof == "power") return Region::rotation_body(Profile::power_decay(num("s")), axis);
        if (prof == "exp") return Region::rotation_body(Profile::exp_decay(num("s")), axis);
        throw InvalidInput("rotation-body profile must be 'power' or 'exp'");
    }
    if (type == "complement") return Region::complement(region_from_json(j.at("inner")));
    if (type == "intersection") {
        std::vector<Region> parts;
        for (const auto& p : j.at("parts")) parts.push_back(region_from_json(p));
        return Region::intersection(std::move(parts));
    }
    if (type == "annulus-clip") {
        Region inner = region_from_json(j.at("inner"));
        Point c = j.contains("center") ? point_from_json(j["center"]) : Point::origin(inner.dim());
        return Region::annulus_clip(std::move(inner), std::move(c), num("rLo"), num("rHi"),
                                    j.value("closedAbove", false));
    }
    throw InvalidInput("unknown region type '" + type + "'");
}

inline nlohmann::json region_to_json(const Region& region) {
    using detail::overloaded;
    using nlohmann::json;
    return std::visit(
        overloaded{
            [](const shape::Ball& b) {
                return json{{"type", "ball"}, {"center", point_to_json(b.center)}, {"radius", b.radius}};
            },
            [](const shape::SphereShell& s) {
                return json{{"type", "sphere"}, {"center", point_to_json(s.center)}, {"radius", s.radius}};
            },
            [](const shape::HalfSpace& h) {
                return json{{"type", "halfspace"}, {"normal", h.normal}, {"offset", h.offset}};
            },
            [](const shape::RotationBody& r) {
                return json{{"type", "rotation-body"},
                            {"profile", r.profile.kind == Profile::Kind::powerDecay ? "power" : "exp"},
                            {"s", r.profile.s},
                            {"axis", r.axis}};
            },
            [](const shape::Complement& c) { return json{{"type", "complement"}, {"inner", region_to_json(c.inner)}}; },
            [](const shape::Intersection& in) {
                json parts = json::array();
                for (const auto& p : in.parts) parts.push_back(region_to_json(p));
                return json{{"type", "intersection"}, {"parts", parts}};
            },
            [](const shape::AnnulusClip& a) {
                return json{{"type", "annulus-clip"}, {"inner", region_to_json(a.inner)},
                            {"center", point_to_json(a.center)}, {"rLo", a.rLo},
                            {"rHi", a.rHi}, {"closedAbove", a.closedAbove}};
            }},
        region.node().value);
}

} // namespace rieszpot

#endif // RIESZPOT_REGION_HPP_
