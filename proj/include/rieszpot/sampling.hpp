#ifndef RIESZPOT_SAMPLING_HPP_
#define RIESZPOT_SAMPLING_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <unordered_map>
#include <vector>

#include "rieszpot/error.hpp"
#include "rieszpot/geometry.hpp"
#include "rieszpot/region.hpp"

namespace rieszpot {

namespace detail {

inline constexpr double kGoldenAngle = 2.39996322972865332223; // pi * (3 - sqrt 5)

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Portable generator: the distributions are written out so results do not
/// depend on the standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double normal() {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    std::uint64_t bits() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// Uniformly random rotation of R^3 (row-major), from a random unit quaternion.
inline std::array<double, 9> random_rotation(Rng& rng) {
    double q[4];
    double len = 0.0;
    do {
        len = 0.0;
        for (double& c : q) {
            c = rng.normal();
            len += c * c;
        }
    } while (len < 1e-12);
    len = std::sqrt(len);
    for (double& c : q) c /= len;
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
            2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
            2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
}

struct BudgetExceeded {};

/// Candidate boundary/interior points with a normal used for membership nudging.
struct Candidates {
    std::size_t dim = 3;
    std::size_t limit = std::numeric_limits<std::size_t>::max();
    std::vector<double> coords;
    std::vector<double> normals;
    std::vector<double> radii;

    std::size_t size() const { return radii.size(); }
    void add(const double* p, const double* nrm, double delta) {
        if (radii.size() >= limit) throw BudgetExceeded{};
        coords.insert(coords.end(), p, p + dim);
        normals.insert(normals.end(), nrm, nrm + dim);
        radii.push_back(delta);
    }
};

/// Radial window {rLo <= |x - center| <= rHi} known to contain the sampled set.
struct Window {
    std::vector<double> center;
    double rLo = 0.0;
    double rHi = 0.0;
};

inline double unit_sphere_area(std::size_t n) {
    const double d = static_cast<double>(n);
    return 2.0 * std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0);
}

/// Orthonormal complement of a unit vector (n - 1 vectors of length n).
inline std::vector<std::vector<double>> orthonormal_complement(const std::vector<double>& u) {
    const std::size_t n = u.size();
    std::vector<std::vector<double>> basis;
    for (std::size_t k = 0; k < n && basis.size() + 1 < n; ++k) {
        std::vector<double> v(n, 0.0);
        v[k] = 1.0;
        auto project_out = [&](const std::vector<double>& b) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += v[i] * b[i];
            for (std::size_t i = 0; i < n; ++i) v[i] -= dot * b[i];
        };
        project_out(u);
        for (const auto& b : basis) project_out(b);
        const double len = norm(v);
        if (len < 1e-6) continue;
        for (double& c : v) c /= len;
        basis.push_back(std::move(v));
    }
    return basis;
}

/// Sphere with `count` points; Fibonacci layout with a random rotation for n = 3.
inline void sphere_points(Candidates& out, std::span<const double> center, double r, std::size_t count, Rng& rng) {
    if (count == 0) return;
    const std::size_t n = center.size();
    const double N = static_cast<double>(count);
    std::vector<double> p(n), v(n);
    if (n == 3) {
        const auto rot = random_rotation(rng);
        const double delta = 0.5 * std::sqrt(4.0 * std::numbers::pi * r * r / N);
        for (std::size_t i = 0; i < count; ++i) {
            const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / N;
            const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double phi = static_cast<double>(i) * kGoldenAngle;
            const double u[3] = {rad * std::cos(phi), rad * std::sin(phi), z};
            for (std::size_t a = 0; a < 3; ++a) {
                v[a] = rot[3 * a] * u[0] + rot[3 * a + 1] * u[1] + rot[3 * a + 2] * u[2];
                p[a] = center[a] + r * v[a];
            }
            out.add(p.data(), v.data(), delta);
        }
        return;
    }
    if (n == 2) {
        const double phase = rng.uniform();
        const double delta = 0.5 * 2.0 * std::numbers::pi * r / N;
        for (std::size_t i = 0; i < count; ++i) {
            const double th = 2.0 * std::numbers::pi * (static_cast<double>(i) + phase) / N;
            v[0] = std::cos(th);
            v[1] = std::sin(th);
            p[0] = center[0] + r * v[0];
            p[1] = center[1] + r * v[1];
            out.add(p.data(), v.data(), delta);
        }
        return;
    }
    const double area = unit_sphere_area(n) * std::pow(r, static_cast<double>(n - 1));
    const double delta = 0.5 * std::pow(area / N, 1.0 / static_cast<double>(n - 1));
    for (std::size_t i = 0; i < count; ++i) {
        double len = 0.0;
        do {
            len = 0.0;
            for (auto& c : v) {
                c = rng.normal();
                len += c * c;
            }
        } while (len < 1e-12);
        len = std::sqrt(len);
        for (std::size_t a = 0; a < n; ++a) {
            v[a] /= len;
            p[a] = center[a] + r * v[a];
        }
        out.add(p.data(), v.data(), delta);
    }
}

inline std::size_t sphere_count_for_spacing(std::size_t n, double r, double h) {
    const double area = unit_sphere_area(n) * std::pow(r, static_cast<double>(n - 1));
    const double c = std::round(area / std::pow(h, static_cast<double>(n - 1)));
    if (!(c < 1e12)) throw BudgetExceeded{};
    return static_cast<std::size_t>(c);
}

/**
 * @brief Cell radius of an axis point standing for a thin tube segment.
 *
 * A segment of length h and radius rho = exp(logRho) is replaced by one point
 * whose capped self-interaction equals the mean kernel between the segment
 * midpoint and the tube wall: s = (2/h) int_0^{h/2} (z^2 + rho^2)^{p/2} dz,
 * delta = s^{1/p} with p = alpha - n. Everything stays in the log domain.
 */
inline double collapsed_cell_radius(double h, double logRho, double p) {
    const double x = std::log(h / 2.0) - logRho;
    const double U = x > 20.0 ? x + std::numbers::ln2 : std::asinh(std::exp(x));
    const double b = p + 1.0;
    auto log_cosh = [](double u) { return u + std::log1p(std::exp(-2.0 * u)) - std::numbers::ln2; };
    double logI = 0.0;
    if (std::abs(b) < 1e-14) {
        logI = std::log(U);
    } else {
        const double head = std::min(U, 60.0);
        const int m = 2000;
        const double step = head / m;
        double maxLog = -std::numeric_limits<double>::infinity();
        std::vector<double> terms(m + 1);
        for (int k = 0; k <= m; ++k) {
            terms[k] = b * log_cosh(k * step);
            maxLog = std::max(maxLog, terms[k]);
        }
        double sum = 0.0;
        for (int k = 0; k <= m; ++k) {
            const double w = (k == 0 || k == m) ? 1.0 : (k % 2 ? 4.0 : 2.0);
            sum += w * std::exp(terms[k] - maxLog);
        }
        logI = maxLog + std::log(sum * step / 3.0);
        if (U > 60.0) {
            // cosh(u)^b = (e^u / 2)^b to double precision beyond u = 60.
            double logTail;
            if (b > 0.0)
                logTail = -b * std::numbers::ln2 + b * U + std::log(-std::expm1(b * (60.0 - U))) - std::log(b);
            else
                logTail = -b * std::numbers::ln2 + b * 60.0 + std::log(-std::expm1(b * (U - 60.0))) - std::log(-b);
            const double hi = std::max(logI, logTail);
            logI = hi + std::log(std::exp(logI - hi) + std::exp(logTail - hi));
        }
    }
    const double logS = std::log(2.0 / h) + b * logRho + logI;
    return std::max(std::exp(logS / p), 1e-12 * h);
}

inline std::array<std::size_t, 2> transverse_axes(std::size_t axis) {
    return {axis == 0 ? 1u : 0u, axis == 2 ? 1u : 2u};
}

/// Flat face {x_axis = 0, |x_perp| <= rho(0)} of a rotation body, sunflower layout.
inline void rotation_face(Candidates& out, const shape::RotationBody& body, const Window& w, double h, Rng& rng) {
    const auto [b1, b2] = transverse_axes(body.axis);
    const double ct = w.center[body.axis];
    const double cPerp = std::hypot(w.center[b1], w.center[b2]);
    if (std::abs(ct) > w.rHi) return;
    const double outer = std::sqrt(std::max(0.0, w.rHi * w.rHi - ct * ct)) + cPerp;
    const double innerRaw = std::sqrt(std::max(0.0, w.rLo * w.rLo - ct * ct)) - cPerp;
    const double logRho0 = body.profile.log_radius(0.0);
    const double rOut = std::isinf(logRho0) ? outer : std::min(outer, std::exp(logRho0));
    const double rIn = std::clamp(innerRaw, 0.0, rOut);
    const double area = std::numbers::pi * (rOut * rOut - rIn * rIn);
    const double cnt = std::round(area / (h * h));
    if (cnt < 1.0) return;
    if (!(cnt < 1e12)) throw BudgetExceeded{};
    const auto count = static_cast<std::size_t>(cnt);
    const double delta = 0.5 * std::sqrt(area / cnt);
    const double phase = 2.0 * std::numbers::pi * rng.uniform();
    double p[3], nrm[3] = {0, 0, 0};
    nrm[body.axis] = -1.0;
    for (std::size_t k = 0; k < count; ++k) {
        const double r = std::sqrt(rIn * rIn + (rOut * rOut - rIn * rIn) * (static_cast<double>(k) + 0.5) / cnt);
        const double th = static_cast<double>(k) * kGoldenAngle + phase;
        p[body.axis] = 0.0;
        p[b1] = r * std::cos(th);
        p[b2] = r * std::sin(th);
        out.add(p, nrm, delta);
    }
}

/**
 * @brief Lateral surface of a rotation body at arc-length stations of spacing h.
 *
 * Stations with 2*pi*rho/h >= 2.5 become rings; thinner stations collapse to a
 * single axis point with collapsed_cell_radius.
 */
inline void rotation_lateral(Candidates& out, const shape::RotationBody& body, const Window& w, double h, Rng& rng,
                             double kernelExponent) {
    const auto [b1, b2] = transverse_axes(body.axis);
    const Profile& prof = body.profile;
    const double ct = w.center[body.axis];
    const double cPerp = std::hypot(w.center[b1], w.center[b2]);
    const double tEnd = ct + w.rHi;
    if (tEnd <= 0.0) return;
    double tStart = std::max(0.0, ct - w.rHi);
    const bool infiniteFace = std::isinf(prof.log_radius(0.0));
    const double rMax = w.rHi + cPerp;
    if (infiniteFace) tStart = std::max(tStart, std::exp(-std::log(rMax) / prof.s));
    if (tStart >= tEnd) return;

    const double phase = rng.uniform();
    std::size_t ringIndex = 0;
    double p[3], nrm[3];
    auto emit = [&](double t) {
        if (infiniteFace && t < 0.5 * h) return;
        const double lr = prof.log_radius(t);
        const double rho = std::exp(std::min(lr, 700.0));
        const double dt = t - ct;
        const double dMin = std::hypot(dt, std::max(0.0, rho - cPerp));
        const double dMax = std::hypot(dt, rho + cPerp);
        if (dMin > w.rHi + 1e-12 * w.rHi || dMax < w.rLo - 1e-12 * w.rLo) return;
        const double ringCount = std::round(2.0 * std::numbers::pi * rho / h);
        if (ringCount >= 3.0) {
            if (!(ringCount < 1e12)) throw BudgetExceeded{};
            const auto m = static_cast<std::size_t>(ringCount);
            const double delta = 0.5 * std::sqrt(h * 2.0 * std::numbers::pi * rho / ringCount);
            const double off = (ringIndex % 2 ? 0.5 : 0.0) + phase;
            ++ringIndex;
            for (std::size_t q = 0; q < m; ++q) {
                const double th = 2.0 * std::numbers::pi * (static_cast<double>(q) + off) / ringCount;
                const double c = std::cos(th), s = std::sin(th);
                p[body.axis] = t;
                p[b1] = rho * c;
                p[b2] = rho * s;
                nrm[body.axis] = 0.0;
                nrm[b1] = c;
                nrm[b2] = s;
                out.add(p, nrm, delta);
            }
        } else {
            p[body.axis] = t;
            p[b1] = 0.0;
            p[b2] = 0.0;
            nrm[body.axis] = 1.0;
            nrm[b1] = 0.0;
            nrm[b2] = 0.0;
            out.add(p, nrm, collapsed_cell_radius(h, lr, kernelExponent));
        }
    };

    double t = tStart;
    double rho = std::exp(std::min(prof.log_radius(t), 700.0));
    double arc = 0.0;
    double next = 0.5 * h;
    while (t < tEnd) {
        const double slope = rho * prof.dlog_radius(std::max(t, 1e-300));
        const double dt = std::min(0.125 * h, 0.125 * h / std::sqrt(1.0 + slope * slope));
        const double t1 = t + dt;
        const double rho1 = std::exp(std::min(prof.log_radius(t1), 700.0));
        const double ds = std::hypot(dt, rho1 - rho);
        while (arc + ds >= next) {
            const double ts = t + (next - arc) / ds * dt;
            if (ts > tEnd) return;
            emit(ts);
            next += h;
        }
        arc += ds;
        t = t1;
        rho = rho1;
    }
}

/// The part of the sphere S(center, r) inside a rotation body whose axis passes
/// through the center: rings about the axis, each entirely in or out of the body.
inline void axial_sphere_rings(Candidates& out, const shape::RotationBody& body, std::span<const double> center,
                               double r, double h, Rng& rng) {
    const auto [b1, b2] = transverse_axes(body.axis);
    const double ct = center[body.axis];
    const double K = std::max(1.0, std::round(std::numbers::pi * r / h));
    if (!(K < 1e9)) throw BudgetExceeded{};
    const double hArc = std::numbers::pi * r / K;
    const double phase = rng.uniform();
    double p[3], nrm[3];
    for (std::size_t k = 0; k <= static_cast<std::size_t>(K); ++k) {
        const double th = std::numbers::pi * static_cast<double>(k) / K;
        const double c = std::cos(th), s = std::sin(th);
        const double t = ct + r * c;
        if (t < -1e-12 * std::max(1.0, r)) continue;
        const double lr = body.profile.log_radius(std::max(t, 0.0));
        const bool pole = k == 0 || k == static_cast<std::size_t>(K);
        if (pole) {
            const double capRadius = std::min(0.5 * hArc, std::exp(std::min(lr, 700.0)));
            if (capRadius < 1e-9 * hArc) continue;
            p[body.axis] = ct + (k == 0 ? r : -r);
            p[b1] = center[b1];
            p[b2] = center[b2];
            nrm[body.axis] = k == 0 ? 1.0 : -1.0;
            nrm[b1] = nrm[b2] = 0.0;
            out.add(p, nrm, 0.5 * std::sqrt(std::numbers::pi) * capRadius);
            continue;
        }
        const double perp = r * s;
        if (std::log(perp) > lr + 1e-12) continue;
        const double m = std::max(1.0, std::round(2.0 * std::numbers::pi * perp / hArc));
        const double delta = 0.5 * std::sqrt(hArc * 2.0 * std::numbers::pi * perp / m);
        const double off = (k % 2 ? 0.5 : 0.0) + phase;
        for (std::size_t q = 0; q < static_cast<std::size_t>(m); ++q) {
            const double ph = 2.0 * std::numbers::pi * (static_cast<double>(q) + off) / m;
            nrm[body.axis] = c;
            nrm[b1] = s * std::cos(ph);
            nrm[b2] = s * std::sin(ph);
            for (std::size_t a = 0; a < 3; ++a) p[a] = center[a] + r * nrm[a];
            out.add(p, nrm, delta);
        }
    }
}

/// Hyperplane {<n,x> = offset} restricted to the window.
inline void plane_points(Candidates& out, const shape::HalfSpace& hs, const Window& w, double h, Rng& rng) {
    const std::size_t n = hs.normal.size();
    double dot = 0.0;
    for (std::size_t k = 0; k < n; ++k) dot += hs.normal[k] * w.center[k];
    const double dist = dot - hs.offset;
    if (std::abs(dist) >= w.rHi) return;
    std::vector<double> base(n);
    for (std::size_t k = 0; k < n; ++k) base[k] = w.center[k] - dist * hs.normal[k];
    const double rOut = std::sqrt(w.rHi * w.rHi - dist * dist);
    const double rIn = w.rLo > std::abs(dist) ? std::sqrt(w.rLo * w.rLo - dist * dist) : 0.0;
    const auto basis = orthonormal_complement(hs.normal);
    std::vector<double> p(n);
    if (n == 3) {
        const double area = std::numbers::pi * (rOut * rOut - rIn * rIn);
        const double cnt = std::round(area / (h * h));
        if (cnt < 1.0) return;
        if (!(cnt < 1e12)) throw BudgetExceeded{};
        const double delta = 0.5 * std::sqrt(area / cnt);
        const double phase = 2.0 * std::numbers::pi * rng.uniform();
        for (std::size_t k = 0; k < static_cast<std::size_t>(cnt); ++k) {
            const double r = std::sqrt(rIn * rIn + (rOut * rOut - rIn * rIn) * (static_cast<double>(k) + 0.5) / cnt);
            const double th = static_cast<double>(k) * kGoldenAngle + phase;
            for (std::size_t a = 0; a < 3; ++a)
                p[a] = base[a] + r * (std::cos(th) * basis[0][a] + std::sin(th) * basis[1][a]);
            out.add(p.data(), hs.normal.data(), delta);
        }
        return;
    }
    // Square lattice in the (n-1)-dimensional hyperplane.
    const std::size_t m = n - 1;
    const long kmax = static_cast<long>(std::ceil(rOut / h)) + 1;
    std::vector<double> offset(m);
    for (auto& o : offset) o = rng.uniform() - 0.5;
    std::vector<long> idx(m, -kmax);
    while (true) {
        double r2 = 0.0;
        std::vector<double> u(m);
        for (std::size_t a = 0; a < m; ++a) {
            u[a] = h * (static_cast<double>(idx[a]) + offset[a]);
            r2 += u[a] * u[a];
        }
        if (r2 <= rOut * rOut && r2 >= rIn * rIn) {
            for (std::size_t k = 0; k < n; ++k) {
                p[k] = base[k];
                for (std::size_t a = 0; a < m; ++a) p[k] += u[a] * basis[a][k];
            }
            out.add(p.data(), hs.normal.data(), 0.5 * h);
        }
        std::size_t a = 0;
        while (a < m && ++idx[a] > kmax) idx[a++] = -kmax;
        if (a == m) break;
    }
}

inline bool same_center(std::span<const double> a, std::span<const double> b) {
    return squared_distance(a, b) <= 1e-24 * std::max(1.0, norm(a) * norm(a));
}

inline Window narrow(const Window& outer, const shape::AnnulusClip& clip) {
    Window w{clip.center.vector(), clip.rLo, clip.rHi};
    if (same_center(outer.center, w.center)) {
        w.rLo = std::max(w.rLo, outer.rLo);
        w.rHi = std::min(w.rHi, outer.rHi);
    }
    return w;
}

inline bool provably_empty(const Region& region) {
    return std::visit(overloaded{[](const shape::AnnulusClip& a) {
                                     if (provably_empty(a.inner)) return true;
                                     auto bb = bounding_ball(a.inner);
                                     if (!bb) return false;
                                     const double d = distance(bb->center, a.center);
                                     return d + bb->radius < a.rLo || d - bb->radius > a.rHi;
                                 },
                                 [](const shape::Intersection& in) {
                                     for (const auto& p : in.parts)
                                         if (provably_empty(p)) return true;
                                     return false;
                                 },
                                 [](const auto&) { return false; }},
                      region.node().value);
}

/// Sphere S(center, r) clipped to `inner`: axial rings for rotation bodies, a full sphere otherwise.
inline void cut_sphere(Candidates& out, const Region& inner, std::span<const double> center, double r, double h,
                       Rng& rng) {
    if (const auto* body = std::get_if<shape::RotationBody>(&inner.node().value)) {
        const auto [b1, b2] = transverse_axes(body->axis);
        if (std::hypot(center[b1], center[b2]) <= 1e-12 * std::max(1.0, r)) {
            axial_sphere_rings(out, *body, center, r, h, rng);
            return;
        }
    }
    if (auto bb = bounding_ball(inner)) {
        const double d = distance(bb->center.coords(), center);
        if (d + bb->radius < r || d - bb->radius > r) return;
    }
    sphere_points(out, center, r, sphere_count_for_spacing(center.size(), r, h), rng);
}

inline void gather_surfaces(const Region& region, const Window& w, double h, Rng& rng, Candidates& out,
                            double kernelExponent, bool cutSpheres) {
    std::visit(overloaded{
                   [&](const shape::Ball& b) {
                       sphere_points(out, b.center.coords(), b.radius,
                                     sphere_count_for_spacing(b.center.dim(), b.radius, h), rng);
                   },
                   [&](const shape::SphereShell& s) {
                       sphere_points(out, s.center.coords(), s.radius,
                                     sphere_count_for_spacing(s.center.dim(), s.radius, h), rng);
                   },
                   [&](const shape::HalfSpace& hs) { plane_points(out, hs, w, h, rng); },
                   [&](const shape::RotationBody& body) {
                       rotation_face(out, body, w, h, rng);
                       rotation_lateral(out, body, w, h, rng, kernelExponent);
                   },
                   [&](const shape::Complement& c) { gather_surfaces(c.inner, w, h, rng, out, kernelExponent, true); },
                   [&](const shape::Intersection& in) {
                       for (const auto& p : in.parts) gather_surfaces(p, w, h, rng, out, kernelExponent, true);
                   },
                   [&](const shape::AnnulusClip& a) {
                       const Window inner = narrow(w, a);
                       gather_surfaces(a.inner, inner, h, rng, out, kernelExponent, true);
                       if (!cutSpheres) return;
                       if (a.rLo > 0.0) cut_sphere(out, a.inner, a.center.coords(), a.rLo, h, rng);
                       cut_sphere(out, a.inner, a.center.coords(), a.rHi, h, rng);
                   }},
               region.node().value);
}

/// Axis points of rotation bodies thinner than the lattice (volume mode).
inline void gather_thin_axes(const Region& region, const Window& w, double h, Candidates& out, double kernelExponent) {
    std::visit(overloaded{
                   [&](const shape::RotationBody& body) {
                       const double ct = w.center[body.axis];
                       const double tEnd = ct + w.rHi;
                       for (double t = std::max(0.0, ct - w.rHi) + 0.5 * h; t <= tEnd; t += h) {
                           const double lr = body.profile.log_radius(t);
                           if (lr >= std::log(0.5 * h)) continue;
                           double p[3] = {0, 0, 0}, nrm[3] = {0, 0, 0};
                           p[body.axis] = t;
                           nrm[body.axis] = 1.0;
                           out.add(p, nrm, collapsed_cell_radius(h, lr, kernelExponent));
                       }
                   },
                   [&](const shape::Complement& c) { gather_thin_axes(c.inner, w, h, out, kernelExponent); },
                   [&](const shape::Intersection& in) {
                       for (const auto& p : in.parts) gather_thin_axes(p, w, h, out, kernelExponent);
                   },
                   [&](const shape::AnnulusClip& a) { gather_thin_axes(a.inner, narrow(w, a), h, out, kernelExponent); },
                   [&](const auto&) {}},
               region.node().value);
}

/// Sphere shells have no volume; in volume mode they keep their surface layout.
inline void gather_shells(const Region& region, double h, Rng& rng, Candidates& out) {
    std::visit(overloaded{
                   [&](const shape::SphereShell& s) {
                       sphere_points(out, s.center.coords(), s.radius,
                                     sphere_count_for_spacing(s.center.dim(), s.radius, h), rng);
                   },
                   [&](const shape::Complement& c) { gather_shells(c.inner, h, rng, out); },
                   [&](const shape::Intersection& in) {
                       for (const auto& p : in.parts) gather_shells(p, h, rng, out);
                   },
                   [&](const shape::AnnulusClip& a) { gather_shells(a.inner, h, rng, out); },
                   [&](const auto&) {}},
               region.node().value);
}

/// Cubic lattice with a seeded offset; only points of `filter` are kept.
inline void gather_lattice(const Region& filter, const Window& w, double h, Rng& rng, Candidates& out) {
    const std::size_t n = w.center.size();
    const long kmax = static_cast<long>(std::ceil(w.rHi / h)) + 1;
    const double cells = std::pow(2.0 * static_cast<double>(kmax) + 1.0, static_cast<double>(n));
    if (!(cells < 4.0 * static_cast<double>(std::min<std::size_t>(out.limit, 1u << 30)) + 1e6)) throw BudgetExceeded{};
    std::vector<double> offset(n);
    for (auto& o : offset) o = rng.uniform() - 0.5;
    std::vector<long> idx(n, -kmax);
    std::vector<double> p(n), nrm(n, 0.0);
    nrm[0] = 1.0;
    while (true) {
        double r2 = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            const double u = h * (static_cast<double>(idx[a]) + offset[a]);
            p[a] = w.center[a] + u;
            r2 += u * u;
        }
        if (r2 <= w.rHi * w.rHi && r2 >= w.rLo * w.rLo && contains(filter, std::span<const double>(p)))
            out.add(p.data(), nrm.data(), 0.5 * h);
        std::size_t a = 0;
        while (a < n && ++idx[a] > kmax) idx[a++] = -kmax;
        if (a == n) break;
    }
}

/**
 * @brief Accepted points bucketed by cell radius for separation queries.
 *
 * A point x_i is accepted only if every accepted x_j satisfies
 * |x_i - x_j| >= max(0.75 (delta_i + delta_j), delta_i, delta_j); then every
 * off-diagonal capped kernel value equals the exact kernel.
 */
class SeparationIndex {
public:
    explicit SeparationIndex(const PointCloud& cloud) : cloud_(cloud) {}

    static double required(double a, double b) { return std::max({0.75 * (a + b), a, b}); }

    bool admits(std::span<const double> p, double delta) const {
        for (const auto& [level, bucket] : buckets_) {
            const double reach = required(delta, bucket.maxDelta);
            const long k = static_cast<long>(std::ceil(reach / bucket.cell));
            const double cellsToScan = std::pow(2.0 * static_cast<double>(k) + 1.0, static_cast<double>(p.size()));
            if (cellsToScan > static_cast<double>(bucket.members.size())) {
                for (auto j : bucket.members)
                    if (!separated(p, delta, j)) return false;
                continue;
            }
            std::vector<long> base(p.size()), idx(p.size());
            for (std::size_t a = 0; a < p.size(); ++a) base[a] = cell_of(p[a], bucket.cell);
            for (std::size_t a = 0; a < p.size(); ++a) idx[a] = base[a] - k;
            while (true) {
                auto it = bucket.cells.find(key(idx));
                if (it != bucket.cells.end())
                    for (auto j : it->second)
                        if (!separated(p, delta, j)) return false;
                std::size_t a = 0;
                while (a < p.size() && ++idx[a] > base[a] + k) {
                    idx[a] = base[a] - k;
                    ++a;
                }
                if (a == p.size()) break;
            }
        }
        return true;
    }

    void insert(std::size_t i) {
        const double delta = cloud_.cell_radius(i);
        const int level = static_cast<int>(std::floor(std::log2(delta)));
        auto [it, fresh] = buckets_.try_emplace(level);
        Bucket& b = it->second;
        if (fresh) {
            b.maxDelta = std::ldexp(1.0, level + 1);
            b.cell = 1.5 * b.maxDelta;
        }
        std::vector<long> idx(cloud_.dim());
        auto p = cloud_.point(i);
        for (std::size_t a = 0; a < p.size(); ++a) idx[a] = cell_of(p[a], b.cell);
        b.cells[key(idx)].push_back(static_cast<std::uint32_t>(i));
        b.members.push_back(static_cast<std::uint32_t>(i));
    }

private:
    struct Bucket {
        double maxDelta = 0.0;
        double cell = 0.0;
        std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells;
        std::vector<std::uint32_t> members;
    };

    static long cell_of(double x, double cell) { return static_cast<long>(std::floor(x / cell)); }
    static std::uint64_t key(const std::vector<long>& idx) {
        std::uint64_t h = 0x84222325CBF29CE4ull;
        for (long v : idx) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
        return h;
    }
    bool separated(std::span<const double> p, double delta, std::size_t j) const {
        const double need = required(delta, cloud_.cell_radius(j));
        return squared_distance(p, cloud_.point(j)) >= need * need;
    }

    const PointCloud& cloud_;
    std::map<int, Bucket> buckets_;
};

/// Membership with a relative nudge along the normal, for points built on a boundary.
inline std::optional<std::vector<double>> settle(const Region& filter, const double* p, const double* nrm,
                                                 std::size_t dim) {
    std::vector<double> q(p, p + dim);
    if (contains(filter, std::span<const double>(q))) return q;
    const double eps = 4e-13 * std::max(1.0, norm(std::span<const double>(p, dim)));
    for (double sign : {-1.0, 1.0}) {
        for (std::size_t a = 0; a < dim; ++a) q[a] = p[a] + sign * eps * nrm[a];
        if (contains(filter, std::span<const double>(q))) return q;
    }
    return std::nullopt;
}

inline void accept(const Region& filter, const Candidates& cands, PointCloud& cloud, SeparationIndex& index) {
    const std::size_t dim = cands.dim;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        auto q = settle(filter, cands.coords.data() + i * dim, cands.normals.data() + i * dim, dim);
        if (!q) continue;
        const double delta = cands.radii[i];
        if (!index.admits(*q, delta)) continue;
        cloud.push_back(*q, delta);
        index.insert(cloud.size() - 1);
    }
}

inline Window top_window(const Region& region) {
    auto bb = bounding_ball(region);
    require(bb.has_value(), "cannot sample an unbounded region; clip or truncate it first");
    Window w{bb->center.vector(), 0.0, bb->radius};
    if (const auto* a = std::get_if<shape::AnnulusClip>(&region.node().value)) w = narrow(w, *a);
    return w;
}

/**
 * @brief Tunes the spacing h until generate(h) yields about `target` points.
 *
 * Counts follow a power law in h locally; the exponent is re-estimated from
 * the last two evaluations. Returns the cloud whose count is closest.
 */
template <class Generate>
PointCloud match_count(Generate&& generate, double h0, std::size_t target, double exponent, std::size_t dim,
                       SampleMode tag) {
    const double N = static_cast<double>(target);
    std::optional<PointCloud> best;
    double h = h0;
    double prevH = 0.0, prevC = 0.0;
    int zeroTries = 0;
    for (int it = 0; it < 12; ++it) {
        std::optional<PointCloud> cloud;
        try {
            cloud = generate(h);
        } catch (const BudgetExceeded&) {
            h *= 2.0;
            continue;
        }
        const double c = static_cast<double>(cloud->size());
        if (c == 0.0) {
            if (++zeroTries > 4) break;
            h /= 3.0;
            continue;
        }
        if (!best || std::abs(c - N) < std::abs(static_cast<double>(best->size()) - N)) best = std::move(cloud);
        if (std::abs(c - N) <= 0.02 * N) break;
        double k = exponent;
        if (prevC > 0.0 && prevC != c && prevH != h) k = std::clamp(-std::log(c / prevC) / std::log(h / prevH), 0.5, 4.0);
        prevH = h;
        prevC = c;
        h *= std::pow(c / N, 1.0 / k);
    }
    return best ? std::move(*best) : PointCloud(dim, tag);
}

inline std::size_t candidate_budget(std::size_t target) { return 50 * target + 1000000; }

} // namespace detail

/**
 * @brief Point cloud on a bounded region at a fixed spacing h.
 *
 * Surface mode samples the boundary pieces of the descriptor tree; volume mode
 * uses a cubic lattice. Every point satisfies contains(region, p) and points
 * are pairwise separated so capped kernel values between distinct points are
 * exact.
 *
 * @param kernelExponent alpha - n, used for the cell radius of collapsed thin tubes.
 */
inline PointCloud sample_with_spacing(const Region& region, double h, SampleMode mode, std::uint64_t seed,
                                      double kernelExponent = -1.0,
                                      std::size_t budget = std::numeric_limits<std::size_t>::max()) {
    require(std::isfinite(h) && h > 0.0, "sample spacing must be positive");
    require(kernelExponent < 0.0, "kernel exponent must be negative");
    const detail::Window w = detail::top_window(region);
    PointCloud cloud(region.dim(), mode);
    if (detail::provably_empty(region)) return cloud;
    detail::Rng rng(seed);
    detail::Candidates cands;
    cands.dim = region.dim();
    cands.limit = budget;
    if (mode == SampleMode::surface) {
        detail::gather_surfaces(region, w, h, rng, cands, kernelExponent, true);
    } else {
        detail::gather_lattice(region, w, h, rng, cands);
        detail::gather_thin_axes(region, w, h, cands, kernelExponent);
        detail::gather_shells(region, h, rng, cands);
    }
    detail::SeparationIndex index(cloud);
    detail::accept(region, cands, cloud, index);
    return cloud;
}

/**
 * @brief Deterministic sample of about `resolution` points of a bounded region.
 *
 * Ball and sphere surfaces use exactly `resolution` Fibonacci points with a
 * seeded random rotation and delta = sqrt(4 pi r^2 / N) / 2. Other regions
 * tune the spacing to match the requested count.
 */
inline PointCloud sample(const Region& region, std::size_t resolution, SampleMode mode, std::uint64_t seed,
                         double kernelExponent = -1.0) {
    require(resolution >= 1, "resolution must be at least 1");
    const detail::Window w = detail::top_window(region);
    const std::size_t dim = region.dim();
    if (detail::provably_empty(region)) return PointCloud(dim, mode);

    const auto& node = region.node().value;
    const bool exactSphere = std::holds_alternative<shape::SphereShell>(node) ||
                             (mode == SampleMode::surface && std::holds_alternative<shape::Ball>(node));
    if (exactSphere) {
        const Point& c = std::holds_alternative<shape::Ball>(node) ? std::get<shape::Ball>(node).center
                                                                   : std::get<shape::SphereShell>(node).center;
        const double r = std::holds_alternative<shape::Ball>(node) ? std::get<shape::Ball>(node).radius
                                                                   : std::get<shape::SphereShell>(node).radius;
        detail::Rng rng(seed);
        detail::Candidates cands;
        cands.dim = dim;
        detail::sphere_points(cands, c.coords(), r, resolution, rng);
        PointCloud cloud(dim, mode);
        detail::SeparationIndex index(cloud);
        detail::accept(region, cands, cloud, index);
        return cloud;
    }

    const double exponent = mode == SampleMode::surface ? static_cast<double>(dim - 1) : static_cast<double>(dim);
    const double h0 = 2.0 * w.rHi / std::pow(static_cast<double>(resolution), 1.0 / exponent);
    const std::size_t budget = detail::candidate_budget(resolution);
    return detail::match_count(
        [&](double h) { return sample_with_spacing(region, h, mode, seed, kernelExponent, budget); }, h0, resolution,
        exponent, dim, mode);
}

/// One dyadic shell lo <= |x - center| < hi of a graded exhaustion and its spacing.
struct ShellPlan {
    double lo = 0.0;
    double hi = 0.0;
    double spacing = 0.0;
    std::uint64_t seed = 0;
};

/**
 * @brief Spacing plan for nested truncations K_R = family ∩ {|x - center| < R}.
 *
 * Shells are [0, r0), [r0, 2 r0), [2 r0, 4 r0), ... up to rMax. Each shell's
 * spacing is tuned so the family's own boundary inside the shell carries about
 * pointsPerShell points; it does not depend on the truncation radius, so the
 * samples of K_R and K_R' share every shell below min(R, R').
 */
struct GradedPlan {
    Region family;
    Point center;
    std::vector<ShellPlan> shells;
    SampleMode mode = SampleMode::surface;
    double kernelExponent = -1.0;
};

namespace detail {
inline PointCloud shell_points(const GradedPlan& plan, const ShellPlan& shell, double hi, std::size_t budget) {
    const Region clip = Region::annulus_clip(plan.family, plan.center, shell.lo, hi);
    PointCloud cloud(plan.family.dim(), plan.mode);
    if (provably_empty(clip)) return cloud;
    Window w{plan.center.vector(), shell.lo, hi};
    Rng rng(shell.seed);
    Candidates cands;
    cands.dim = plan.family.dim();
    cands.limit = budget;
    if (plan.mode == SampleMode::surface) {
        gather_surfaces(clip, w, shell.spacing, rng, cands, plan.kernelExponent, false);
    } else {
        gather_lattice(clip, w, shell.spacing, rng, cands);
        gather_thin_axes(clip, w, shell.spacing, cands, plan.kernelExponent);
    }
    SeparationIndex index(cloud);
    accept(clip, cands, cloud, index);
    return cloud;
}
} // namespace detail

inline GradedPlan plan_shells(const Region& family, const Point& center, double rMax, double r0,
                              std::size_t pointsPerShell, SampleMode mode, std::uint64_t seed,
                              double kernelExponent = -1.0) {
    require(center.dim() == family.dim(), "shell center dimension mismatch");
    require(std::isfinite(r0) && r0 > 0.0, "first shell radius must be positive");
    require(std::isfinite(rMax) && rMax > 0.0, "largest truncation radius must be positive");
    require(pointsPerShell >= 1, "points per shell must be at least 1");
    GradedPlan plan{family, center, {}, mode, kernelExponent};
    const double exponent = mode == SampleMode::surface ? static_cast<double>(family.dim() - 1)
                                                        : static_cast<double>(family.dim());
    double lo = 0.0, hi = r0;
    std::uint64_t k = 0;
    while (lo < rMax) {
        ShellPlan shell{lo, hi, 0.0, seed + k};
        const double h0 = 2.0 * hi / std::pow(static_cast<double>(pointsPerShell), 1.0 / exponent);
        double chosen = h0;
        double bestGap = std::numeric_limits<double>::infinity();
        const std::size_t budget = detail::candidate_budget(pointsPerShell);
        detail::match_count(
            [&](double h) {
                ShellPlan trial = shell;
                trial.spacing = h;
                PointCloud c = detail::shell_points(plan, trial, hi, budget);
                const double gap = std::abs(static_cast<double>(c.size()) - static_cast<double>(pointsPerShell));
                if (!c.empty() && gap < bestGap) {
                    bestGap = gap;
                    chosen = h;
                }
                return c;
            },
            h0, pointsPerShell, exponent, family.dim(), mode);
        shell.spacing = chosen;
        plan.shells.push_back(shell);
        lo = hi;
        hi *= 2.0;
        ++k;
    }
    return plan;
}

/// Sample of the truncation family ∩ {|x - center| < R}: shells in order, then the cap |x - center| = R.
inline PointCloud sample_graded(const GradedPlan& plan, double R) {
    require(std::isfinite(R) && R > 0.0, "truncation radius must be positive");
    require(!plan.shells.empty() && R <= plan.shells.back().hi, "truncation radius exceeds the shell plan");
    const std::size_t dim = plan.family.dim();
    PointCloud cloud(dim, plan.mode);
    detail::SeparationIndex index(cloud);
    const Region trunc = Region::annulus_clip(plan.family, plan.center, 0.0, R);
    double lastSpacing = plan.shells.front().spacing;
    std::uint64_t lastSeed = plan.shells.front().seed;
    for (const auto& shell : plan.shells) {
        if (shell.lo >= R) break;
        const double hi = std::min(shell.hi, R);
        const PointCloud part = detail::shell_points(plan, shell, hi, std::numeric_limits<std::size_t>::max());
        for (std::size_t i = 0; i < part.size(); ++i) {
            if (!index.admits(part.point(i), part.cell_radius(i))) continue;
            cloud.push_back(part.point(i), part.cell_radius(i));
            index.insert(cloud.size() - 1);
        }
        lastSpacing = shell.spacing;
        lastSeed = shell.seed;
    }
    if (plan.mode == SampleMode::surface) {
        detail::Rng rng(lastSeed ^ 0x5DEECE66Dull);
        detail::Candidates cap;
        cap.dim = dim;
        detail::cut_sphere(cap, plan.family, plan.center.coords(), R, lastSpacing, rng);
        detail::accept(trunc, cap, cloud, index);
    }
    return cloud;
}

} // namespace rieszpot

#endif // RIESZPOT_SAMPLING_HPP_
