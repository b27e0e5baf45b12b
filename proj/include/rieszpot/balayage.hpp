#ifndef RIESZPOT_BALAYAGE_HPP_
#define RIESZPOT_BALAYAGE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rieszpot/csv.hpp"
#include "rieszpot/error.hpp"
#include "rieszpot/kernel.hpp"
#include "rieszpot/measure.hpp"
#include "rieszpot/nnqp.hpp"
#include "rieszpot/region.hpp"
#include "rieszpot/sampling.hpp"

namespace rieszpot {

struct GapStats {
    double maxAbsGap = 0.0;
    double meanAbsGap = 0.0;
    /// max |gap| / reference potential.
    double maxRelGap = 0.0;
    std::size_t count = 0;
};

struct BalayageOptions {
    std::size_t resolution = 2000;
    SampleMode mode = SampleMode::surface;
    std::uint64_t seed = 0;
    double tolKKT = 1e-8;
    std::size_t maxIter = 0;
    double tolMass = 1e-6;
    /// Random probes outside the target for the domination statistics.
    std::size_t offSetProbes = 200;
    std::string gramCacheDir;
};

/// Discrete inner balayage of a source onto a sampled target.
struct BalayageResult {
    DiscreteMeasure swept;
    double sourceMass = 0.0;
    double sweptMass = 0.0;
    /// kappa(swept) - kappa(source) over every target grid point.
    GapStats onSetMatch;
    /// Same gap restricted to the solver support (w_i > 0).
    GapStats onSupportMatch;
    /// max(kappa(swept) - kappa(source), 0) over probes outside the target.
    GapStats offSetDomination;
    NNQPSolution solver;
    GramMonitor monitor;

    bool massNotCreated(double tolMass) const { return sweptMass <= sourceMass * (1.0 + tolMass); }
};

namespace detail {

inline GapStats gap_stats(const std::vector<double>& gaps, const std::vector<double>& reference) {
    GapStats s;
    s.count = gaps.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        const double a = std::abs(gaps[i]);
        s.maxAbsGap = std::max(s.maxAbsGap, a);
        sum += a;
        if (reference[i] > 0.0) s.maxRelGap = std::max(s.maxRelGap, a / reference[i]);
    }
    s.meanAbsGap = gaps.empty() ? 0.0 : sum / static_cast<double>(gaps.size());
    return s;
}

/// Probes in the ball twice the size of the target's bounding ball, outside the
/// target and at least 2 delta away from every atom of the given measures.
inline PointCloud off_set_probes(const Region& target, const std::vector<const DiscreteMeasure*>& avoid,
                                 std::size_t count, std::uint64_t seed) {
    const std::size_t n = target.dim();
    PointCloud probes(n, SampleMode::volume);
    auto bb = bounding_ball(target);
    if (!bb || count == 0) return probes;
    Rng rng(seed ^ 0xA5A5A5A5ull);
    const double R = 2.0 * bb->radius;
    std::vector<double> p(n);
    for (std::size_t attempt = 0; attempt < 200 * count && probes.size() < count; ++attempt) {
        double len = 0.0;
        for (auto& c : p) {
            c = rng.normal();
            len += c * c;
        }
        const double radius = R * std::pow(rng.uniform(), 1.0 / static_cast<double>(n)) / std::sqrt(len);
        for (std::size_t a = 0; a < n; ++a) p[a] = bb->center[a] + radius * p[a];
        if (contains(target, std::span<const double>(p))) continue;
        bool clear = true;
        for (const auto* m : avoid) {
            for (std::size_t i = 0; clear && i < m->size(); ++i) {
                const double d = 2.0 * m->cloud().cell_radius(i);
                clear = squared_distance(p, m->cloud().point(i)) >= d * d;
            }
        }
        if (clear) probes.push_back(p, 1.0);
    }
    return probes;
}

} // namespace detail

/**
 * @brief Balayage of sigma onto a fixed cloud with a precomputed Gram matrix.
 *
 * Solves min 1/2 w^T G w - b^T w, w >= 0, with b_i = kappa(sigma)(x_i).
 * `target` (optional) defines "off the set" for the domination probes.
 */
inline BalayageResult sweep_onto(const DiscreteMeasure& sigma, const GramMatrix& G, const RieszParams& params,
                                 const BalayageOptions& opts = {}, const Region* target = nullptr) {
    const PointCloud& cloud = G.cloud();
    const std::size_t N = cloud.size();
    BalayageResult res;
    res.sourceMass = total_mass(sigma);
    res.monitor = G.monitor();
    Eigen::VectorXd b(static_cast<Eigen::Index>(N));
    parallel_for(N, [&](std::size_t i) { b[static_cast<Eigen::Index>(i)] = potential(sigma, cloud.point(i), params); });
    NNQPOptions qp;
    qp.tolKKT = opts.tolKKT;
    qp.maxIter = opts.maxIter;
    res.solver = solve_nnqp(G.entries(), b, qp);
    const Eigen::VectorXd& w = res.solver.w;
    res.swept = DiscreteMeasure(cloud, std::vector<double>(w.data(), w.data() + w.size()));
    res.sweptMass = total_mass(res.swept);

    // Points are separated, so G w equals the regularized potential of the swept measure on the grid.
    const Eigen::VectorXd Gw = G.entries() * w;
    std::vector<double> gaps(N), ref(N), supGaps, supRef;
    for (std::size_t i = 0; i < N; ++i) {
        gaps[i] = Gw[static_cast<Eigen::Index>(i)] - b[static_cast<Eigen::Index>(i)];
        ref[i] = b[static_cast<Eigen::Index>(i)];
        if (w[static_cast<Eigen::Index>(i)] > 0.0) {
            supGaps.push_back(gaps[i]);
            supRef.push_back(ref[i]);
        }
    }
    res.onSetMatch = detail::gap_stats(gaps, ref);
    res.onSupportMatch = detail::gap_stats(supGaps, supRef);

    if (target && opts.offSetProbes > 0) {
        const PointCloud probes = detail::off_set_probes(*target, {&sigma, &res.swept}, opts.offSetProbes, opts.seed);
        std::vector<double> slack(probes.size()), pref(probes.size());
        parallel_for(probes.size(), [&](std::size_t k) {
            const double us = potential(sigma, probes.point(k), params);
            slack[k] = std::max(potential(res.swept, probes.point(k), params) - us, 0.0);
            pref[k] = us;
        });
        res.offSetDomination = detail::gap_stats(slack, pref);
    }
    return res;
}

inline BalayageResult sweep_onto(const DiscreteMeasure& sigma, const PointCloud& cloud, const RieszParams& params,
                                 const BalayageOptions& opts = {}, const Region* target = nullptr) {
    GramOptions go;
    go.cacheDir = opts.gramCacheDir;
    return sweep_onto(sigma, gram(cloud, params, go), params, opts, target);
}

/// Samples the bounded target and sweeps sigma onto it.
inline BalayageResult sweep(const DiscreteMeasure& sigma, const Region& target, const RieszParams& params,
                            const BalayageOptions& opts = {}) {
    params.validate();
    require(sigma.empty() || sigma.dim() == params.n, "source dimension does not match the kernel");
    const PointCloud cloud = sample(target, opts.resolution, opts.mode, opts.seed, params.exponent());
    return sweep_onto(sigma, cloud, params, opts, &target);
}

struct IdempotenceReport {
    double gap = 0.0;
    double bound = 0.0;
    bool passes = false;
    BalayageResult first;
};

/// Sweeps sigma, then sweeps the result onto the same cloud; the weights must agree.
inline IdempotenceReport sweep_idempotence_check(const DiscreteMeasure& sigma, const Region& target,
                                                 const RieszParams& params, const BalayageOptions& opts = {}) {
    const PointCloud cloud = sample(target, opts.resolution, opts.mode, opts.seed, params.exponent());
    GramOptions go;
    go.cacheDir = opts.gramCacheDir;
    const GramMatrix G = gram(cloud, params, go);
    IdempotenceReport rep;
    rep.first = sweep_onto(sigma, G, params, opts, &target);
    const BalayageResult second = sweep_onto(rep.first.swept, G, params, opts);
    const Eigen::VectorXd diff = second.solver.w - rep.first.solver.w;
    rep.gap = diff.size() ? diff.cwiseAbs().maxCoeff() : 0.0;
    double bmax = 0.0;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        bmax = std::max(bmax, potential(rep.first.swept, cloud.point(i), params));
    rep.bound = 10.0 * opts.tolKKT * std::max(1.0, bmax);
    rep.passes = rep.gap <= rep.bound;
    return rep;
}

struct SymmetryReport {
    /// kappa(mu^A, nu) and kappa(nu^A, mu).
    double lhs = 0.0;
    double rhs = 0.0;
    double gap = 0.0;
    double relGap = 0.0;
    bool converged = false;
};

/**
 * @brief |kappa(mu^A, nu) - kappa(nu^A, mu)| with the regularized energy.
 *
 * With independentDiscretizations the two sweeps use clouds sampled with seeds
 * s and s + 1, so the gap measures discretization error rather than the exact
 * symmetry of a shared Gram inverse.
 */
inline SymmetryReport symmetry_check(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const Region& target,
                                     const RieszParams& params, const BalayageOptions& opts = {},
                                     bool independentDiscretizations = true) {
    BalayageOptions a = opts, b = opts;
    if (independentDiscretizations) b.seed = opts.seed + 1;
    const BalayageResult muA = sweep(mu, target, params, a);
    const BalayageResult nuA = sweep(nu, target, params, b);
    SymmetryReport rep;
    rep.lhs = energy(muA.swept, nu, params);
    rep.rhs = energy(nuA.swept, mu, params);
    rep.gap = std::abs(rep.lhs - rep.rhs);
    const double ref = std::min(std::abs(rep.lhs), std::abs(rep.rhs));
    rep.relGap = ref > 0.0 ? rep.gap / ref : (rep.gap == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    rep.converged = muA.solver.converged && nuA.solver.converged;
    return rep;
}

struct SymmetryStudy {
    std::vector<std::size_t> resolutions;
    /// Root mean square and maximum of the relative gap over the seed pairs.
    std::vector<double> rmsRelGap;
    std::vector<double> maxRelGap;
    /// rmsRelGap at the first resolution over rmsRelGap at the last.
    double refinementFactor = 0.0;
    bool allConverged = true;
};

/// Symmetry gaps over `pairs` independent seed pairs (seeds 2k, 2k + 1) at each resolution.
inline SymmetryStudy symmetry_refinement(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const Region& target,
                                         const RieszParams& params, const std::vector<std::size_t>& resolutions,
                                         std::size_t pairs = 8, const BalayageOptions& opts = {}) {
    require(!resolutions.empty() && pairs > 0, "symmetry study needs resolutions and seed pairs");
    SymmetryStudy st;
    st.resolutions = resolutions;
    for (std::size_t N : resolutions) {
        double ss = 0.0, mx = 0.0;
        for (std::size_t k = 0; k < pairs; ++k) {
            BalayageOptions o = opts;
            o.resolution = N;
            o.offSetProbes = 0;
            o.seed = opts.seed + 2 * k;
            const SymmetryReport r = symmetry_check(mu, nu, target, params, o, true);
            ss += r.relGap * r.relGap;
            mx = std::max(mx, r.relGap);
            st.allConverged = st.allConverged && r.converged;
        }
        st.rmsRelGap.push_back(std::sqrt(ss / static_cast<double>(pairs)));
        st.maxRelGap.push_back(mx);
    }
    st.refinementFactor = st.rmsRelGap.back() > 0.0 ? st.rmsRelGap.front() / st.rmsRelGap.back()
                                                     : std::numeric_limits<double>::infinity();
    return st;
}

struct ExhaustionOptions {
    BalayageOptions sweep;
    /// Shells [0, r0), [r0, 2 r0), ... each carrying about pointsPerShell points.
    double firstShell = 1.0;
    std::size_t pointsPerShell = 400;
    /// Fixed probes for the monotonicity check; empty selects a default set.
    std::optional<PointCloud> probes;
    /// Allowed pointwise decrease of potentials between consecutive stages.
    double tolMonotone = 1e-6;
};

struct ExhaustionTrace {
    std::vector<double> truncationRadii;
    std::vector<BalayageResult> results;
    std::vector<double> massRatios;
    std::vector<std::size_t> cloudSizes;
    /// Largest decrease of the potential at a fixed probe between consecutive stages (0 if none).
    double potentialMonotonicity = 0.0;
    /// Smallest stage-to-stage change of the probe potentials.
    double minProbeIncrement = std::numeric_limits<double>::infinity();
    PointCloud probes;
    std::vector<std::vector<double>> probePotentials;
    bool allConverged = true;
    bool flagged = false;
};

namespace detail {

/// Probes on a sphere around the source's barycenter plus a few far away.
inline PointCloud default_exhaustion_probes(const DiscreteMeasure& sigma, const GradedPlan& plan, double rMax,
                                            double firstRadius, std::uint64_t seed) {
    const std::size_t n = sigma.dim();
    std::vector<double> bary(n, 0.0);
    const double m = total_mass(sigma);
    for (std::size_t i = 0; i < sigma.size(); ++i)
        for (std::size_t a = 0; a < n; ++a) bary[a] += sigma.weight(i) * sigma.cloud().point(i)[a] / m;
    const PointCloud first = sample_graded(plan, firstRadius);
    double gap = 1.0;
    for (std::size_t i = 0; i < first.size(); ++i) gap = std::min(gap, distance(bary, first.point(i)));
    Rng rng(seed ^ 0x3C3C3C3Cull);
    PointCloud probes(n, SampleMode::volume);
    std::vector<double> p(n);
    auto direction = [&] {
        double len = 0.0;
        for (auto& c : p) {
            c = rng.normal();
            len += c * c;
        }
        len = std::sqrt(len);
        for (auto& c : p) c /= len;
    };
    for (int k = 0; k < 50; ++k) {
        direction();
        for (std::size_t a = 0; a < n; ++a) p[a] = bary[a] + 0.5 * gap * p[a];
        probes.push_back(p, 1.0);
    }
    for (int k = 0; k < 25; ++k) {
        direction();
        for (std::size_t a = 0; a < n; ++a) p[a] = plan.center[a] + 2.0 * rMax * p[a];
        probes.push_back(p, 1.0);
    }
    return probes;
}

} // namespace detail

/**
 * @brief Sweeps sigma onto the nested truncations family ∩ {|x| < R} for increasing R.
 *
 * Truncations share every dyadic shell below the smaller radius (same spacing
 * and seed), so successive targets are nested up to the cap sphere.
 */
inline ExhaustionTrace exhaustion_sweep(const DiscreteMeasure& sigma, const Region& family,
                                        const std::vector<double>& radii, const RieszParams& params,
                                        const ExhaustionOptions& opts = {}) {
    params.validate();
    require(!radii.empty(), "exhaustion needs at least one truncation radius");
    for (std::size_t k = 1; k < radii.size(); ++k)
        require(radii[k] > radii[k - 1], "truncation radii must be strictly increasing");
    require(radii.front() > 0.0, "truncation radii must be positive");
    const Point center = Point::origin(family.dim());
    const GradedPlan plan = plan_shells(family, center, radii.back(), opts.firstShell, opts.pointsPerShell,
                                        opts.sweep.mode, opts.sweep.seed, params.exponent());
    ExhaustionTrace trace;
    trace.truncationRadii = radii;
    trace.probes = opts.probes ? *opts.probes
                               : detail::default_exhaustion_probes(sigma, plan, radii.back(), radii.front(),
                                                                   opts.sweep.seed);
    const double m = total_mass(sigma);
    for (double R : radii) {
        const PointCloud cloud = sample_graded(plan, R);
        const Region trunc = Region::annulus_clip(family, center, 0.0, R);
        BalayageResult res = sweep_onto(sigma, cloud, params, opts.sweep, &trunc);
        trace.cloudSizes.push_back(cloud.size());
        trace.massRatios.push_back(m > 0.0 ? res.sweptMass / m : 0.0);
        trace.allConverged = trace.allConverged && res.solver.converged;
        trace.probePotentials.push_back(potential_field(res.swept, trace.probes, params).values);
        trace.results.push_back(std::move(res));
    }
    for (std::size_t k = 1; k < trace.probePotentials.size(); ++k) {
        for (std::size_t i = 0; i < trace.probes.size(); ++i) {
            const double inc = trace.probePotentials[k][i] - trace.probePotentials[k - 1][i];
            trace.minProbeIncrement = std::min(trace.minProbeIncrement, inc);
            trace.potentialMonotonicity = std::max(trace.potentialMonotonicity, -inc);
        }
    }
    trace.flagged = !trace.allConverged || trace.potentialMonotonicity > opts.tolMonotone;
    return trace;
}

/// Writes `R,sweptMass,massRatio,maxOnSetGap,offSetSlack,converged`.
inline void write_trace_csv(std::ostream& out, const ExhaustionTrace& t) {
    out << "R,sweptMass,massRatio,maxOnSetGap,offSetSlack,converged\n";
    for (std::size_t k = 0; k < t.results.size(); ++k) {
        const auto& r = t.results[k];
        out << format_real(t.truncationRadii[k]) << ',' << format_real(r.sweptMass) << ','
            << format_real(t.massRatios[k]) << ',' << format_real(r.onSetMatch.maxAbsGap) << ','
            << format_real(r.offSetDomination.maxAbsGap) << ',' << (r.solver.converged ? 1 : 0) << '\n';
    }
}

} // namespace rieszpot

#endif // RIESZPOT_BALAYAGE_HPP_
