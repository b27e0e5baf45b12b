#ifndef RIESZPOT_EQUILIBRIUM_HPP_
#define RIESZPOT_EQUILIBRIUM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rieszpot/csv.hpp"
#include "rieszpot/error.hpp"
#include "rieszpot/kernel.hpp"
#include "rieszpot/measure.hpp"
#include "rieszpot/nnqp.hpp"
#include "rieszpot/parallel.hpp"
#include "rieszpot/region.hpp"
#include "rieszpot/sampling.hpp"

namespace rieszpot {

struct EquilibriumOptions {
    std::size_t resolution = 2000;
    SampleMode mode = SampleMode::surface;
    std::uint64_t seed = 0;
    double tolKKT = 1e-8;
    std::size_t maxIter = 0;
    std::string gramCacheDir;
};

/// Statistics of the equilibrium potential over the grid.
struct PotentialStats {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    /// max |kappa(gamma) - 1| over the support.
    double supportMaxDeviation = 0.0;
};

struct EquilibriumResult {
    DiscreteMeasure gamma;
    double capacity = 0.0;
    double energyValue = 0.0;
    PotentialStats potentialOnSet;
    NNQPSolution solver;
    GramMonitor monitor;
};

/// Equilibrium measure on a fixed cloud: min 1/2 w^T G w - 1^T w, w >= 0.
inline EquilibriumResult equilibrium_on(const GramMatrix& G, const EquilibriumOptions& opts = {}) {
    const std::size_t N = G.size();
    EquilibriumResult res;
    res.monitor = G.monitor();
    if (N == 0) {
        res.gamma = DiscreteMeasure(G.cloud(), {});
        res.solver.converged = true;
        return res;
    }
    NNQPOptions qp;
    qp.tolKKT = opts.tolKKT;
    qp.maxIter = opts.maxIter;
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(N));
    res.solver = solve_nnqp(G.entries(), ones, qp);
    const Eigen::VectorXd& w = res.solver.w;
    res.gamma = DiscreteMeasure(G.cloud(), std::vector<double>(w.data(), w.data() + w.size()));
    res.capacity = total_mass(res.gamma);
    const Eigen::VectorXd u = G.entries() * w;
    res.energyValue = w.dot(u);
    res.potentialOnSet.min = u.minCoeff();
    res.potentialOnSet.max = u.maxCoeff();
    res.potentialOnSet.mean = u.mean();
    for (Eigen::Index i = 0; i < u.size(); ++i)
        if (w[i] > 0.0)
            res.potentialOnSet.supportMaxDeviation = std::max(res.potentialOnSet.supportMaxDeviation, std::abs(u[i] - 1.0));
    return res;
}

inline EquilibriumResult equilibrium_on(const PointCloud& cloud, const RieszParams& params,
                                        const EquilibriumOptions& opts = {}) {
    GramOptions go;
    go.cacheDir = opts.gramCacheDir;
    return equilibrium_on(gram(cloud, params, go), opts);
}

/// Samples the bounded region and computes its discrete equilibrium measure.
inline EquilibriumResult equilibrium_measure(const Region& region, const RieszParams& params,
                                             const EquilibriumOptions& opts = {}) {
    params.validate();
    require(region.dim() == params.n, "region dimension does not match the kernel");
    const PointCloud cloud = sample(region, opts.resolution, opts.mode, opts.seed, params.exponent());
    return equilibrium_on(cloud, params, opts);
}

inline double capacity(const Region& region, const RieszParams& params, const EquilibriumOptions& opts = {}) {
    return equilibrium_measure(region, params, opts).capacity;
}

// Wiener-type series.

enum class WienerMode { thinnessAtInfinity, regularityAtPoint, capacityFiniteness };
enum class FitType { none, geometric, powerLaw };
enum class SeriesVerdict { convergent, divergent, inconclusive };

inline const char* to_string(WienerMode m) {
    switch (m) {
    case WienerMode::thinnessAtInfinity: return "thinness";
    case WienerMode::regularityAtPoint: return "regularity";
    case WienerMode::capacityFiniteness: return "finiteness";
    }
    return "?";
}

inline WienerMode wiener_mode_from_string(const std::string& s) {
    if (s == "thinness") return WienerMode::thinnessAtInfinity;
    if (s == "regularity") return WienerMode::regularityAtPoint;
    if (s == "finiteness") return WienerMode::capacityFiniteness;
    throw InvalidInput("unknown Wiener mode '" + s + "'");
}

inline const char* to_string(FitType t) {
    switch (t) {
    case FitType::none: return "none";
    case FitType::geometric: return "geometric";
    case FitType::powerLaw: return "power-law";
    }
    return "?";
}

inline const char* to_string(SeriesVerdict v) {
    switch (v) {
    case SeriesVerdict::convergent: return "convergent";
    case SeriesVerdict::divergent: return "divergent";
    case SeriesVerdict::inconclusive: return "inconclusive";
    }
    return "?";
}

struct ClassifierOptions {
    /// Geometric fits with ratio <= 1 - geometricMargin are convergent.
    double geometricMargin = 0.1;
    /// Power-law fits with exponent <= 1 + powerMargin are divergent.
    double powerMargin = 0.3;
    double minGoodnessOfFit = 0.95;
    /// Leading terms skipped by the fit when at least fitMinTerms remain.
    std::size_t fitSkip = 2;
    std::size_t fitMinTerms = 3;
    /// Floor tau for the total sum of squares (m tau^2), so flat sequences count as well fitted.
    double r2Floor = 0.1;
    /// Tail estimate <= tailConvergent * partial sum: convergent; >= tailDivergent * partial sum: divergent.
    double tailConvergent = 1.0;
    double tailDivergent = 10.0;
    /// Two good fits with different verdicts closer than this in R^2 give inconclusive.
    double fitTieMargin = 0.01;
};

struct FittedModel {
    FitType type = FitType::none;
    double ratio = 0.0;
    double exponent = 0.0;
    double goodnessOfFit = 0.0;
    double r2Geometric = 0.0;
    double r2PowerLaw = 0.0;
    double geometricRatio = 0.0;
    double powerExponent = 0.0;
    /// Estimated sum of the terms beyond the last one, from the chosen model.
    double tailEstimate = 0.0;
    std::size_t fittedTerms = 0;
};

struct SeriesClassification {
    SeriesVerdict verdict = SeriesVerdict::inconclusive;
    FittedModel model;
    std::string reason;
};

namespace detail {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y, double tau) {
    const double m = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / m;
        my += y[i] / m;
    }
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxx > 0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    double ssRes = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ssRes += r * r;
    }
    f.r2 = 1.0 - ssRes / std::max(syy, m * tau * tau);
    return f;
}

} // namespace detail

/**
 * @brief Classifies a series of nonnegative terms t_j (index j given) from a model fit.
 *
 * Fits log t_j against j (geometric) and against log j (power law) on the tail
 * of the sequence and keeps the better fit; verdicts follow the configured
 * margins, with a tail-sum bound for decays between the margins.
 */
inline SeriesClassification classify_series(const std::vector<int>& index, const std::vector<double>& terms,
                                            const ClassifierOptions& opts = {}) {
    require(index.size() == terms.size(), "series index and terms differ in length");
    SeriesClassification out;
    double partial = 0.0;
    for (double t : terms) {
        require(std::isfinite(t) && t >= 0.0, "series terms must be finite and nonnegative");
        partial += t;
    }
    if (terms.empty()) {
        out.reason = "no terms";
        return out;
    }
    if (partial == 0.0) {
        out.verdict = SeriesVerdict::convergent;
        out.reason = "all terms vanish";
        return out;
    }
    if (terms.back() == 0.0) {
        out.verdict = SeriesVerdict::convergent;
        out.reason = "trailing terms vanish";
        return out;
    }
    std::vector<double> js, logj, logt;
    for (std::size_t k = 0; k < terms.size(); ++k) {
        if (terms[k] <= 0.0) continue;
        js.push_back(index[k]);
        logj.push_back(std::log(static_cast<double>(index[k])));
        logt.push_back(std::log(terms[k]));
    }
    if (js.size() >= opts.fitSkip + opts.fitMinTerms) {
        js.erase(js.begin(), js.begin() + static_cast<std::ptrdiff_t>(opts.fitSkip));
        logj.erase(logj.begin(), logj.begin() + static_cast<std::ptrdiff_t>(opts.fitSkip));
        logt.erase(logt.begin(), logt.begin() + static_cast<std::ptrdiff_t>(opts.fitSkip));
    }
    if (js.size() < 2) {
        out.reason = "too few positive terms to fit";
        return out;
    }
    const bool powerPossible = js.front() >= 1.0;
    const auto geo = detail::fit_line(js, logt, opts.r2Floor);
    const auto pow = powerPossible ? detail::fit_line(logj, logt, opts.r2Floor) : detail::LineFit{0, 0, -1e300};
    FittedModel& fm = out.model;
    fm.fittedTerms = js.size();
    fm.r2Geometric = geo.r2;
    fm.r2PowerLaw = pow.r2;
    fm.geometricRatio = std::exp(geo.slope);
    fm.powerExponent = -pow.slope;
    const double lastJ = js.back();

    auto verdict_geometric = [&](std::string& why, double& tail) {
        const double r = fm.geometricRatio;
        const double last = std::exp(geo.intercept + geo.slope * lastJ);
        tail = r < 1.0 ? last * r / (1.0 - r) : std::numeric_limits<double>::infinity();
        if (r <= 1.0 - opts.geometricMargin) {
            why = "geometric decay with ratio " + format_real(r);
            return SeriesVerdict::convergent;
        }
        if (r >= 1.0) {
            why = "geometric ratio " + format_real(r) + " >= 1";
            return SeriesVerdict::divergent;
        }
        if (tail <= opts.tailConvergent * partial) {
            why = "geometric tail bound below partial sum";
            return SeriesVerdict::convergent;
        }
        if (tail >= opts.tailDivergent * partial) {
            why = "geometric tail bound dominates partial sum";
            return SeriesVerdict::divergent;
        }
        why = "geometric ratio within the margin";
        return SeriesVerdict::inconclusive;
    };
    auto verdict_power = [&](std::string& why, double& tail) {
        const double p = fm.powerExponent;
        const double last = std::exp(pow.intercept + pow.slope * std::log(lastJ));
        tail = p > 1.0 ? last * lastJ / (p - 1.0) : std::numeric_limits<double>::infinity();
        if (p <= 1.0 + opts.powerMargin) {
            why = "power-law exponent " + format_real(p) + " <= 1 + margin";
            return SeriesVerdict::divergent;
        }
        if (tail <= opts.tailConvergent * partial) {
            why = "power-law tail bound below partial sum";
            return SeriesVerdict::convergent;
        }
        if (tail >= opts.tailDivergent * partial) {
            why = "power-law tail bound dominates partial sum";
            return SeriesVerdict::divergent;
        }
        why = "power-law exponent within the margin";
        return SeriesVerdict::inconclusive;
    };

    std::string whyG, whyP;
    double tailG = 0, tailP = 0;
    const SeriesVerdict vG = verdict_geometric(whyG, tailG);
    const SeriesVerdict vP = powerPossible ? verdict_power(whyP, tailP) : SeriesVerdict::inconclusive;
    const bool geoBetter = geo.r2 >= pow.r2;
    fm.type = geoBetter ? FitType::geometric : FitType::powerLaw;
    fm.goodnessOfFit = geoBetter ? geo.r2 : pow.r2;
    fm.ratio = fm.geometricRatio;
    fm.exponent = fm.powerExponent;
    fm.tailEstimate = geoBetter ? tailG : tailP;
    if (fm.goodnessOfFit < opts.minGoodnessOfFit) {
        out.reason = "best fit R^2 " + format_real(fm.goodnessOfFit) + " below threshold";
        return out;
    }
    if (powerPossible && geo.r2 >= opts.minGoodnessOfFit && pow.r2 >= opts.minGoodnessOfFit && vG != vP &&
        std::abs(geo.r2 - pow.r2) < opts.fitTieMargin) {
        out.reason = "geometric and power-law fits disagree with similar quality";
        return out;
    }
    out.verdict = geoBetter ? vG : vP;
    out.reason = geoBetter ? whyG : whyP;
    return out;
}

struct WienerTerm {
    int j = 0;
    double rLo = 0.0;
    double rHi = 0.0;
    double sliceCapacity = 0.0;
    double term = 0.0;
    std::size_t points = 0;
    bool converged = true;
};

struct WienerOptions {
    double q = 2.0;
    int jMin = 1;
    int jMax = 7;
    std::size_t slicePoints = 400;
    SampleMode mode = SampleMode::surface;
    std::uint64_t seed = 0;
    double tolKKT = 1e-8;
    ClassifierOptions classifier;
};

struct WienerReport {
    WienerMode mode = WienerMode::thinnessAtInfinity;
    Point y;
    double q = 2.0;
    std::vector<WienerTerm> terms;
    std::vector<double> partialSums;
    SeriesClassification classification;
    bool allConverged = true;
};

/// Annulus of index j for the mode: [q^j, q^{j+1}) for q > 1, (q^{j+1}, q^j] for q < 1.
inline Region wiener_slice(const Region& region, WienerMode mode, const Point& y, double q, int j) {
    if (mode == WienerMode::regularityAtPoint) {
        require(q > 0.0 && q < 1.0, "regularity mode needs q in (0, 1)");
        return Region::annulus_clip(region, y, std::pow(q, j + 1), std::pow(q, j), true);
    }
    return annular_slice(region, y, q, j);
}

/**
 * @brief Slice capacities c(A_j) and series terms for the chosen mode.
 *
 * thinness and regularity: t_j = c(A_j) / q^{j (n - alpha)}; finiteness: t_j = c(A_j).
 * Each slice carries about slicePoints points, so its spacing scales with its diameter.
 */
inline WienerReport wiener_series(const Region& region, WienerMode mode, const Point& y, const RieszParams& params,
                                  const WienerOptions& opts = {}) {
    params.validate();
    require(region.dim() == params.n && y.dim() == params.n, "dimension mismatch in Wiener series");
    require(opts.jMin >= 0 && opts.jMax >= opts.jMin, "Wiener index range must satisfy 0 <= jMin <= jMax");
    require(std::isfinite(opts.q) && opts.q > 0.0, "q must be positive");
    if (mode == WienerMode::regularityAtPoint)
        require(opts.q < 1.0, "regularity mode needs q in (0, 1)");
    else
        require(opts.q > 1.0, "thinness and finiteness modes need q > 1");

    WienerReport rep;
    rep.mode = mode;
    rep.y = y;
    rep.q = opts.q;
    const std::size_t count = static_cast<std::size_t>(opts.jMax - opts.jMin + 1);
    rep.terms.resize(count);
    parallel_for(count, [&](std::size_t k) {
        const int j = opts.jMin + static_cast<int>(k);
        const Region slice = wiener_slice(region, mode, y, opts.q, j);
        const PointCloud cloud = sample(slice, opts.slicePoints, opts.mode, opts.seed + k, params.exponent());
        EquilibriumOptions eo;
        eo.tolKKT = opts.tolKKT;
        GramOptions go;
        go.monitor = false;
        const EquilibriumResult eq = equilibrium_on(gram(cloud, params, go), eo);
        WienerTerm& t = rep.terms[k];
        t.j = j;
        t.rLo = std::pow(opts.q, mode == WienerMode::regularityAtPoint ? j + 1 : j);
        t.rHi = std::pow(opts.q, mode == WienerMode::regularityAtPoint ? j : j + 1);
        t.sliceCapacity = eq.capacity;
        t.points = cloud.size();
        t.converged = eq.solver.converged;
        t.term = mode == WienerMode::capacityFiniteness
                     ? eq.capacity
                     : eq.capacity / std::pow(opts.q, j * (static_cast<double>(params.n) - params.alpha));
    });
    std::vector<int> idx;
    std::vector<double> vals;
    double sum = 0.0;
    for (const auto& t : rep.terms) {
        sum += t.term;
        rep.partialSums.push_back(sum);
        rep.allConverged = rep.allConverged && t.converged;
        idx.push_back(t.j);
        vals.push_back(t.term);
    }
    // In regularity mode the slices shrink towards y; the fit runs over the same index j.
    rep.classification = classify_series(idx, vals, opts.classifier);
    if (!rep.allConverged && rep.classification.verdict != SeriesVerdict::inconclusive) {
        rep.classification.verdict = SeriesVerdict::inconclusive;
        rep.classification.reason = "a slice solve did not converge";
    }
    return rep;
}

/// Human-readable reading of the verdict for the mode.
inline std::string interpret(const WienerReport& r) {
    const auto v = r.classification.verdict;
    if (v == SeriesVerdict::inconclusive) return "inconclusive";
    switch (r.mode) {
    case WienerMode::thinnessAtInfinity:
        return v == SeriesVerdict::convergent ? "convergent (thin)" : "divergent (not thin)";
    case WienerMode::regularityAtPoint:
        return v == SeriesVerdict::divergent ? "divergent (regular)" : "convergent (irregular)";
    case WienerMode::capacityFiniteness:
        return v == SeriesVerdict::convergent ? "convergent (finite capacity)" : "divergent (infinite capacity)";
    }
    return "?";
}

/// Writes `j,rLo,rHi,sliceCapacity,term,partialSum`.
inline void write_wiener_csv(std::ostream& out, const WienerReport& r) {
    out << "j,rLo,rHi,sliceCapacity,term,partialSum\n";
    for (std::size_t k = 0; k < r.terms.size(); ++k) {
        const auto& t = r.terms[k];
        out << t.j << ',' << format_real(t.rLo) << ',' << format_real(t.rHi) << ',' << format_real(t.sliceCapacity)
            << ',' << format_real(t.term) << ',' << format_real(r.partialSums[k]) << '\n';
    }
}

inline nlohmann::json wiener_summary_json(const WienerReport& r) {
    const auto& m = r.classification.model;
    return {{"mode", to_string(r.mode)},
            {"y", r.y.vector()},
            {"q", r.q},
            {"classification", to_string(r.classification.verdict)},
            {"interpretation", interpret(r)},
            {"reason", r.classification.reason},
            {"allConverged", r.allConverged},
            {"fit",
             {{"type", to_string(m.type)},
              {"goodnessOfFit", m.goodnessOfFit},
              {"geometricRatio", m.geometricRatio},
              {"powerLawExponent", m.powerExponent},
              {"r2Geometric", m.r2Geometric},
              {"r2PowerLaw", m.r2PowerLaw},
              {"tailEstimate", m.tailEstimate},
              {"fittedTerms", m.fittedTerms}}},
            {"partialSum", r.partialSums.empty() ? 0.0 : r.partialSums.back()}};
}

struct EquilibriumExhaustionOptions {
    EquilibriumOptions equilibrium;
    double firstShell = 1.0;
    std::size_t pointsPerShell = 400;
    std::optional<PointCloud> probes;
    double tolMonotone = 1e-6;
    /// Runs the thinness series first to flag families whose equilibrium measure may not exist.
    bool checkThinness = true;
    WienerOptions wiener;
};

struct EquilibriumExhaustionTrace {
    std::vector<double> truncationRadii;
    std::vector<EquilibriumResult> results;
    std::vector<double> capacities;
    std::vector<std::size_t> cloudSizes;
    PointCloud probes;
    std::vector<std::vector<double>> probePotentials;
    double potentialMonotonicity = 0.0;
    double minProbeIncrement = std::numeric_limits<double>::infinity();
    bool capacitiesMonotone = true;
    /// (c_last - c_prev) / c_last.
    double lastRelativeIncrement = 0.0;
    std::optional<SeriesVerdict> thinness;
    bool equilibriumMayNotExist = false;
    bool allConverged = true;
    bool flagged = false;
};

/**
 * @brief Equilibrium measures of nested truncations family ∩ {|x| < R}.
 *
 * Uses the same graded sampling as exhaustion_sweep. Default probes lie on the
 * sphere |x| = 2 max R and on |x| = R_1 / 2 (those away from the family).
 */
inline EquilibriumExhaustionTrace equilibrium_exhaustion(const Region& family, const std::vector<double>& radii,
                                                         const RieszParams& params,
                                                         const EquilibriumExhaustionOptions& opts = {}) {
    params.validate();
    require(!radii.empty() && radii.front() > 0.0, "truncation radii must be positive");
    for (std::size_t k = 1; k < radii.size(); ++k)
        require(radii[k] > radii[k - 1], "truncation radii must be strictly increasing");
    const std::size_t n = family.dim();
    const Point center = Point::origin(n);
    const GradedPlan plan = plan_shells(family, center, radii.back(), opts.firstShell, opts.pointsPerShell,
                                        opts.equilibrium.mode, opts.equilibrium.seed, params.exponent());
    EquilibriumExhaustionTrace trace;
    trace.truncationRadii = radii;
    if (opts.checkThinness) {
        const WienerReport w = wiener_series(family, WienerMode::thinnessAtInfinity, center, params, opts.wiener);
        trace.thinness = w.classification.verdict;
        trace.equilibriumMayNotExist = w.classification.verdict != SeriesVerdict::convergent;
    }
    if (opts.probes) {
        trace.probes = *opts.probes;
    } else {
        detail::Rng rng(opts.equilibrium.seed ^ 0x77u);
        const PointCloud first = sample_graded(plan, radii.front());
        PointCloud probes(n, SampleMode::volume);
        std::vector<double> p(n);
        for (int k = 0; k < 200 && probes.size() < 75; ++k) {
            double len = 0.0;
            for (auto& c : p) {
                c = rng.normal();
                len += c * c;
            }
            const double r = k < 100 ? 0.5 * radii.front() : 2.0 * radii.back();
            for (auto& c : p) c *= r / std::sqrt(len);
            double gap = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < first.size(); ++i) gap = std::min(gap, distance(p, first.point(i)));
            if (contains(family, std::span<const double>(p)) || gap < 0.25 * radii.front()) continue;
            probes.push_back(p, 1.0);
        }
        trace.probes = probes;
    }
    for (double R : radii) {
        const PointCloud cloud = sample_graded(plan, R);
        EquilibriumResult res = equilibrium_on(cloud, params, opts.equilibrium);
        trace.cloudSizes.push_back(cloud.size());
        trace.capacities.push_back(res.capacity);
        trace.allConverged = trace.allConverged && res.solver.converged;
        trace.probePotentials.push_back(potential_field(res.gamma, trace.probes, params).values);
        trace.results.push_back(std::move(res));
    }
    for (std::size_t k = 1; k < radii.size(); ++k) {
        if (trace.capacities[k] < trace.capacities[k - 1] * (1.0 - 1e-9)) trace.capacitiesMonotone = false;
        for (std::size_t i = 0; i < trace.probes.size(); ++i) {
            const double inc = trace.probePotentials[k][i] - trace.probePotentials[k - 1][i];
            trace.minProbeIncrement = std::min(trace.minProbeIncrement, inc);
            trace.potentialMonotonicity = std::max(trace.potentialMonotonicity, -inc);
        }
    }
    if (radii.size() >= 2 && trace.capacities.back() > 0.0)
        trace.lastRelativeIncrement =
            (trace.capacities.back() - trace.capacities[radii.size() - 2]) / trace.capacities.back();
    trace.flagged = !trace.allConverged || trace.potentialMonotonicity > opts.tolMonotone ||
                    !trace.capacitiesMonotone || trace.equilibriumMayNotExist;
    return trace;
}

} // namespace rieszpot

#endif // RIESZPOT_EQUILIBRIUM_HPP_
