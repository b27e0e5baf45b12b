#ifndef RIESZPOT_PRINCIPLES_HPP_
#define RIESZPOT_PRINCIPLES_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rieszpot/balayage.hpp"
#include "rieszpot/equilibrium.hpp"
#include "rieszpot/error.hpp"
#include "rieszpot/kernel.hpp"
#include "rieszpot/measure.hpp"
#include "rieszpot/region.hpp"
#include "rieszpot/sampling.hpp"

namespace rieszpot {

struct PoMOptions {
    /// kappa(mu) <= kappa(nu) (1 + relTol) + absTol counts as domination.
    double relTol = 1e-8;
    double absTol = 1e-12;
    double tolMass = 1e-6;
    /// Probes within exclusionFactor * delta_i of atom i are dropped, unless they sit exactly on an atom
    /// (grid probes, where the regularized potential is the discrete one).
    double exclusionFactor = 2.0;
};

struct PoMVerdict {
    bool pointwiseHolds = true;
    std::vector<std::size_t> violatingProbes;
    /// max (kappa(mu) - kappa(nu)) / kappa(nu) over used probes.
    double maxRelativeExcess = -std::numeric_limits<double>::infinity();
    double massMu = 0.0;
    double massNu = 0.0;
    bool massInequalityHolds = true;
    std::size_t probesUsed = 0;
    std::size_t probesExcluded = 0;
    std::string probeRegion;
    PoMOptions tolerances;
};

namespace detail {

inline bool on_atom(const DiscreteMeasure& m, std::span<const double> p) {
    for (std::size_t i = 0; i < m.size(); ++i)
        if (squared_distance(p, m.cloud().point(i)) == 0.0) return true;
    return false;
}

inline bool near_atom(const DiscreteMeasure& m, std::span<const double> p, double factor) {
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double r = factor * m.cloud().cell_radius(i);
        if (squared_distance(p, m.cloud().point(i)) < r * r) return true;
    }
    return false;
}

} // namespace detail

/**
 * @brief Checks kappa(mu) <= kappa(nu) at probes and compares total masses.
 *
 * A violated hypothesis is reported, never thrown. Throws InvalidInput when the
 * probe set is empty or every probe is excluded.
 */
inline PoMVerdict pom_verify(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const PointCloud& probes,
                             const RieszParams& params, const PoMOptions& opts = {}, std::string probeRegion = "") {
    params.validate();
    require(!probes.empty(), "PoM check needs at least one probe");
    require(probes.dim() == params.n, "probe dimension does not match the kernel");
    require((mu.empty() || mu.dim() == params.n) && (nu.empty() || nu.dim() == params.n),
            "measure dimension does not match the kernel");
    PoMVerdict v;
    v.tolerances = opts;
    v.probeRegion = std::move(probeRegion);
    v.massMu = total_mass(mu);
    v.massNu = total_mass(nu);
    v.massInequalityHolds = v.massMu <= v.massNu * (1.0 + opts.tolMass);

    const std::size_t N = probes.size();
    std::vector<char> excluded(N, 0);
    std::vector<double> um(N, 0.0), un(N, 0.0);
    parallel_for(N, [&](std::size_t k) {
        const auto p = probes.point(k);
        const bool grid = detail::on_atom(mu, p) || detail::on_atom(nu, p);
        if (!grid && (detail::near_atom(mu, p, opts.exclusionFactor) || detail::near_atom(nu, p, opts.exclusionFactor))) {
            excluded[k] = 1;
            return;
        }
        um[k] = mu.empty() ? 0.0 : potential(mu, p, params);
        un[k] = nu.empty() ? 0.0 : potential(nu, p, params);
    });
    for (std::size_t k = 0; k < N; ++k) {
        if (excluded[k]) {
            ++v.probesExcluded;
            continue;
        }
        ++v.probesUsed;
        if (um[k] > un[k] * (1.0 + opts.relTol) + opts.absTol) {
            v.pointwiseHolds = false;
            v.violatingProbes.push_back(k);
        }
        if (un[k] > 0.0) v.maxRelativeExcess = std::max(v.maxRelativeExcess, (um[k] - un[k]) / un[k]);
    }
    require(v.probesUsed > 0, "every probe lies within the exclusion radius of an atom");
    return v;
}

enum class DominationStatus { holds, violated, hypothesisNotMet };

inline const char* to_string(DominationStatus s) {
    switch (s) {
    case DominationStatus::holds: return "holds";
    case DominationStatus::violated: return "violated";
    case DominationStatus::hypothesisNotMet: return "hypothesis-not-met";
    }
    return "?";
}

struct DominationReport {
    DominationStatus status = DominationStatus::holds;
    /// max (kappa(mu) - kappa(nu) - q) over the support-side probes.
    double hypothesisExcess = -std::numeric_limits<double>::infinity();
    /// max (kappa(mu) - kappa(nu) - q) over the global probes.
    double maxViolation = -std::numeric_limits<double>::infinity();
    std::size_t supportProbes = 0;
    std::size_t globalProbes = 0;
};

/// If kappa(mu) <= kappa(nu) + q at the support probes, checks it at the global probes.
inline DominationReport domination_check(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double qConst,
                                         const PointCloud& probesSupport, const PointCloud& probesGlobal,
                                         const RieszParams& params, double tol) {
    params.validate();
    require(std::isfinite(qConst) && qConst >= 0.0, "domination constant must be nonnegative");
    require(std::isfinite(tol) && tol >= 0.0, "domination tolerance must be nonnegative");
    auto excess = [&](const PointCloud& probes) {
        std::vector<double> e(probes.size());
        parallel_for(probes.size(), [&](std::size_t k) {
            const auto p = probes.point(k);
            const double a = mu.empty() ? 0.0 : potential(mu, p, params);
            const double b = nu.empty() ? 0.0 : potential(nu, p, params);
            e[k] = a - b - qConst;
        });
        double m = -std::numeric_limits<double>::infinity();
        for (double x : e) m = std::max(m, x);
        return m;
    };
    DominationReport rep;
    rep.supportProbes = probesSupport.size();
    rep.globalProbes = probesGlobal.size();
    rep.hypothesisExcess = excess(probesSupport);
    if (rep.hypothesisExcess > tol) {
        rep.status = DominationStatus::hypothesisNotMet;
        return rep;
    }
    rep.maxViolation = excess(probesGlobal);
    rep.status = rep.maxViolation <= tol ? DominationStatus::holds : DominationStatus::violated;
    return rep;
}

// Named experiments.

enum class Conclusion { pass, fail, inconclusive };

inline const char* to_string(Conclusion c) {
    switch (c) {
    case Conclusion::pass: return "pass";
    case Conclusion::fail: return "fail";
    case Conclusion::inconclusive: return "inconclusive";
    }
    return "?";
}

/// Hit probability of family ∩ B(0, R) from `start` for alpha = 2, with a standard error.
struct WalkEstimate {
    double value = 0.0;
    double standardError = 0.0;
    std::size_t walks = 0;
    std::uint64_t seed = 0;
};
using WalkOracle =
    std::function<WalkEstimate(const Region& family, double R, const Point& start, std::size_t walks, std::uint64_t seed)>;

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"f1-mass-retention", "f2-mass-loss",   "sharpness",
                                                "onset-pom",         "ball-benchmarks", "kelvin-identities",
                                                "thinness-atlas"};
    return names;
}

/// Every threshold used by the experiments, with its default.
struct ExperimentConfig {
    RieszParams params{3, 2.0};
    std::uint64_t seed = 0;
    double tolKKT = 1e-8;

    // ball-benchmarks
    std::size_t ballResolution = 2000;
    std::vector<double> ballRadii{1.0, 2.0};
    std::vector<double> diracDistances{2.0, 4.0};
    /// Sampling of the solid ball for the sweeps; volume mode exercises the boundary concentration.
    SampleMode sweepMode = SampleMode::volume;
    double ballTolerance = 0.02;
    double identityTolerance = 1e-6;
    double boundaryMassFraction = 0.99;

    // exhaustion experiments (F bodies in R^3, source off both bodies)
    double bodyS = 1.0;
    std::vector<double> truncationRadii{8.0, 16.0, 32.0};
    double firstShell = 1.0;
    /// 800 keeps the discretization bias of the F_2 swept mass near 2% (it is about 2.5% at 400).
    std::size_t pointsPerShell = 800;
    std::vector<double> source{-1.0, 0.0, 0.0};
    double sourceDelta = 1e-3;
    double retentionRatio = 0.9;
    double lossRatio = 0.8;
    double plateauIncrement = 0.02;
    double onSetGap = 0.02;
    double minDeficit = 0.05;
    double tolMonotone = 1e-6;
    double oracleTolerance = 0.03;
    std::size_t oracleWalks = 20000;
    std::uint64_t oracleSeed = 12345;

    // onset-pom
    std::size_t onsetTrials = 20;
    std::size_t onsetResolution = 300;
    double tolMass = 1e-6;

    // kelvin-identities
    std::size_t kelvinTrials = 100;
    std::size_t kelvinAtoms = 20;
    double kelvinTolerance = 1e-8;

    // thinness-atlas
    std::vector<double> f1Values{0.0, 1.0, 2.0};
    std::vector<double> f2Values{0.5, 1.0, 2.0};
    std::vector<double> finitenessValues{0.5, 1.0, 2.0};
    WienerOptions wiener;
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
    return {{"n", c.params.n},
            {"alpha", c.params.alpha},
            {"seed", c.seed},
            {"tolKKT", c.tolKKT},
            {"ballResolution", c.ballResolution},
            {"ballRadii", c.ballRadii},
            {"diracDistances", c.diracDistances},
            {"sweepMode", to_string(c.sweepMode)},
            {"ballTolerance", c.ballTolerance},
            {"identityTolerance", c.identityTolerance},
            {"boundaryMassFraction", c.boundaryMassFraction},
            {"bodyS", c.bodyS},
            {"truncationRadii", c.truncationRadii},
            {"firstShell", c.firstShell},
            {"pointsPerShell", c.pointsPerShell},
            {"source", c.source},
            {"sourceDelta", c.sourceDelta},
            {"retentionRatio", c.retentionRatio},
            {"lossRatio", c.lossRatio},
            {"plateauIncrement", c.plateauIncrement},
            {"onSetGap", c.onSetGap},
            {"minDeficit", c.minDeficit},
            {"tolMonotone", c.tolMonotone},
            {"oracleTolerance", c.oracleTolerance},
            {"oracleWalks", c.oracleWalks},
            {"oracleSeed", c.oracleSeed},
            {"onsetTrials", c.onsetTrials},
            {"onsetResolution", c.onsetResolution},
            {"tolMass", c.tolMass},
            {"kelvinTrials", c.kelvinTrials},
            {"kelvinAtoms", c.kelvinAtoms},
            {"kelvinTolerance", c.kelvinTolerance},
            {"f1Values", c.f1Values},
            {"f2Values", c.f2Values},
            {"finitenessValues", c.finitenessValues},
            {"wiener",
             {{"q", c.wiener.q},
              {"jMin", c.wiener.jMin},
              {"jMax", c.wiener.jMax},
              {"slicePoints", c.wiener.slicePoints},
              {"geometricMargin", c.wiener.classifier.geometricMargin},
              {"powerMargin", c.wiener.classifier.powerMargin},
              {"minGoodnessOfFit", c.wiener.classifier.minGoodnessOfFit}}}};
}

/// Overrides the defaults with the keys present in `j`; unknown keys are rejected.
inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j, ExperimentConfig c = {}) {
    require(j.is_object(), "experiment config must be a JSON object");
    const nlohmann::json known = to_json(c);
    for (auto it = j.begin(); it != j.end(); ++it)
        require(known.contains(it.key()), "unknown experiment config key '" + it.key() + "'");
    try {
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) j.at(key).get_to(field);
        };
        std::size_t n = c.params.n;
        double alpha = c.params.alpha;
        get("n", n);
        get("alpha", alpha);
        c.params = RieszParams(n, alpha);
        get("seed", c.seed);
        get("tolKKT", c.tolKKT);
        get("ballResolution", c.ballResolution);
        get("ballRadii", c.ballRadii);
        get("diracDistances", c.diracDistances);
        if (j.contains("sweepMode")) c.sweepMode = sample_mode_from_string(j.at("sweepMode").get<std::string>());
        get("ballTolerance", c.ballTolerance);
        get("identityTolerance", c.identityTolerance);
        get("boundaryMassFraction", c.boundaryMassFraction);
        get("bodyS", c.bodyS);
        get("truncationRadii", c.truncationRadii);
        get("firstShell", c.firstShell);
        get("pointsPerShell", c.pointsPerShell);
        get("source", c.source);
        get("sourceDelta", c.sourceDelta);
        get("retentionRatio", c.retentionRatio);
        get("lossRatio", c.lossRatio);
        get("plateauIncrement", c.plateauIncrement);
        get("onSetGap", c.onSetGap);
        get("minDeficit", c.minDeficit);
        get("tolMonotone", c.tolMonotone);
        get("oracleTolerance", c.oracleTolerance);
        get("oracleWalks", c.oracleWalks);
        get("oracleSeed", c.oracleSeed);
        get("onsetTrials", c.onsetTrials);
        get("onsetResolution", c.onsetResolution);
        get("tolMass", c.tolMass);
        get("kelvinTrials", c.kelvinTrials);
        get("kelvinAtoms", c.kelvinAtoms);
        get("kelvinTolerance", c.kelvinTolerance);
        get("f1Values", c.f1Values);
        get("f2Values", c.f2Values);
        get("finitenessValues", c.finitenessValues);
        if (j.contains("wiener")) {
            const auto& w = j.at("wiener");
            require(w.is_object(), "wiener config must be an object");
            if (w.contains("q")) w.at("q").get_to(c.wiener.q);
            if (w.contains("jMin")) w.at("jMin").get_to(c.wiener.jMin);
            if (w.contains("jMax")) w.at("jMax").get_to(c.wiener.jMax);
            if (w.contains("slicePoints")) w.at("slicePoints").get_to(c.wiener.slicePoints);
            if (w.contains("geometricMargin")) w.at("geometricMargin").get_to(c.wiener.classifier.geometricMargin);
            if (w.contains("powerMargin")) w.at("powerMargin").get_to(c.wiener.classifier.powerMargin);
            if (w.contains("minGoodnessOfFit"))
                w.at("minGoodnessOfFit").get_to(c.wiener.classifier.minGoodnessOfFit);
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("experiment config: ") + e.what());
    }
    for (std::size_t k = 1; k < c.truncationRadii.size(); ++k)
        require(c.truncationRadii[k] > c.truncationRadii[k - 1], "truncation radii must be strictly increasing");
    require(!c.truncationRadii.empty() && c.truncationRadii.front() > 0.0, "truncation radii must be positive");
    require(c.source.size() == c.params.n, "source point dimension must equal n");
    require(c.sourceDelta > 0.0 && c.firstShell > 0.0, "source delta and first shell must be positive");
    for (double r : c.ballRadii) require(r > 0.0, "ball radii must be positive");
    for (double d : c.diracDistances) require(d > 1.0, "Dirac distances must exceed the unit radius");
    require(c.tolKKT > 0.0 && c.tolMass >= 0.0, "tolerances must be positive");
    return c;
}

struct ExperimentReport {
    std::string name;
    nlohmann::json inputs;
    nlohmann::json stages = nlohmann::json::object();
    Conclusion conclusion = Conclusion::pass;
    std::vector<std::string> notes;
    double wallTimeSeconds = 0.0;

    /// Lowers the conclusion: pass > inconclusive > fail.
    void demote(Conclusion c, std::string why) {
        if (c == Conclusion::fail || (c == Conclusion::inconclusive && conclusion == Conclusion::pass)) conclusion = c;
        notes.push_back(std::move(why));
    }

    nlohmann::json to_json() const {
        return {{"name", name},          {"inputs", inputs}, {"stages", stages},
                {"conclusion", to_string(conclusion)}, {"notes", notes}, {"wallTimeSeconds", wallTimeSeconds}};
    }
};

namespace detail {

inline nlohmann::json solver_json(const NNQPSolution& s) {
    return {{"iterations", s.iterations},
            {"kktResidual", s.kktResidual},
            {"stationarity", s.stationarity},
            {"converged", s.converged},
            {"pivotSteps", s.pivotSteps}};
}

inline nlohmann::json trace_json(const ExhaustionTrace& t) {
    nlohmann::json stages = nlohmann::json::array();
    for (std::size_t k = 0; k < t.results.size(); ++k) {
        const auto& r = t.results[k];
        stages.push_back({{"R", t.truncationRadii[k]},
                          {"points", t.cloudSizes[k]},
                          {"sweptMass", r.sweptMass},
                          {"massRatio", t.massRatios[k]},
                          {"maxOnSetGap", r.onSetMatch.maxAbsGap},
                          {"maxOnSupportRelGap", r.onSupportMatch.maxRelGap},
                          {"offSetSlack", r.offSetDomination.maxAbsGap},
                          {"solver", solver_json(r.solver)},
                          {"lambdaMin", r.monitor.lambdaMin}});
    }
    return {{"stages", stages},
            {"potentialMonotonicity", t.potentialMonotonicity},
            {"minProbeIncrement", t.minProbeIncrement},
            {"probes", t.probes.size()},
            {"allConverged", t.allConverged},
            {"flagged", t.flagged}};
}

inline void check(ExperimentReport& rep, bool ok, const std::string& what) {
    if (!ok) rep.demote(Conclusion::fail, what);
}

inline ExhaustionTrace f_exhaustion(const Region& body, const ExperimentConfig& c) {
    const DiscreteMeasure sigma = mollified_dirac(Point(c.source), 1.0, c.sourceDelta);
    ExhaustionOptions eo;
    eo.sweep.seed = c.seed;
    eo.sweep.tolKKT = c.tolKKT;
    eo.firstShell = c.firstShell;
    eo.pointsPerShell = c.pointsPerShell;
    eo.tolMonotone = c.tolMonotone;
    return exhaustion_sweep(sigma, body, c.truncationRadii, c.params, eo);
}

inline void require_f_setting(const ExperimentConfig& c) {
    require(c.params.n == 3, "F-body experiments are defined in dimension 3");
}

/// Compares swept masses with the walk oracle at every truncation radius.
inline void cross_validate(ExperimentReport& rep, const Region& body, const ExhaustionTrace& t,
                           const ExperimentConfig& c, const WalkOracle* oracle) {
    if (!oracle || !*oracle) {
        rep.notes.push_back("walk-on-spheres cross-validation skipped: no oracle supplied");
        return;
    }
    if (c.params.alpha != 2.0) {
        rep.notes.push_back("walk-on-spheres cross-validation skipped: oracle needs alpha = 2");
        return;
    }
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t k = 0; k < t.results.size(); ++k) {
        const WalkEstimate w = (*oracle)(body, t.truncationRadii[k], Point(c.source), c.oracleWalks, c.oracleSeed + k);
        const double rel = std::abs(t.results[k].sweptMass - w.value) / std::max(w.value, 1e-300);
        rows.push_back({{"R", t.truncationRadii[k]},
                        {"walkEstimate", w.value},
                        {"standardError", w.standardError},
                        {"walks", w.walks},
                        {"seed", w.seed},
                        {"sweptMass", t.results[k].sweptMass},
                        {"relativeDifference", rel}});
        check(rep, rel <= c.oracleTolerance,
              "swept mass at R = " + format_real(t.truncationRadii[k]) + " differs from the walk estimate by " +
                  format_real(rel));
    }
    rep.stages["walkOracle"] = rows;
}

inline void run_ball_benchmarks(ExperimentReport& rep, const ExperimentConfig& c) {
    const RieszParams& P = c.params;
    const Point o = Point::origin(P.n);
    const bool newtonian = P.n == 3 && P.alpha == 2.0;
    if (!newtonian) rep.notes.push_back("closed forms need n = 3, alpha = 2; only identities are checked");
    nlohmann::json caps = nlohmann::json::array();
    for (double r : c.ballRadii) {
        EquilibriumOptions eo;
        eo.resolution = c.ballResolution;
        eo.seed = c.seed;
        eo.tolKKT = c.tolKKT;
        const EquilibriumResult e = equilibrium_measure(Region::sphere_shell(o, r), P, eo);
        const double scale = 1.0;
        const double fcap1 = std::abs(e.capacity - e.energyValue) / scale;
        const double fcap2 = e.potentialOnSet.supportMaxDeviation;
        const double below = std::max(0.0, 1.0 - e.potentialOnSet.min);
        const double rel = std::abs(e.capacity - r) / r;
        caps.push_back({{"radius", r},
                        {"capacity", e.capacity},
                        {"relativeError", rel},
                        {"energyResidual", fcap1},
                        {"supportPotentialResidual", fcap2},
                        {"gridPotentialDeficit", below},
                        {"lambdaMin", e.monitor.lambdaMin},
                        {"solver", solver_json(e.solver)}});
        if (!e.solver.converged) rep.demote(Conclusion::inconclusive, "capacity solve did not converge");
        if (newtonian) check(rep, rel <= c.ballTolerance, "sphere capacity off by " + format_real(rel));
        check(rep, fcap1 <= c.identityTolerance && fcap2 <= c.identityTolerance && below <= c.identityTolerance,
              "equilibrium identities violated");
    }
    rep.stages["capacities"] = caps;

    nlohmann::json sweeps = nlohmann::json::array();
    for (double d : c.diracDistances) {
        std::vector<double> x(P.n, 0.0);
        x[0] = d;
        BalayageOptions bo;
        bo.resolution = c.ballResolution;
        bo.mode = c.sweepMode;
        bo.seed = c.seed;
        bo.tolKKT = c.tolKKT;
        const BalayageResult b = sweep(mollified_dirac(Point(x), 1.0, c.sourceDelta), Region::ball(o, 1.0), P, bo);
        double nearMass = 0.0;
        for (std::size_t i = 0; i < b.swept.size(); ++i)
            if (std::abs(norm(b.swept.cloud().point(i)) - 1.0) <= 2.0 * b.swept.cloud().cell_radius(i))
                nearMass += b.swept.weight(i);
        const double fraction = b.sweptMass > 0.0 ? nearMass / b.sweptMass : 0.0;
        const double expected = std::pow(d, P.alpha - static_cast<double>(P.n));
        const double rel = std::abs(b.sweptMass - expected) / expected;
        sweeps.push_back({{"distance", d},
                          {"sweptMass", b.sweptMass},
                          {"expected", expected},
                          {"relativeError", rel},
                          {"boundaryMassFraction", fraction},
                          {"offSetSlack", b.offSetDomination.maxAbsGap},
                          {"points", b.swept.size()},
                          {"solver", solver_json(b.solver)}});
        if (!b.solver.converged) rep.demote(Conclusion::inconclusive, "sweep did not converge");
        if (newtonian) {
            check(rep, rel <= c.ballTolerance, "swept mass off by " + format_real(rel));
            check(rep, fraction >= c.boundaryMassFraction, "swept mass not concentrated on the sphere");
        }
        check(rep, b.massNotCreated(c.tolMass), "sweep created mass");
    }
    rep.stages["sweeps"] = sweeps;
}

inline void run_kelvin(ExperimentReport& rep, const ExperimentConfig& c) {
    const RieszParams& P = c.params;
    Rng rng(c.seed ^ 0x4B454C56ull);
    double worstInv = 0, worstMass = 0, worstEnergy = 0, worstPot = 0;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
    for (std::size_t trial = 0; trial < c.kelvinTrials; ++trial) {
        std::vector<double> y(P.n);
        for (auto& v : y) v = rng.normal();
        const Inversion inv{Point(y)};
        PointCloud cloud(P.n, SampleMode::volume);
        std::vector<double> weights;
        std::vector<double> p(P.n);
        while (cloud.size() < c.kelvinAtoms) {
            double r2 = 0.0;
            for (std::size_t a = 0; a < P.n; ++a) {
                p[a] = y[a] + 3.0 * (2.0 * rng.uniform() - 1.0);
                r2 += (p[a] - y[a]) * (p[a] - y[a]);
            }
            if (r2 < 0.01) continue;
            cloud.push_back(p, 1e-3);
            weights.push_back(0.1 + rng.uniform());
        }
        const DiscreteMeasure nu(std::move(cloud), std::move(weights));
        const DiscreteMeasure star = kelvin_transform(nu, inv, P);
        const DiscreteMeasure back = kelvin_transform(star, inv, P);
        for (std::size_t i = 0; i < nu.size(); ++i) {
            worstInv = std::max(worstInv, rel(back.weight(i), nu.weight(i)));
            for (std::size_t a = 0; a < P.n; ++a)
                worstInv = std::max(worstInv, std::abs(back.cloud().point(i)[a] - nu.cloud().point(i)[a]) /
                                                  std::max(1.0, std::abs(nu.cloud().point(i)[a])));
        }
        worstMass = std::max(worstMass, rel(exact_potential(star, y, P), total_mass(nu)));
        worstEnergy = std::max(worstEnergy, rel(exact_pairwise_energy(star, star, P), exact_pairwise_energy(nu, nu, P)));
        for (int k = 0; k < 5; ++k) {
            for (std::size_t a = 0; a < P.n; ++a) p[a] = y[a] + 4.0 * rng.normal();
            const Point x(p);
            if (distance(x, inv.center) < 0.05) continue;
            const Point xs = invert(inv, x);
            const double lhs = exact_potential(star, xs.coords(), P);
            const double rhs =
                std::pow(distance(x, inv.center), static_cast<double>(P.n) - P.alpha) * exact_potential(nu, p, P);
            worstPot = std::max(worstPot, rel(lhs, rhs));
        }
    }
    rep.stages["kelvin"] = {{"trials", c.kelvinTrials},
                            {"involution", worstInv},
                            {"massPotentialDuality", worstMass},
                            {"energyPreservation", worstEnergy},
                            {"potentialTransformation", worstPot}};
    check(rep, worstInv <= c.kelvinTolerance, "Kelvin involution residual " + format_real(worstInv));
    check(rep, worstMass <= c.kelvinTolerance, "mass-potential duality residual " + format_real(worstMass));
    check(rep, worstEnergy <= c.kelvinTolerance, "energy preservation residual " + format_real(worstEnergy));
    check(rep, worstPot <= c.kelvinTolerance, "potential transformation residual " + format_real(worstPot));
}

inline void run_f1(ExperimentReport& rep, const ExperimentConfig& c, const WalkOracle* oracle) {
    require_f_setting(c);
    const Region body = f1_body(c.bodyS);
    const ExhaustionTrace t = f_exhaustion(body, c);
    rep.stages["trace"] = trace_json(t);
    if (!t.allConverged) rep.demote(Conclusion::inconclusive, "a stage did not converge");
    for (std::size_t k = 1; k < t.massRatios.size(); ++k)
        check(rep, t.massRatios[k] >= t.massRatios[k - 1], "mass ratios are not increasing");
    check(rep, t.massRatios.back() >= c.retentionRatio,
          "final mass ratio " + format_real(t.massRatios.back()) + " below retention threshold");
    check(rep, t.potentialMonotonicity <= c.tolMonotone, "probe potentials decreased between truncations");
    cross_validate(rep, body, t, c, oracle);
}

inline void run_f2(ExperimentReport& rep, const ExperimentConfig& c, const WalkOracle* oracle) {
    require_f_setting(c);
    const Region body = f2_body(c.bodyS);
    const ExhaustionTrace t = f_exhaustion(body, c);
    rep.stages["trace"] = trace_json(t);
    if (!t.allConverged) rep.demote(Conclusion::inconclusive, "a stage did not converge");
    const double last = t.massRatios.back();
    const double inc = t.massRatios.size() >= 2 ? last - t.massRatios[t.massRatios.size() - 2] : 0.0;
    double gap = 0.0;
    for (const auto& r : t.results) gap = std::max(gap, r.onSupportMatch.maxRelGap);
    rep.stages["plateau"] = {{"finalRatio", last}, {"finalIncrement", inc}, {"maxOnSupportRelGap", gap},
                             {"deficit", 1.0 - last}};
    check(rep, last <= c.lossRatio, "final mass ratio " + format_real(last) + " above loss threshold");
    check(rep, 1.0 - last >= c.minDeficit, "mass deficit below the required minimum");
    check(rep, std::abs(inc) <= c.plateauIncrement, "mass ratio has not plateaued");
    check(rep, gap <= c.onSetGap, "on-set potential gap " + format_real(gap) + " too large");
    check(rep, t.potentialMonotonicity <= c.tolMonotone, "probe potentials decreased between truncations");
    cross_validate(rep, body, t, c, oracle);
}

inline void run_sharpness(ExperimentReport& rep, const ExperimentConfig& c) {
    require_f_setting(c);
    const Region body = f2_body(c.bodyS);
    const DiscreteMeasure sigma = mollified_dirac(Point(c.source), 1.0, c.sourceDelta);
    const double R = c.truncationRadii.back();
    const GradedPlan plan = plan_shells(body, Point::origin(3), R, c.firstShell, c.pointsPerShell, SampleMode::surface,
                                        c.seed, c.params.exponent());
    const PointCloud cloud = sample_graded(plan, R);
    BalayageOptions bo;
    bo.seed = c.seed;
    bo.tolKKT = c.tolKKT;
    const Region trunc = Region::annulus_clip(body, Point::origin(3), 0.0, R);
    const BalayageResult nu0 = sweep_onto(sigma, cloud, c.params, bo, &trunc);
    // mu_0 = sigma is dominated by nu_0 on the set (within the on-set tolerance), yet carries more mass.
    PoMOptions po;
    po.relTol = c.onSetGap;
    po.tolMass = c.tolMass;
    const PoMVerdict v = pom_verify(sigma, nu0.swept, cloud, c.params, po, "grid of " + describe(trunc));
    rep.stages["sweep"] = {{"R", R},
                           {"points", cloud.size()},
                           {"sweptMass", nu0.sweptMass},
                           {"solver", solver_json(nu0.solver)}};
    rep.stages["pom"] = {{"pointwiseHolds", v.pointwiseHolds},
                         {"violations", v.violatingProbes.size()},
                         {"maxRelativeExcess", v.maxRelativeExcess},
                         {"massMu", v.massMu},
                         {"massNu", v.massNu},
                         {"massInequalityHolds", v.massInequalityHolds},
                         {"probesUsed", v.probesUsed},
                         {"probesExcluded", v.probesExcluded}};
    if (!nu0.solver.converged) rep.demote(Conclusion::inconclusive, "sweep did not converge");
    check(rep, v.pointwiseHolds, "potential of the source is not dominated on the set");
    check(rep, !v.massInequalityHolds && v.massMu - v.massNu >= c.minDeficit * v.massMu,
          "no mass deficit: the sharpness construction failed");
}

inline void run_onset(ExperimentReport& rep, const ExperimentConfig& c) {
    const RieszParams& P = c.params;
    Rng rng(c.seed ^ 0x4F4E5345ull);
    std::size_t holds = 0, pointwise = 0, unconverged = 0;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t trial = 0; trial < c.onsetTrials; ++trial) {
        const double radius = 0.5 + rng.uniform();
        const Region K = trial % 2 ? Region::ball(Point::origin(P.n), radius)
                                   : Region::sphere_shell(Point::origin(P.n), radius);
        const PointCloud cloud =
            sample(K, c.onsetResolution, trial % 2 ? SampleMode::volume : SampleMode::surface, c.seed + trial, P.exponent());
        std::vector<double> w(cloud.size());
        for (auto& x : w) x = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
        const DiscreteMeasure nu(cloud, w);
        const double keep = 0.3 + 0.5 * rng.uniform();
        PointCloud sub(P.n, cloud.tag());
        for (std::size_t i = 0; i < cloud.size(); ++i)
            if (rng.uniform() < keep) sub.push_back(cloud.point(i), cloud.cell_radius(i));
        BalayageOptions bo;
        bo.tolKKT = c.tolKKT;
        bo.offSetProbes = 0;
        const BalayageResult mu = sweep_onto(nu, sub, P, bo);
        PoMOptions po;
        po.tolMass = c.tolMass;
        po.relTol = 10.0 * c.tolKKT;
        const PoMVerdict v = pom_verify(mu.swept, nu, sub, P, po, "sub-cloud");
        holds += v.massInequalityHolds;
        pointwise += v.pointwiseHolds;
        unconverged += !mu.solver.converged;
        rows.push_back({{"points", cloud.size()},
                        {"subPoints", sub.size()},
                        {"massMu", v.massMu},
                        {"massNu", v.massNu},
                        {"pointwiseHolds", v.pointwiseHolds},
                        {"massInequalityHolds", v.massInequalityHolds},
                        {"converged", mu.solver.converged}});
    }
    rep.stages["trials"] = rows;
    rep.stages["summary"] = {{"trials", c.onsetTrials}, {"massInequalityHolds", holds}, {"pointwiseHolds", pointwise}};
    if (unconverged) rep.demote(Conclusion::inconclusive, "some sweeps did not converge");
    check(rep, holds == c.onsetTrials, "mass inequality failed in " + std::to_string(c.onsetTrials - holds) + " trials");
}

inline void run_atlas(ExperimentReport& rep, const ExperimentConfig& c) {
    require_f_setting(c);
    const Point o = Point::origin(3);
    nlohmann::json rows = nlohmann::json::array();
    auto one = [&](const std::string& body, double s, WienerMode mode, SeriesVerdict expected) {
        const Region r = body == "f1" ? f1_body(s) : f2_body(s);
        WienerOptions wo = c.wiener;
        wo.seed = c.seed;
        const WienerReport w = wiener_series(r, mode, o, c.params, wo);
        nlohmann::json summary = wiener_summary_json(w);
        summary["body"] = body;
        summary["s"] = s;
        summary["expected"] = to_string(expected);
        std::vector<double> terms;
        for (const auto& t : w.terms) terms.push_back(t.term);
        summary["terms"] = terms;
        rows.push_back(summary);
        const auto got = w.classification.verdict;
        if (got == SeriesVerdict::inconclusive)
            rep.demote(Conclusion::inconclusive, body + " s=" + format_real(s) + " " + to_string(mode) + " inconclusive");
        else
            check(rep, got == expected, body + " s=" + format_real(s) + " " + to_string(mode) + " classified " +
                                            to_string(got));
    };
    const bool newtonian = c.params.alpha == 2.0;
    if (!newtonian) rep.notes.push_back("expected verdicts are those of the Newtonian kernel");
    for (double s : c.f1Values) one("f1", s, WienerMode::thinnessAtInfinity, SeriesVerdict::divergent);
    for (double s : c.f2Values) one("f2", s, WienerMode::thinnessAtInfinity, SeriesVerdict::convergent);
    for (double s : c.finitenessValues)
        one("f2", s, WienerMode::capacityFiniteness, s > 1.0 ? SeriesVerdict::convergent : SeriesVerdict::divergent);
    rep.stages["series"] = rows;
}

} // namespace detail

/**
 * @brief Runs a named experiment and records every stage output.
 *
 * The walk oracle is optional; without it the f1/f2 presets skip the
 * cross-validation and say so in the notes.
 */
inline ExperimentReport run_experiment(const std::string& name, const ExperimentConfig& config,
                                       const WalkOracle* oracle = nullptr) {
    const auto& names = experiment_names();
    require(std::find(names.begin(), names.end(), name) != names.end(), "unknown experiment '" + name + "'");
    const auto start = std::chrono::steady_clock::now();
    ExperimentReport rep;
    rep.name = name;
    rep.inputs = to_json(config);
    if (name == "ball-benchmarks") detail::run_ball_benchmarks(rep, config);
    else if (name == "kelvin-identities") detail::run_kelvin(rep, config);
    else if (name == "f1-mass-retention") detail::run_f1(rep, config, oracle);
    else if (name == "f2-mass-loss") detail::run_f2(rep, config, oracle);
    else if (name == "sharpness") detail::run_sharpness(rep, config);
    else if (name == "onset-pom") detail::run_onset(rep, config);
    else detail::run_atlas(rep, config);
    rep.wallTimeSeconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

} // namespace rieszpot

#endif // RIESZPOT_PRINCIPLES_HPP_
