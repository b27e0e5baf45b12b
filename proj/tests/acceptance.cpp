// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cli_app.hpp"
#include "oracles.hpp"
#include "rieszpot/rieszpot.hpp"
#include "wos_oracle.hpp"

using namespace rieszpot;

namespace {

const RieszParams kNewton(3, 2.0);

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "FAILED ") + what;
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int failures = 0;

void criterion(int id, const char* name, double budget, const std::function<void(Outcome&)>& body) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail += std::string(o.detail.empty() ? "" : "; ") + "exception: " + e.what();
    }
    const double t = seconds_since(t0);
    o.require(t <= budget, "time " + fmt(t) + " s <= " + fmt(budget) + " s");
    failures += !o.pass;
    std::printf("%s  %2d %-28s %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
}

double max_support_gap(const BalayageResult& r, const DiscreteMeasure& src, const RieszParams& P) {
    double scale = 1.0, gap = 0.0;
    const PointCloud& c = r.swept.cloud();
    for (std::size_t i = 0; i < c.size(); ++i) scale = std::max(scale, potential(src, c.point(i), P));
    for (std::size_t i = 0; i < c.size(); ++i)
        if (r.swept.weight(i) > 0.0)
            gap = std::max(gap, std::abs(potential(r.swept, c.point(i), P) - potential(src, c.point(i), P)));
    return gap / scale;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Solves kept for the residual criterion.
std::vector<EquilibriumResult> capacitySolves;
std::vector<std::pair<BalayageResult, DiscreteMeasure>> sweepSolves;
std::vector<double> traceMonotonicity;

} // namespace

int main() {
    std::printf("rieszpot acceptance (hardware threads: %u)\n", std::thread::hardware_concurrency());

    for (double r : {1.0, 2.0}) {
        const std::string name = "ball capacity r=" + fmt(r);
        criterion(1, name.c_str(), 30.0, [&](Outcome& o) {
            EquilibriumOptions eo;
            eo.resolution = 2000;
            const auto e = equilibrium_measure(Region::sphere_shell(Point::origin(3), r), kNewton, eo);
            const double exact = oracle::sphere_capacity(r);
            const double rel = std::abs(e.capacity - exact) / exact;
            o.require(e.solver.converged, "converged");
            o.require(rel <= 0.02, "capacity " + fmt(e.capacity) + " rel err " + fmt(rel) + " <= 0.02");
            o.require(std::abs(e.capacity - e.energyValue) <= 1e-6,
                      "|cap - energy| " + fmt(std::abs(e.capacity - e.energyValue)) + " <= 1e-6");
            o.require(e.potentialOnSet.supportMaxDeviation <= 1e-6,
                      "support potential dev " + fmt(e.potentialOnSet.supportMaxDeviation) + " <= 1e-6");
            capacitySolves.push_back(e);
        });
    }

    for (double d : {2.0, 4.0}) {
        const std::string name = "swept Dirac d=" + fmt(d);
        criterion(2, name.c_str(), 60.0, [&](Outcome& o) {
            BalayageOptions bo;
            bo.resolution = 2000;
            bo.mode = SampleMode::volume;
            const DiscreteMeasure src = mollified_dirac(Point{d, 0, 0}, 1.0, 1e-3);
            auto b = sweep(src, Region::ball(Point::origin(3), 1.0), kNewton, bo);
            const double exact = oracle::swept_dirac_mass(d, 1.0);
            const double rel = std::abs(b.sweptMass - exact) / exact;
            double near = 0.0;
            for (std::size_t i = 0; i < b.swept.size(); ++i)
                if (std::abs(norm(b.swept.cloud().point(i)) - 1.0) <= 2.0 * b.swept.cloud().cell_radius(i))
                    near += b.swept.weight(i);
            o.require(b.solver.converged, "converged");
            o.require(rel <= 0.02, "mass " + fmt(b.sweptMass) + " rel err " + fmt(rel) + " <= 0.02");
            o.require(near >= 0.99 * b.sweptMass, "boundary fraction " + fmt(near / b.sweptMass) + " >= 0.99");
            sweepSolves.emplace_back(std::move(b), src);
        });
    }

    criterion(3, "Kelvin identities", 5.0, [](Outcome& o) {
        const auto rep = run_experiment("kelvin-identities", ExperimentConfig{});
        const auto& k = rep.stages["kelvin"];
        o.require(rep.conclusion == Conclusion::pass, std::string("conclusion ") + to_string(rep.conclusion));
        for (const char* key : {"involution", "massPotentialDuality", "energyPreservation", "potentialTransformation"})
            o.require(k[key].get<double>() <= 1e-8, std::string(key) + " " + fmt(k[key].get<double>()));
    });

    criterion(4, "KKT and identity residuals", 600.0, [](Outcome& o) {
        double worstCap = 0.0, worstSweep = 0.0;
        for (const auto& e : capacitySolves) {
            o.require(e.solver.converged, "capacity solve converged");
            worstCap = std::max({worstCap, std::abs(e.capacity - e.energyValue) / std::max(1.0, e.capacity),
                                 e.potentialOnSet.supportMaxDeviation});
        }
        for (const auto& [b, src] : sweepSolves) worstSweep = std::max(worstSweep, max_support_gap(b, src, kNewton));
        o.require(worstCap <= 1e-8, "capacity residual " + fmt(worstCap) + " <= 1e-8");
        o.require(worstSweep <= 1e-8, "on-support potential gap " + fmt(worstSweep) + " <= 1e-8 scale");

        detail::Rng rng(2024);
        std::size_t held = 0, run = 0;
        double worstRandom = 0.0;
        while (run < 50) {
            PointCloud c(3, SampleMode::volume);
            std::vector<double> w;
            for (int k = 0; k < 6; ++k) {
                std::vector<double> p(3);
                for (auto& v : p) v = 3.0 * rng.normal();
                if (norm(p) < 1.2) continue;
                c.push_back(p, 1e-3);
                w.push_back(0.1 + rng.uniform());
            }
            if (c.empty()) continue;
            const DiscreteMeasure src(c, w);
            const RieszParams P(3, 0.5 + 1.5 * rng.uniform());
            BalayageOptions bo;
            bo.resolution = 300;
            bo.seed = run;
            bo.offSetProbes = 0;
            bo.mode = run % 2 ? SampleMode::volume : SampleMode::surface;
            const auto b = sweep(src, Region::ball(Point::origin(3), 1.0), P, bo);
            ++run;
            if (!b.solver.converged) continue;
            held += b.massNotCreated(1e-6);
            worstRandom = std::max(worstRandom, max_support_gap(b, src, P));
        }
        o.require(held == 50, "mass never created " + std::to_string(held) + "/50");
        o.require(worstRandom <= 1e-8, "random on-support gap " + fmt(worstRandom) + " <= 1e-8 scale");
    });

    criterion(5, "balayage symmetry", 600.0, [](Outcome& o) {
        const Region halfBall =
            Region::intersection({Region::ball(Point::origin(3), 1.0), Region::half_space({0, 0, 1}, 0.0)});
        const auto st = symmetry_refinement(mollified_dirac(Point{2, 0.3, 0}, 1.0, 1e-3),
                                            mollified_dirac(Point{-0.5, 2.5, 0.5}, 1.0, 1e-3), halfBall, kNewton,
                                            {500, 2000}, 8);
        o.require(st.allConverged, "converged");
        o.require(st.rmsRelGap.back() <= 0.01, "rms gap at 2000 " + fmt(st.rmsRelGap.back()) + " <= 0.01");
        o.require(st.refinementFactor >= 1.5, "refinement " + fmt(st.refinementFactor) + " >= 1.5");
    });

    criterion(6, "thinness atlas", 300.0, [](Outcome& o) {
        const auto rep = run_experiment("thinness-atlas", ExperimentConfig{});
        std::size_t ok = 0, inconclusive = 0;
        for (const auto& row : rep.stages["series"]) {
            const std::string got = row["classification"];
            inconclusive += got == "inconclusive";
            ok += got == row["expected"].get<std::string>();
        }
        o.require(ok == rep.stages["series"].size(), std::to_string(ok) + "/" +
                                                         std::to_string(rep.stages["series"].size()) + " as expected");
        o.require(inconclusive == 0, std::to_string(inconclusive) + " inconclusive");
    });

    criterion(7, "exhaustion F1/F2 s=1", 600.0, [](Outcome& o) {
        const WalkOracle wos = wos::oracle();
        ExperimentConfig c;
        c.bodyS = 1.0;
        const auto f1 = run_experiment("f1-mass-retention", c, &wos);
        const auto f2 = run_experiment("f2-mass-loss", c, &wos);
        for (const auto* rep : {&f1, &f2})
            traceMonotonicity.push_back(rep->stages["trace"]["potentialMonotonicity"].get<double>());
        const auto& s1 = f1.stages["trace"]["stages"];
        o.require(f1.conclusion == Conclusion::pass,
                  "F1 final ratio " + fmt(s1.back()["massRatio"].get<double>()) + " >= 0.9, monotone");
        const auto& pl = f2.stages["plateau"];
        o.require(f2.conclusion == Conclusion::pass,
                  "F2 final ratio " + fmt(pl["finalRatio"].get<double>()) + " <= 0.8, increment " +
                      fmt(pl["finalIncrement"].get<double>()) + ", on-set gap " +
                      fmt(pl["maxOnSupportRelGap"].get<double>()));
        double worst = 0.0;
        for (const auto* rep : {&f1, &f2})
            for (const auto& row : rep->stages["walkOracle"])
                worst = std::max(worst, row["relativeDifference"].get<double>());
        o.require(worst <= 0.03, "walk-on-spheres max rel diff " + fmt(worst) + " <= 0.03");
    });

    criterion(8, "on-set mass inequality", 120.0, [](Outcome& o) {
        const auto rep = run_experiment("onset-pom", ExperimentConfig{});
        const auto held = rep.stages["summary"]["massInequalityHolds"].get<std::size_t>();
        o.require(held == 20, std::to_string(held) + "/20 trials");
        o.require(rep.conclusion == Conclusion::pass, std::string("conclusion ") + to_string(rep.conclusion));
    });

    criterion(9, "monotone exhaustion", 300.0, [](Outcome& o) {
        EquilibriumExhaustionOptions eo;
        eo.pointsPerShell = 400;
        const auto t = equilibrium_exhaustion(f2_body(2.0), {2.0, 4.0, 8.0, 16.0}, kNewton, eo);
        traceMonotonicity.push_back(t.potentialMonotonicity);
        double worst = 0.0;
        for (double m : traceMonotonicity) worst = std::max(worst, m);
        o.require(traceMonotonicity.size() == 3, std::to_string(traceMonotonicity.size()) + " traces");
        o.require(worst <= 1e-6, "largest probe decrease " + fmt(worst) + " <= 1e-6");
        o.require(t.capacitiesMonotone, "capacities monotone");
    });

    criterion(10, "thread determinism", 600.0, [](Outcome& o) {
        namespace fs = std::filesystem;
        const fs::path root = fs::temp_directory_path() / "rieszpot-acceptance";
        fs::remove_all(root);
        const std::vector<std::pair<std::string, std::vector<std::string>>> runs{
            {"capacity.csv", {"capacity", "--region", "sphere", "--radius", "1", "--points", "2000"}},
            {"capacity.csv", {"capacity", "--region", "sphere", "--radius", "2", "--points", "2000"}},
            {"sweep.csv", {"sweep", "--region", "ball", "--source", "2,0,0", "--mode", "volume", "--points", "2000"}},
            {"sweep.csv", {"sweep", "--region", "ball", "--source", "4,0,0", "--mode", "volume", "--points", "2000"}},
        };
        std::size_t same = 0;
        for (std::size_t k = 0; k < runs.size(); ++k) {
            std::string outputs[2];
            for (int t = 0; t < 2; ++t) {
                const fs::path dir = root / (std::to_string(k) + (t ? "-t8" : "-t1"));
                std::vector<std::string> args{"rieszpot", "--threads", t ? "8" : "1", "--out", dir.string()};
                args.insert(args.end(), runs[k].second.begin(), runs[k].second.end());
                std::vector<const char*> argv;
                for (const auto& a : args) argv.push_back(a.c_str());
                std::ostringstream out, err;
                cli::App app(out, err);
                if (app.run(static_cast<int>(argv.size()), argv.data()) != 0) throw std::runtime_error(err.str());
                outputs[t] = slurp(dir / runs[k].first);
            }
            same += !outputs[0].empty() && outputs[0] == outputs[1];
        }
        set_thread_count(0);
        fs::remove_all(root);
        o.require(same == runs.size(), std::to_string(same) + "/" + std::to_string(runs.size()) + " byte-identical");
    });

    std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
