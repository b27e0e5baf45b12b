#ifndef RIESZPOT_TOOLS_CLI_APP_HPP_
#define RIESZPOT_TOOLS_CLI_APP_HPP_

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rieszpot/rieszpot.hpp"
#include "wos_oracle.hpp"

namespace rieszpot::cli {

enum ExitCode : int { kSuccess = 0, kComputationFailed = 1, kInvalidConfig = 2, kFail = 3, kInconclusive = 4 };

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kOutputDirEnv = "RIESZPOT_OUTPUT_DIR";

/// Declarative run configuration; every field may also be set by a flag.
struct RunConfig {
    RieszParams params{3, 2.0};
    std::optional<nlohmann::json> region;
    std::size_t resolution = 2000;
    SampleMode mode = SampleMode::surface;
    std::uint64_t seed = 0;
    double tolKKT = 1e-8;
    std::vector<double> truncationRadii;
    std::vector<double> source;
    double sourceMass = 1.0;
    double sourceDelta = 1e-3;
    std::string outputDir;
    nlohmann::json wiener = nlohmann::json::object();
    nlohmann::json experiment = nlohmann::json::object();
    std::size_t walks = 20000;
};

namespace detail {

inline void expect_keys(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& where) {
    require(j.is_object(), where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : keys) ok = ok || it.key() == k;
        require(ok, "unknown key '" + it.key() + "' in " + where);
    }
}

inline void check_radii(const std::vector<double>& r) {
    for (std::size_t k = 0; k < r.size(); ++k) {
        require(std::isfinite(r[k]) && r[k] > 0.0, "truncation radii must be positive");
        if (k) require(r[k] > r[k - 1], "truncation radii must be strictly increasing");
    }
}

} // namespace detail

/// Validates against schema/run_config.schema.json (version 1) and fills a RunConfig.
inline RunConfig parse_run_config(const nlohmann::json& j) {
    detail::expect_keys(j,
                        {"schemaVersion", "params", "region", "resolution", "mode", "seed", "tolKKT",
                         "truncationRadii", "source", "outputDir", "wiener", "experiment", "walks"},
                        "run config");
    require(j.contains("schemaVersion") && j["schemaVersion"].is_number_integer() &&
                j["schemaVersion"].get<int>() == kSchemaVersion,
            "run config must declare schemaVersion 1");
    RunConfig c;
    try {
        if (j.contains("params")) {
            const auto& p = j["params"];
            detail::expect_keys(p, {"n", "alpha"}, "params");
            c.params = RieszParams(p.value("n", std::size_t{3}), p.value("alpha", 2.0));
        }
        if (j.contains("region")) {
            region_from_json(j["region"]);
            c.region = j["region"];
        }
        if (j.contains("resolution")) c.resolution = j["resolution"].get<std::size_t>();
        if (j.contains("mode")) c.mode = sample_mode_from_string(j["mode"].get<std::string>());
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("tolKKT")) c.tolKKT = j["tolKKT"].get<double>();
        if (j.contains("truncationRadii")) c.truncationRadii = j["truncationRadii"].get<std::vector<double>>();
        if (j.contains("source")) {
            const auto& s = j["source"];
            detail::expect_keys(s, {"point", "mass", "delta"}, "source");
            c.source = s.at("point").get<std::vector<double>>();
            c.sourceMass = s.value("mass", 1.0);
            c.sourceDelta = s.value("delta", 1e-3);
        }
        if (j.contains("outputDir")) c.outputDir = j["outputDir"].get<std::string>();
        if (j.contains("wiener")) {
            detail::expect_keys(j["wiener"], {"mode", "q", "jMin", "jMax", "slicePoints", "y"}, "wiener");
            c.wiener = j["wiener"];
        }
        if (j.contains("experiment")) {
            experiment_config_from_json(j["experiment"]);
            c.experiment = j["experiment"];
        }
        if (j.contains("walks")) c.walks = j["walks"].get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("run config: ") + e.what());
    }
    require(c.resolution > 0, "resolution must be positive");
    require(std::isfinite(c.tolKKT) && c.tolKKT > 0.0, "tolKKT must be positive");
    require(c.sourceMass > 0.0 && c.sourceDelta > 0.0, "source mass and delta must be positive");
    require(c.walks > 0, "walk count must be positive");
    detail::check_radii(c.truncationRadii);
    return c;
}

/// Command-line application; streams are injectable for tests.
class App {
public:
    App(std::ostream& out = std::cout, std::ostream& err = std::cerr) : out_(out), err_(err) {}

    int run(int argc, const char* const* argv) {
        std::vector<std::string> args;
        for (int k = argc - 1; k >= 1; --k) args.emplace_back(argv[k]);
        return run(std::move(args));
    }

    /// Arguments in reverse order, as CLI11 expects.
    int run(std::vector<std::string> reversedArgs) {
        CLI::App app{"Riesz potential toolkit: capacities, balayage, Kelvin transforms and Wiener series"};
        app.fallthrough();
        app.require_subcommand(1);
        unsigned threads = 0;
        std::string configPath, outDir;
        app.add_option("--threads", threads, "worker threads (0 = hardware concurrency)");
        app.add_option("--config", configPath, "JSON run configuration");
        app.add_option("--out", outDir, std::string("output directory (default: $") + kOutputDirEnv + " or .)");

        Flags f;
        auto* cap = app.add_subcommand("capacity", "capacity of a bounded region");
        auto* eq = app.add_subcommand("equilibrium", "equilibrium measure of a bounded region");
        auto* sw = app.add_subcommand("sweep", "balayage of a measure onto a region");
        auto* kv = app.add_subcommand("kelvin", "Kelvin transform of a measure");
        auto* wi = app.add_subcommand("wiener", "Wiener-type series and its classification");
        auto* pm = app.add_subcommand("pom", "positivity-of-mass check on probes");
        auto* ex = app.add_subcommand("experiment", "named experiment");
        auto* orc = app.add_subcommand("oracle", "independent oracles");
        auto* wos = orc->add_subcommand("wos", "walk-on-spheres hit probability or capacity (n = 3, alpha = 2)");
        orc->require_subcommand(1);

        for (auto* sc : {cap, eq, sw, wi, wos}) add_region_flags(sc, f);
        for (auto* sc : {cap, eq, sw, kv, wi, pm, ex, wos}) add_param_flags(sc, f);
        for (auto* sc : {cap, eq, sw}) {
            sc->add_option("--points", f.points, "target resolution");
            sc->add_option("--mode", f.mode, "surface or volume sampling");
            sc->add_option("--tol", f.tol, "KKT tolerance");
        }
        sw->add_option("--source", f.source, "source point x1,...,xn (mollified Dirac)");
        sw->add_option("--mass", f.mass, "source mass");
        sw->add_option("--delta", f.delta, "source cell radius");
        sw->add_option("--mu", f.mu, "source measure CSV (x1,...,xn,delta,weight)");
        sw->add_option("--radii", f.radii, "truncation radii for an exhaustion trace, e.g. 8,16,32");
        sw->add_option("--points-per-shell", f.pointsPerShell, "points per dyadic shell in exhaustion");
        kv->add_option("--mu", f.mu, "measure CSV")->required();
        kv->add_option("--center", f.center, "inversion center");
        wi->add_option("--mode", f.wienerMode, "thinness, regularity or finiteness");
        wi->add_option("--q", f.q, "annulus ratio");
        wi->add_option("--jmin", f.jMin, "first slice index");
        wi->add_option("--jmax", f.jMax, "last slice index");
        wi->add_option("--slice-points", f.slicePoints, "points per slice");
        wi->add_option("--y", f.y, "series center");
        pm->add_option("--mu", f.mu, "measure CSV")->required();
        pm->add_option("--nu", f.nu, "measure CSV")->required();
        pm->add_option("--probes", f.probes, "probe CSV (x1,...,xn,delta)")->required();
        pm->add_option("--rel-tol", f.relTol, "relative potential tolerance");
        pm->add_option("--tol-mass", f.tolMass, "relative mass tolerance");
        ex->add_option("name", f.experiment, "experiment name")->required();
        ex->add_option("--walks", f.walksOpt, "walk-on-spheres walks per estimate");
        ex->add_flag("--no-oracle", f.noOracle, "skip the walk-on-spheres cross-validation");
        wos->add_option("--start", f.source, "start point (hit probability mode)");
        wos->add_option("--walks", f.walksOpt, "number of walks");
        wos->add_flag("--capacity", f.capacityMode, "estimate the capacity instead");

        try {
            app.parse(reversedArgs);
        } catch (const CLI::ParseError& e) {
            const int code = app.exit(e, out_, err_);
            if (code != 0) err_ << app.help();
            return code == 0 ? kSuccess : kInvalidConfig;
        }

        try {
            set_thread_count(threads);
            RunConfig cfg;
            if (!configPath.empty()) cfg = parse_run_config(read_json(configPath));
            apply_flags(cfg, f);
            out_dir_ = !outDir.empty() ? outDir : !cfg.outputDir.empty() ? cfg.outputDir : default_output_dir();
            if (cap->parsed()) return cmd_capacity(cfg, false);
            if (eq->parsed()) return cmd_capacity(cfg, true);
            if (sw->parsed()) return cmd_sweep(cfg, f);
            if (kv->parsed()) return cmd_kelvin(cfg, f);
            if (wi->parsed()) return cmd_wiener(cfg, f);
            if (pm->parsed()) return cmd_pom(cfg, f);
            if (ex->parsed()) return cmd_experiment(cfg, f);
            return cmd_wos(cfg, f);
        } catch (const InvalidInput& e) {
            err_ << "invalid configuration: " << e.what() << '\n';
            return kInvalidConfig;
        } catch (const nlohmann::json::exception& e) {
            err_ << "invalid configuration: " << e.what() << '\n';
            return kInvalidConfig;
        } catch (const std::exception& e) {
            err_ << "computation failed: " << e.what() << '\n';
            return kComputationFailed;
        }
    }

private:
    struct Flags {
        std::optional<std::size_t> n;
        std::optional<double> alpha;
        std::optional<std::uint64_t> seed;
        std::string region;
        std::optional<double> radius, s, R;
        std::string center;
        std::optional<std::size_t> points;
        std::string mode;
        std::optional<double> tol;
        std::string source, mu, nu, probes, radii;
        std::optional<double> mass, delta;
        std::optional<std::size_t> pointsPerShell;
        std::string wienerMode, y;
        std::optional<double> q;
        std::optional<int> jMin, jMax;
        std::optional<std::size_t> slicePoints;
        std::optional<double> relTol, tolMass;
        std::string experiment;
        std::optional<std::size_t> walksOpt;
        bool noOracle = false;
        bool capacityMode = false;
    };

    static void add_param_flags(CLI::App* sc, Flags& f) {
        sc->add_option("--n", f.n, "ambient dimension");
        sc->add_option("--alpha", f.alpha, "Riesz exponent alpha in (0, 2], alpha < n");
        sc->add_option("--seed", f.seed, "sampling seed");
    }
    static void add_region_flags(CLI::App* sc, Flags& f) {
        sc->add_option("--region", f.region, "ball, sphere, f1, f2 or an inline JSON region");
        sc->add_option("--body", f.region, "alias of --region");
        sc->add_option("--radius", f.radius, "radius for ball or sphere");
        sc->add_option("--center", f.center, "center x1,...,xn");
        sc->add_option("--s", f.s, "profile exponent for f1/f2");
        sc->add_option("--R", f.R, "truncation radius for unbounded regions");
    }

    static std::vector<double> parse_list(const std::string& text, const std::string& what) {
        std::vector<double> v;
        for (const auto& field : split_csv_line(text)) {
            try {
                std::size_t used = 0;
                v.push_back(std::stod(field, &used));
                require(used == field.size(), "");
            } catch (const std::exception&) {
                throw InvalidInput("cannot parse " + what + " '" + text + "'");
            }
        }
        return v;
    }

    static nlohmann::json read_json(const std::string& path) {
        std::ifstream in(path);
        require(static_cast<bool>(in), "cannot open config '" + path + "'");
        try {
            return nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw InvalidInput("config '" + path + "' is not valid JSON: " + e.what());
        }
    }

    static std::string default_output_dir() {
        const char* env = std::getenv(kOutputDirEnv);
        return env && *env ? env : ".";
    }

    void apply_flags(RunConfig& c, const Flags& f) const {
        if (f.n || f.alpha) c.params = RieszParams(f.n.value_or(c.params.n), f.alpha.value_or(c.params.alpha));
        if (f.seed) c.seed = *f.seed;
        if (f.points) c.resolution = *f.points;
        if (!f.mode.empty()) c.mode = sample_mode_from_string(f.mode);
        if (f.tol) c.tolKKT = *f.tol;
        if (!f.radii.empty()) c.truncationRadii = parse_list(f.radii, "radii");
        if (!f.source.empty()) c.source = parse_list(f.source, "source point");
        if (f.mass) c.sourceMass = *f.mass;
        if (f.delta) c.sourceDelta = *f.delta;
        if (f.walksOpt) c.walks = *f.walksOpt;
        if (!f.region.empty()) c.region = region_json_from_flags(f, c.params.n);
        require(c.resolution > 0 && c.tolKKT > 0.0 && c.walks > 0, "resolution, tolerance and walks must be positive");
        require(c.sourceMass > 0.0 && c.sourceDelta > 0.0, "source mass and delta must be positive");
        detail::check_radii(c.truncationRadii);
    }

    nlohmann::json region_json_from_flags(const Flags& f, std::size_t n) const {
        const std::string& r = f.region;
        if (!r.empty() && r.front() == '{') {
            try {
                return nlohmann::json::parse(r);
            } catch (const nlohmann::json::exception& e) {
                throw InvalidInput(std::string("inline region is not valid JSON: ") + e.what());
            }
        }
        std::vector<double> center = f.center.empty() ? std::vector<double>(n, 0.0) : parse_list(f.center, "center");
        if (r == "ball" || r == "sphere")
            return {{"type", r}, {"center", center}, {"radius", f.radius.value_or(1.0)}};
        if (r == "f1" || r == "f2") {
            nlohmann::json body{{"type", r}, {"s", f.s.value_or(1.0)}};
            if (f.R) return {{"type", "annulus-clip"}, {"inner", body}, {"rLo", 0.0}, {"rHi", *f.R}};
            return body;
        }
        throw InvalidInput("unknown region '" + r + "' (expected ball, sphere, f1, f2 or JSON)");
    }

    Region region_of(const RunConfig& c) const {
        require(c.region.has_value(), "no region given (use --region or the config)");
        const Region r = region_from_json(*c.region);
        require(r.dim() == c.params.n, "region dimension must equal n");
        return r;
    }

    std::filesystem::path output_path(const std::string& name) const {
        std::filesystem::create_directories(out_dir_);
        return std::filesystem::path(out_dir_) / name;
    }

    /// Writes through a temporary file and renames it into place.
    template <class Writer>
    void write_file(const std::string& name, Writer&& writer) const {
        const auto path = output_path(name);
        const auto tmp = std::filesystem::path(path.string() + ".tmp");
        {
            std::ofstream os(tmp, std::ios::binary);
            require(static_cast<bool>(os), "cannot write " + tmp.string());
            writer(os);
        }
        std::filesystem::rename(tmp, path);
    }

    void write_json(const std::string& name, const nlohmann::json& j) const {
        write_file(name, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    }

    static nlohmann::json params_json(const RunConfig& c) {
        return {{"n", c.params.n}, {"alpha", c.params.alpha}, {"seed", c.seed}, {"tolKKT", c.tolKKT}};
    }

    int cmd_capacity(const RunConfig& c, bool writeMeasure) {
        const Region region = region_of(c);
        EquilibriumOptions eo;
        eo.resolution = c.resolution;
        eo.mode = c.mode;
        eo.seed = c.seed;
        eo.tolKKT = c.tolKKT;
        const EquilibriumResult e = equilibrium_measure(region, c.params, eo);
        const std::string stem = writeMeasure ? "equilibrium" : "capacity";
        out_ << "capacity " << format_real(e.capacity) << '\n';
        out_ << "points " << e.gamma.size() << ", converged " << (e.solver.converged ? "yes" : "no") << '\n';
        write_file(stem + ".csv", [&](std::ostream& os) {
            if (writeMeasure) {
                write_measure_csv(os, e.gamma);
            } else {
                os << "points,capacity,energy,minPotential,maxPotential\n";
                os << e.gamma.size() << ',' << format_real(e.capacity) << ',' << format_real(e.energyValue) << ','
                   << format_real(e.potentialOnSet.min) << ',' << format_real(e.potentialOnSet.max) << '\n';
            }
        });
        write_json(stem + ".json", {{"region", describe(region)},
                                    {"inputs", params_json(c)},
                                    {"resolution", c.resolution},
                                    {"mode", to_string(c.mode)},
                                    {"points", e.gamma.size()},
                                    {"capacity", e.capacity},
                                    {"energy", e.energyValue},
                                    {"potentialOnSet",
                                     {{"min", e.potentialOnSet.min},
                                      {"max", e.potentialOnSet.max},
                                      {"mean", e.potentialOnSet.mean},
                                      {"supportMaxDeviation", e.potentialOnSet.supportMaxDeviation}}},
                                    {"lambdaMin", e.monitor.lambdaMin},
                                    {"solver",
                                     {{"converged", e.solver.converged},
                                      {"iterations", e.solver.iterations},
                                      {"kktResidual", e.solver.kktResidual}}}});
        return e.solver.converged ? kSuccess : kComputationFailed;
    }

    DiscreteMeasure source_of(const RunConfig& c, const Flags& f) const {
        if (!f.mu.empty()) return read_measure_file(f.mu);
        require(c.source.size() == c.params.n, "source point must have n coordinates (use --source or --mu)");
        return mollified_dirac(Point(c.source), c.sourceMass, c.sourceDelta);
    }

    static DiscreteMeasure read_measure_file(const std::string& path) {
        std::ifstream in(path);
        require(static_cast<bool>(in), "cannot open measure file '" + path + "'");
        return read_measure_csv(in);
    }

    int cmd_sweep(const RunConfig& c, const Flags& f) {
        const Region region = region_of(c);
        const DiscreteMeasure sigma = source_of(c, f);
        require(sigma.dim() == c.params.n, "source dimension must equal n");
        BalayageOptions bo;
        bo.resolution = c.resolution;
        bo.mode = c.mode;
        bo.seed = c.seed;
        bo.tolKKT = c.tolKKT;
        if (!c.truncationRadii.empty()) {
            ExhaustionOptions eo;
            eo.sweep = bo;
            if (f.pointsPerShell) eo.pointsPerShell = *f.pointsPerShell;
            const ExhaustionTrace t = exhaustion_sweep(sigma, region, c.truncationRadii, c.params, eo);
            for (std::size_t k = 0; k < t.results.size(); ++k)
                out_ << "R " << format_real(t.truncationRadii[k]) << " sweptMass " << format_real(t.results[k].sweptMass)
                     << " ratio " << format_real(t.massRatios[k]) << '\n';
            write_file("sweep-trace.csv", [&](std::ostream& os) { write_trace_csv(os, t); });
            write_json("sweep-trace.json", {{"region", describe(region)},
                                            {"inputs", params_json(c)},
                                            {"massRatios", t.massRatios},
                                            {"cloudSizes", t.cloudSizes},
                                            {"potentialMonotonicity", t.potentialMonotonicity},
                                            {"allConverged", t.allConverged},
                                            {"flagged", t.flagged}});
            return t.allConverged ? kSuccess : kComputationFailed;
        }
        const BalayageResult b = sweep(sigma, region, c.params, bo);
        out_ << "sourceMass " << format_real(b.sourceMass) << '\n';
        out_ << "sweptMass " << format_real(b.sweptMass) << '\n';
        out_ << "converged " << (b.solver.converged ? "yes" : "no") << '\n';
        write_file("sweep.csv", [&](std::ostream& os) { write_measure_csv(os, b.swept); });
        write_json("sweep.json", {{"region", describe(region)},
                                  {"inputs", params_json(c)},
                                  {"resolution", c.resolution},
                                  {"mode", to_string(c.mode)},
                                  {"sourceMass", b.sourceMass},
                                  {"sweptMass", b.sweptMass},
                                  {"maxOnSetGap", b.onSetMatch.maxAbsGap},
                                  {"maxOnSupportGap", b.onSupportMatch.maxAbsGap},
                                  {"offSetSlack", b.offSetDomination.maxAbsGap},
                                  {"massNotCreated", b.massNotCreated(1e-6)},
                                  {"solver",
                                   {{"converged", b.solver.converged},
                                    {"iterations", b.solver.iterations},
                                    {"kktResidual", b.solver.kktResidual}}}});
        return b.solver.converged ? kSuccess : kComputationFailed;
    }

    int cmd_kelvin(const RunConfig& c, const Flags& f) {
        const DiscreteMeasure nu = read_measure_file(f.mu);
        require(nu.dim() == c.params.n, "measure dimension must equal n");
        const std::vector<double> y = f.center.empty() ? std::vector<double>(c.params.n, 0.0)
                                                       : parse_list(f.center, "center");
        const DiscreteMeasure star = kelvin_transform(nu, Inversion{Point(y)}, c.params);
        out_ << "atoms " << star.size() << " mass " << format_real(total_mass(star)) << '\n';
        write_file("kelvin.csv", [&](std::ostream& os) { write_measure_csv(os, star); });
        return kSuccess;
    }

    int cmd_wiener(const RunConfig& c, const Flags& f) {
        const Region region = region_of(c);
        const nlohmann::json& w = c.wiener;
        WienerOptions wo;
        wo.seed = c.seed;
        wo.q = f.q.value_or(w.value("q", 2.0));
        wo.jMin = f.jMin.value_or(w.value("jMin", 1));
        wo.jMax = f.jMax.value_or(w.value("jMax", 7));
        wo.slicePoints = f.slicePoints.value_or(w.value("slicePoints", std::size_t{400}));
        wo.tolKKT = c.tolKKT;
        const WienerMode mode = wiener_mode_from_string(!f.wienerMode.empty() ? f.wienerMode
                                                                              : w.value("mode", std::string("thinness")));
        std::vector<double> y(c.params.n, 0.0);
        if (!f.y.empty()) y = parse_list(f.y, "series center");
        else if (w.contains("y")) y = w["y"].get<std::vector<double>>();
        const WienerReport rep = wiener_series(region, mode, Point(y), c.params, wo);
        for (const auto& t : rep.terms)
            out_ << "j " << t.j << " sliceCapacity " << format_real(t.sliceCapacity) << " term " << format_real(t.term)
                 << '\n';
        out_ << "classification " << interpret(rep) << '\n';
        write_file("wiener.csv", [&](std::ostream& os) { write_wiener_csv(os, rep); });
        nlohmann::json summary = wiener_summary_json(rep);
        summary["region"] = describe(region);
        summary["inputs"] = params_json(c);
        write_json("wiener.json", summary);
        return rep.allConverged ? kSuccess : kComputationFailed;
    }

    int cmd_pom(const RunConfig& c, const Flags& f) {
        const DiscreteMeasure mu = read_measure_file(f.mu);
        const DiscreteMeasure nu = read_measure_file(f.nu);
        std::ifstream in(f.probes);
        require(static_cast<bool>(in), "cannot open probe file '" + f.probes + "'");
        const PointCloud probes = read_point_cloud_csv(in);
        PoMOptions po;
        if (f.relTol) po.relTol = *f.relTol;
        if (f.tolMass) po.tolMass = *f.tolMass;
        const PoMVerdict v = pom_verify(mu, nu, probes, c.params, po, f.probes);
        out_ << "pointwiseHolds " << (v.pointwiseHolds ? "true" : "false") << '\n';
        out_ << "violatingProbes " << v.violatingProbes.size() << '\n';
        out_ << "massMu " << format_real(v.massMu) << '\n';
        out_ << "massNu " << format_real(v.massNu) << '\n';
        out_ << "massInequalityHolds " << (v.massInequalityHolds ? "true" : "false") << '\n';
        out_ << "probesUsed " << v.probesUsed << " excluded " << v.probesExcluded << '\n';
        write_json("pom.json", {{"pointwiseHolds", v.pointwiseHolds},
                                {"violatingProbes", v.violatingProbes},
                                {"maxRelativeExcess", v.maxRelativeExcess},
                                {"massMu", v.massMu},
                                {"massNu", v.massNu},
                                {"massInequalityHolds", v.massInequalityHolds},
                                {"probesUsed", v.probesUsed},
                                {"probesExcluded", v.probesExcluded},
                                {"context", {{"probes", v.probeRegion}, {"relTol", po.relTol}, {"tolMass", po.tolMass}}}});
        return kSuccess;
    }

    int cmd_experiment(const RunConfig& c, const Flags& f) {
        const auto& names = experiment_names();
        if (std::find(names.begin(), names.end(), f.experiment) == names.end()) {
            err_ << "unknown experiment '" << f.experiment << "'; available:";
            for (const auto& n : names) err_ << ' ' << n;
            err_ << '\n';
            return kInvalidConfig;
        }
        ExperimentConfig base;
        base.params = c.params;
        base.seed = c.seed;
        base.tolKKT = c.tolKKT;
        base.oracleWalks = c.walks;
        if (!c.truncationRadii.empty()) base.truncationRadii = c.truncationRadii;
        if (c.source.size() == c.params.n) base.source = c.source;
        const ExperimentConfig cfg = experiment_config_from_json(c.experiment, base);
        const WalkOracle oracle = wos::oracle();
        const ExperimentReport rep = run_experiment(f.experiment, cfg, f.noOracle ? nullptr : &oracle);
        out_ << "experiment " << rep.name << ": " << to_string(rep.conclusion) << " ("
             << format_real(rep.wallTimeSeconds) << " s)\n";
        for (const auto& note : rep.notes) out_ << "  " << note << '\n';
        write_json("experiment-" + rep.name + ".json", rep.to_json());
        switch (rep.conclusion) {
        case Conclusion::pass: return kSuccess;
        case Conclusion::fail: return kFail;
        case Conclusion::inconclusive: return kInconclusive;
        }
        return kComputationFailed;
    }

    int cmd_wos(const RunConfig& c, const Flags& f) {
        require(c.params.n == 3 && c.params.alpha == 2.0, "walk-on-spheres oracle needs n = 3 and alpha = 2");
        const Region region = region_of(c);
        const auto target = wos::make_target(region, f.R.value_or(0.0));
        WalkEstimate est;
        std::string what;
        if (f.capacityMode) {
            est = wos::capacity(*target, c.walks, c.seed);
            what = "capacity";
        } else {
            require(c.source.size() == 3, "hit probability needs --start x,y,z");
            est = wos::hit_probability(*target, Point(c.source), c.walks, c.seed);
            what = "hitProbability";
        }
        out_ << what << ' ' << format_real(est.value) << " +- " << format_real(est.standardError) << " (" << est.walks
             << " walks, seed " << est.seed << ")\n";
        write_json("wos.json", {{"region", describe(region)},
                                {"estimate", what},
                                {"value", est.value},
                                {"standardError", est.standardError},
                                {"walks", est.walks},
                                {"seed", est.seed}});
        return kSuccess;
    }

    std::ostream& out_;
    std::ostream& err_;
    std::string out_dir_ = ".";
};

} // namespace rieszpot::cli

#endif // RIESZPOT_TOOLS_CLI_APP_HPP_
