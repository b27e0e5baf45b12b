#ifndef RIESZPOT_KERNEL_HPP_
#define RIESZPOT_KERNEL_HPP_

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "rieszpot/error.hpp"
#include "rieszpot/geometry.hpp"
#include "rieszpot/measure.hpp"
#include "rieszpot/parallel.hpp"
#include "rieszpot/riesz_params.hpp"

namespace rieszpot {

namespace detail {
/// r^p for the Riesz exponent p = alpha - n; exact reciprocal in the Newtonian case.
inline double riesz_power(double r, double p) { return p == -1.0 ? 1.0 / r : std::pow(r, p); }
} // namespace detail

/// |x - y|^{alpha - n}.
inline double kernel_eval(const RieszParams& params, std::span<const double> x, std::span<const double> y) {
    require(x.size() == params.n && y.size() == params.n, "dimension mismatch in kernel evaluation");
    const double r = distance(x, y);
    require(r > 0.0, "the Riesz kernel is infinite on the diagonal");
    return detail::riesz_power(r, params.exponent());
}

inline double kernel_eval(const RieszParams& params, const Point& x, const Point& y) {
    return kernel_eval(params, x.coords(), y.coords());
}

/// max(|x - y|, delta)^{alpha - n}.
inline double regularized_kernel(const RieszParams& params, std::span<const double> x, std::span<const double> y,
                                 double delta) {
    require(std::isfinite(delta) && delta > 0.0, "regularization radius must be positive");
    require(x.size() == params.n && y.size() == params.n, "dimension mismatch in kernel evaluation");
    return detail::riesz_power(std::max(distance(x, y), delta), params.exponent());
}

inline double regularized_kernel(const RieszParams& params, const Point& x, const Point& y, double delta) {
    return regularized_kernel(params, x.coords(), y.coords(), delta);
}

/// sum_i w_i max(|p - x_i|, delta_i)^{alpha - n}, summed in atom order.
inline double potential(const DiscreteMeasure& mu, std::span<const double> p, const RieszParams& params) {
    require(p.size() == params.n && (mu.empty() || mu.dim() == params.n), "dimension mismatch in potential");
    const double e = params.exponent();
    double sum = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double r = std::max(distance(p, mu.cloud().point(i)), mu.cloud().cell_radius(i));
        sum += mu.weight(i) * detail::riesz_power(r, e);
    }
    return sum;
}

inline double potential(const DiscreteMeasure& mu, const Point& p, const RieszParams& params) {
    return potential(mu, p.coords(), params);
}

/// Unregularized potential; p must avoid every atom.
inline double exact_potential(const DiscreteMeasure& mu, std::span<const double> p, const RieszParams& params) {
    double sum = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) sum += mu.weight(i) * kernel_eval(params, p, mu.cloud().point(i));
    return sum;
}

struct PotentialField {
    std::vector<double> values;
    PointCloud probes;
    const DiscreteMeasure* source = nullptr;
};

/// Potential at every probe; probes are processed in parallel, each with a fixed summation order.
inline PotentialField potential_field(const DiscreteMeasure& mu, const PointCloud& probes, const RieszParams& params) {
    PotentialField field{std::vector<double>(probes.size()), probes, &mu};
    parallel_for(probes.size(), [&](std::size_t k) { field.values[k] = potential(mu, probes.point(k), params); });
    return field;
}

/// sum_{i,j} w_i v_j max(|x_i - y_j|, (delta_i + delta_j)/2)^{alpha - n}.
inline double energy(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const RieszParams& params) {
    if (mu.empty() || nu.empty()) return 0.0;
    require(mu.dim() == params.n && nu.dim() == params.n, "dimension mismatch in energy");
    const double e = params.exponent();
    std::vector<double> rows(mu.size());
    parallel_for(mu.size(), [&](std::size_t i) {
        const auto x = mu.cloud().point(i);
        const double di = mu.cloud().cell_radius(i);
        double s = 0.0;
        for (std::size_t j = 0; j < nu.size(); ++j) {
            const double r = std::max(distance(x, nu.cloud().point(j)), 0.5 * (di + nu.cloud().cell_radius(j)));
            s += nu.weight(j) * detail::riesz_power(r, e);
        }
        rows[i] = mu.weight(i) * s;
    });
    double total = 0.0;
    for (double r : rows) total += r;
    return total;
}

/// Unregularized mutual energy over pairs of distinct points (coincident pairs are skipped).
inline double exact_pairwise_energy(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const RieszParams& params) {
    const double e = params.exponent();
    double total = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < nu.size(); ++j) {
            const double r = distance(mu.cloud().point(i), nu.cloud().point(j));
            if (r > 0.0) s += nu.weight(j) * detail::riesz_power(r, e);
        }
        total += mu.weight(i) * s;
    }
    return total;
}

/// Extremal eigenvalue estimates of an assembled Gram matrix.
struct GramMonitor {
    double lambdaMin = 0.0;
    double lambdaMax = 0.0;
    bool choleskyOk = false;
    bool passes = false;
};

struct GramOptions {
    /// Directory for cached matrices; empty disables the cache.
    std::string cacheDir;
    bool monitor = true;
};

/// Regularized kernel matrix G_ij = max(|x_i - x_j|, (delta_i + delta_j)/2)^{alpha - n}.
class GramMatrix {
public:
    const Eigen::MatrixXd& entries() const { return entries_; }
    const PointCloud& cloud() const { return cloud_; }
    const RieszParams& params() const { return params_; }
    const GramMonitor& monitor() const { return monitor_; }
    std::size_t size() const { return cloud_.size(); }
    bool loadedFromCache() const { return fromCache_; }

private:
    friend GramMatrix gram(const PointCloud&, const RieszParams&, const GramOptions&);
    Eigen::MatrixXd entries_;
    PointCloud cloud_;
    RieszParams params_;
    GramMonitor monitor_;
    bool fromCache_ = false;
};

namespace detail {

inline constexpr char kDeltaPolicy[] = "cap-max-mean-v1";

inline std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h = 0xCBF29CE484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ull;
    }
    return h;
}

inline std::uint64_t gram_key(const PointCloud& cloud, const RieszParams& params) {
    const std::uint64_t n = params.n, count = cloud.size();
    std::uint64_t h = fnv1a(&n, sizeof n);
    h = fnv1a(&params.alpha, sizeof params.alpha, h);
    h = fnv1a(&count, sizeof count, h);
    h = fnv1a(cloud.coords().data(), cloud.coords().size() * sizeof(double), h);
    h = fnv1a(cloud.cell_radii().data(), cloud.cell_radii().size() * sizeof(double), h);
    return fnv1a(kDeltaPolicy, sizeof kDeltaPolicy, h);
}

inline std::filesystem::path gram_cache_path(const std::string& dir, std::uint64_t key) {
    char name[40];
    std::snprintf(name, sizeof name, "gram-%016llx.bin", static_cast<unsigned long long>(key));
    return std::filesystem::path(dir) / name;
}

inline bool load_gram(const std::filesystem::path& path, std::uint64_t key, Eigen::MatrixXd& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::uint64_t storedKey = 0, rows = 0;
    in.read(reinterpret_cast<char*>(&storedKey), sizeof storedKey);
    in.read(reinterpret_cast<char*>(&rows), sizeof rows);
    if (!in || storedKey != key || rows != static_cast<std::uint64_t>(out.rows())) return false;
    in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(rows * rows * sizeof(double)));
    return static_cast<bool>(in);
}

inline void store_gram(const std::filesystem::path& path, std::uint64_t key, const Eigen::MatrixXd& m) {
    std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) return;
        const std::uint64_t rows = static_cast<std::uint64_t>(m.rows());
        out.write(reinterpret_cast<const char*>(&key), sizeof key);
        out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
        out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(rows * rows * sizeof(double)));
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
}

/// Deterministic start vector for the eigenvalue iterations.
inline Eigen::VectorXd probe_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(1.7 * static_cast<double>(i) + 0.3);
    return v.normalized();
}

inline GramMonitor monitor_matrix(const Eigen::MatrixXd& G) {
    GramMonitor m;
    const Eigen::Index n = G.rows();
    if (n == 0) {
        m.choleskyOk = m.passes = true;
        return m;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() == Eigen::Success) {
        m.choleskyOk = true;
        Eigen::VectorXd v = probe_vector(n);
        for (int it = 0; it < 40; ++it) v = llt.solve(v).normalized();
        m.lambdaMin = v.dot(G * v);
        v = probe_vector(n);
        for (int it = 0; it < 60; ++it) v = (G * v).normalized();
        m.lambdaMax = v.dot(G * v);
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
        m.lambdaMin = es.eigenvalues()(0);
        m.lambdaMax = es.eigenvalues()(n - 1);
    }
    m.passes = m.lambdaMin > -1e-10 * std::abs(m.lambdaMax);
    return m;
}

} // namespace detail

/**
 * @brief Assembles the Gram matrix row by row (rows in parallel).
 *
 * Rejects clouds with coincident points. The positive-definiteness monitor
 * records lambda_min (inverse iteration on a Cholesky factor, or a dense
 * eigensolve if the factorization fails) and lambda_max.
 */
inline GramMatrix gram(const PointCloud& cloud, const RieszParams& params, const GramOptions& options = {}) {
    params.validate();
    require(cloud.empty() || cloud.dim() == params.n, "cloud dimension does not match the kernel");
    GramMatrix g;
    g.cloud_ = cloud;
    g.params_ = params;
    const std::size_t n = cloud.size();
    g.entries_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));

    std::optional<std::filesystem::path> cachePath;
    std::uint64_t key = 0;
    if (!options.cacheDir.empty() && n > 0) {
        key = detail::gram_key(cloud, params);
        cachePath = detail::gram_cache_path(options.cacheDir, key);
        g.fromCache_ = detail::load_gram(*cachePath, key, g.entries_);
    }
    if (!g.fromCache_) {
        const double e = params.exponent();
        std::vector<char> duplicate(n, 0);
        parallel_for(n, [&](std::size_t i) {
            const auto x = cloud.point(i);
            const double di = cloud.cell_radius(i);
            for (std::size_t j = 0; j < n; ++j) {
                double r;
                if (j == i) {
                    r = di;
                } else {
                    const double d = distance(x, cloud.point(j));
                    if (d == 0.0) duplicate[i] = 1;
                    r = std::max(d, 0.5 * (di + cloud.cell_radius(j)));
                }
                // Column-major storage: fill column i, which equals row i by symmetry.
                g.entries_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = detail::riesz_power(r, e);
            }
        });
        for (char d : duplicate) require(!d, "Gram matrix requires pairwise-distinct points");
        if (cachePath) detail::store_gram(*cachePath, key, g.entries_);
    }
    if (options.monitor) g.monitor_ = detail::monitor_matrix(g.entries_);
    return g;
}

} // namespace rieszpot

#endif // RIESZPOT_KERNEL_HPP_
