#ifndef RIESZPOT_NNQP_HPP_
#define RIESZPOT_NNQP_HPP_

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "rieszpot/error.hpp"

namespace rieszpot {

/// min 1/2 w^T Q w - b^T w subject to w >= 0.
struct NNQP {
    Eigen::MatrixXd Q;
    Eigen::VectorXd b;
    double tolKKT = 1e-8;
    /// 0 selects max(500, 50 * dimension).
    std::size_t maxIter = 0;
};

struct NNQPOptions {
    double tolKKT = 1e-8;
    std::size_t maxIter = 0;
    /// Projected-gradient iterations before the active-set polish (at most half of maxIter).
    std::size_t gradientIter = 200;
    bool polish = true;
};

struct NNQPSolution {
    Eigen::VectorXd w;
    double kktResidual = 0.0;
    /// max |g_i| over the support, relative to the same scale.
    double stationarity = 0.0;
    std::size_t iterations = 0;
    double objective = 0.0;
    bool converged = false;
    /// Diagonal shift used in a reduced solve, 0 if none was needed.
    double jitter = 0.0;
    std::size_t pivotSteps = 0;
    /// Objective of every recorded (feasible, non-increasing) iterate.
    std::vector<double> objectiveHistory;
};

/// Relative KKT residual: max_i max(-min(g_i, 0), |g_i w_i|) / max(1, |b|_inf), g = Q w - b.
inline double kkt_residual(const Eigen::VectorXd& g, const Eigen::VectorXd& w, double scale) {
    double r = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) r = std::max({r, -std::min(g[i], 0.0), std::abs(g[i] * w[i])});
    return r / scale;
}

namespace detail {

inline double support_stationarity(const Eigen::VectorXd& g, const Eigen::VectorXd& w, double scale) {
    double r = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i)
        if (w[i] > 0.0) r = std::max(r, std::abs(g[i]));
    return r / scale;
}

struct Iterate {
    Eigen::VectorXd w;
    Eigen::VectorXd g;
    double f = 0.0;
};

inline double objective_of(const Eigen::VectorXd& w, const Eigen::VectorXd& g, const Eigen::VectorXd& b) {
    return 0.5 * w.dot(g) - 0.5 * b.dot(w);
}

/**
 * Block principal pivoting from the support of `start`. Solves the reduced
 * system on the free set F with x = 0 off F, then moves every infeasible index
 * between F and its complement; after three rounds without progress it
 * switches to single lowest-index swaps, which guarantees termination.
 */
inline bool principal_pivoting(const Eigen::MatrixXd& Q, const Eigen::VectorXd& b, const Eigen::VectorXd& start,
                               double scale, std::size_t maxSteps, Iterate& out, std::size_t& steps, double& jitter) {
    const Eigen::Index n = b.size();
    std::vector<char> free(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) free[i] = start[i] > 0.0;
    const double tiny = 1e-14 * scale;
    std::size_t best = std::numeric_limits<std::size_t>::max();
    int chances = 3;
    const double trace = Q.trace();
    for (steps = 0; steps < maxSteps; ++steps) {
        std::vector<Eigen::Index> F;
        for (Eigen::Index i = 0; i < n; ++i)
            if (free[i]) F.push_back(i);
        const auto m = static_cast<Eigen::Index>(F.size());
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
        if (m > 0) {
            Eigen::MatrixXd QF(m, m);
            Eigen::VectorXd bF(m);
            for (Eigen::Index c = 0; c < m; ++c) {
                bF[c] = b[F[c]];
                for (Eigen::Index r = 0; r < m; ++r) QF(r, c) = Q(F[r], F[c]);
            }
            Eigen::LLT<Eigen::MatrixXd> llt(QF);
            if (llt.info() != Eigen::Success) {
                jitter = 1e-12 * trace / static_cast<double>(n);
                QF.diagonal().array() += jitter;
                llt.compute(QF);
                if (llt.info() != Eigen::Success) return false;
            }
            const Eigen::VectorXd xF = llt.solve(bF);
            for (Eigen::Index c = 0; c < m; ++c) x[F[c]] = xF[c];
        }
        Eigen::VectorXd g = Q * x - b;
        std::vector<Eigen::Index> bad;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (free[i] && x[i] < -tiny) bad.push_back(i);
            if (!free[i] && g[i] < -tiny) bad.push_back(i);
        }
        if (bad.empty()) {
            out.w = x.cwiseMax(0.0);
            out.g = Q * out.w - b;
            out.f = objective_of(out.w, out.g, b);
            return true;
        }
        if (bad.size() < best) {
            best = bad.size();
            chances = 3;
            for (auto i : bad) free[i] = !free[i];
        } else if (chances > 0) {
            --chances;
            for (auto i : bad) free[i] = !free[i];
        } else {
            const auto i = *std::min_element(bad.begin(), bad.end());
            free[i] = !free[i];
        }
    }
    return false;
}

} // namespace detail

/**
 * @brief Nonnegative quadratic program by projected gradient plus an active-set polish.
 *
 * Starts at w = 0 and takes projected Barzilai-Borwein steps with an exact line
 * search along the projected direction, so every recorded objective is no larger
 * than the previous one. The polish solves the reduced system on the free set by
 * principal pivoting. Convergence means kktResidual <= tol and |g_i| <= tol on the
 * support, both relative to max(1, |b|_inf). If the budget runs out the best
 * iterate is returned with converged = false.
 */
inline NNQPSolution solve_nnqp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& b, const NNQPOptions& opts = {}) {
    const Eigen::Index n = b.size();
    require(Q.rows() == n && Q.cols() == n, "QP matrix and linear term differ in dimension");
    require(std::isfinite(opts.tolKKT) && opts.tolKKT > 0.0, "KKT tolerance must be positive");
    require(Q.allFinite() && b.allFinite(), "QP data must be finite");
    const double qmax = n > 0 ? Q.cwiseAbs().maxCoeff() : 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < j; ++i)
            require(std::abs(Q(i, j) - Q(j, i)) <= 1e-12 * qmax, "QP matrix must be symmetric");

    NNQPSolution sol;
    const std::size_t maxIter =
        opts.maxIter ? opts.maxIter : std::max<std::size_t>(500, 50 * static_cast<std::size_t>(n));
    const double scale = std::max(1.0, n > 0 ? b.cwiseAbs().maxCoeff() : 0.0);
    const double tol = opts.tolKKT;

    detail::Iterate cur{Eigen::VectorXd::Zero(n), -b, 0.0};
    sol.objectiveHistory.push_back(0.0);
    auto certified = [&](const detail::Iterate& it) {
        return kkt_residual(it.g, it.w, scale) <= tol && detail::support_stationarity(it.g, it.w, scale) <= tol;
    };
    auto finish = [&](const detail::Iterate& it) {
        sol.w = it.w;
        sol.objective = it.f;
        sol.kktResidual = kkt_residual(it.g, it.w, scale);
        sol.stationarity = detail::support_stationarity(it.g, it.w, scale);
        sol.converged = sol.kktResidual <= tol && sol.stationarity <= tol;
        return sol;
    };
    if (n == 0) return finish(cur);

    double step = 0.0;
    auto gradient_steps = [&](std::size_t budget) {
        for (std::size_t k = 0; k < budget && sol.iterations < maxIter; ++k) {
            if (certified(cur)) return;
            if (step <= 0.0) {
                // Cauchy step along the projected steepest descent direction.
                Eigen::VectorXd d = (-cur.g).cwiseMax(-cur.w);
                const double dQd = d.dot(Q * d);
                step = dQd > 0.0 ? d.squaredNorm() / dQd : 1.0 / std::max(qmax, 1e-300);
            }
            Eigen::VectorXd d = (cur.w - step * cur.g).cwiseMax(0.0) - cur.w;
            const double gd = cur.g.dot(d);
            ++sol.iterations;
            if (!(gd < 0.0)) return;
            const Eigen::VectorXd Qd = Q * d;
            const double dQd = d.dot(Qd);
            const double t = dQd > 0.0 ? std::min(1.0, -gd / dQd) : 1.0;
            cur.w = (cur.w + t * d).cwiseMax(0.0);
            cur.g += t * Qd;
            const double f = cur.f + t * gd + 0.5 * t * t * dQd;
            if (f <= cur.f) {
                cur.f = f;
                sol.objectiveHistory.push_back(f);
            }
            const double sy = t * t * dQd;
            step = sy > 0.0 ? t * t * d.squaredNorm() / sy : 0.0;
        }
    };

    // Leave at least half of the budget to the polish.
    gradient_steps(std::min(opts.gradientIter, std::max<std::size_t>(maxIter / 2, 1)));
    if (certified(cur)) return finish(cur);

    if (opts.polish) {
        detail::Iterate polished;
        std::size_t steps = 0;
        const std::size_t pivotBudget = maxIter > sol.iterations ? maxIter - sol.iterations : 0;
        // Seed the free set with indices that are positive or attract mass.
        Eigen::VectorXd seed = cur.w;
        for (Eigen::Index i = 0; i < n; ++i)
            if (seed[i] == 0.0 && cur.g[i] < 0.0) seed[i] = 1.0;
        const bool ok = detail::principal_pivoting(Q, b, seed, scale, pivotBudget, polished, steps, sol.jitter);
        sol.iterations += steps;
        sol.pivotSteps = steps;
        if (ok && polished.f <= cur.f + 1e-14 * std::max(1.0, std::abs(cur.f))) {
            cur = std::move(polished);
            if (cur.f <= sol.objectiveHistory.back()) sol.objectiveHistory.push_back(cur.f);
        }
        if (certified(cur)) return finish(cur);
    }

    gradient_steps(maxIter);
    return finish(cur);
}

inline NNQPSolution solve_nnqp(const NNQP& problem) {
    NNQPOptions opts;
    opts.tolKKT = problem.tolKKT;
    opts.maxIter = problem.maxIter;
    return solve_nnqp(problem.Q, problem.b, opts);
}

} // namespace rieszpot

#endif // RIESZPOT_NNQP_HPP_
