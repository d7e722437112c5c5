#pragma once

// Discrete obstacle problem
//
//     A u - B lambda = f,   u >= psi,   lambda >= 0,   lambda_p (u_p - psi_p) = 0,
//
// with B = diag(int phi_p) coming from the biorthogonal multiplier basis.
// Because B is diagonal the complementarity conditions decouple node by node,
// which is what both solvers below exploit.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nlvi/assembly.hpp"
#include "nlvi/errors.hpp"
#include "nlvi/linear.hpp"

namespace nlvi {

/// Obstacle max(-3 (x - 1/2)^2 + 1/4, 0).
inline double psi_smooth(double x) { return std::max(-3.0 * (x - 0.5) * (x - 0.5) + 0.25, 0.0); }

/// Piecewise obstacle with a plateau on [1/6, 1/3] and a roof on [2/3, 5/6];
/// zero elsewhere.
inline double psi_kink(double x) {
    if (x >= 1.0 / 6.0 && x <= 2.0 / 6.0) return 0.02;
    if (x >= 2.0 / 3.0 && x <= 3.0 / 4.0) return 0.24 * (x - 2.0 / 3.0);
    if (x >= 3.0 / 4.0 && x <= 5.0 / 6.0) return 0.24 * (5.0 / 6.0 - x);
    return 0.0;
}

struct ObstacleProblem {
    Matrix A;          ///< SPD stiffness over the free nodes
    Vector B;          ///< diagonal dual pairing
    Vector f_vec;      ///< load vector
    Vector psi_vec;    ///< nodal obstacle
    Vector g_plus_vec; ///< nodal (-L psi - f)^+
};

/// Builds the problem and the nodal bound (B^{-1}(A psi - f))^+.
inline ObstacleProblem make_obstacle_problem(Matrix A, Vector B, Vector f_vec, Vector psi_vec) {
    const auto n = A.rows();
    detail::require(A.cols() == n && B.size() == n && f_vec.size() == n && psi_vec.size() == n,
                    "obstacle problem dimensions do not match");
    detail::require((B.array() > 0.0).all(), "dual pairing must be positive");
    ObstacleProblem p{std::move(A), std::move(B), std::move(f_vec), std::move(psi_vec), Vector()};
    p.g_plus_vec = (nodal_operator_values(p.B, p.A, p.psi_vec) - p.f_vec.cwiseQuotient(p.B)).cwiseMax(0.0);
    return p;
}

struct KktResiduals {
    double stationarity = 0.0;         ///< |A u - B lambda - f|_2
    double primal_feasibility = 0.0;   ///< min(u - psi)
    double dual_feasibility = 0.0;     ///< min(lambda)
    double complementarity = 0.0;      ///< |sum_p lambda_p B_p (u_p - psi_p)|

    bool within(double tol) const {
        return stationarity <= tol && primal_feasibility >= -tol && dual_feasibility >= -tol &&
               complementarity <= tol;
    }
};

struct VIResult {
    Vector u;
    Vector lambda;
    std::vector<std::size_t> active_set;
    std::size_t iterations = 0;
    KktResiduals kkt;
};

inline KktResiduals kkt_residuals(const ObstacleProblem& problem, const Vector& u, const Vector& lambda) {
    KktResiduals r;
    const Vector gap = u - problem.psi_vec;
    r.stationarity = (problem.A * u - problem.B.cwiseProduct(lambda) - problem.f_vec).norm();
    r.primal_feasibility = gap.size() ? gap.minCoeff() : 0.0;
    r.dual_feasibility = lambda.size() ? lambda.minCoeff() : 0.0;
    r.complementarity = std::abs(lambda.cwiseProduct(problem.B).dot(gap));
    return r;
}

inline KktResiduals kkt_residuals(const ObstacleProblem& problem, const VIResult& result) {
    return kkt_residuals(problem, result.u, result.lambda);
}

struct ActiveSetOptions {
    double c = 1.0;
    std::size_t max_iter = 50;
};

namespace detail {

/// Solves A u = f + B lambda with u = psi on `active` and lambda = 0 elsewhere.
inline void reduced_solve(const ObstacleProblem& problem, const std::vector<bool>& active, Vector& u,
                          Vector& lambda) {
    const auto n = problem.A.rows();
    std::vector<Eigen::Index> inactive_idx, active_idx;
    for (Eigen::Index p = 0; p < n; ++p) (active[static_cast<std::size_t>(p)] ? active_idx : inactive_idx).push_back(p);

    u = Vector::Zero(n);
    for (auto p : active_idx) u[p] = problem.psi_vec[p];
    if (!inactive_idx.empty()) {
        const auto m = static_cast<Eigen::Index>(inactive_idx.size());
        Matrix A_ii(m, m);
        Vector rhs(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            const auto pi = inactive_idx[static_cast<std::size_t>(i)];
            for (Eigen::Index j = 0; j < m; ++j) A_ii(i, j) = problem.A(pi, inactive_idx[static_cast<std::size_t>(j)]);
            double r = problem.f_vec[pi];
            for (auto q : active_idx) r -= problem.A(pi, q) * problem.psi_vec[q];
            rhs[i] = r;
        }
        Eigen::LLT<Matrix> llt(A_ii);
        if (llt.info() != Eigen::Success)
            throw NumericalError("reduced active-set system is singular: check the operator assembly");
        Vector x = llt.solve(rhs);
        x += llt.solve(rhs - A_ii * x);
        for (Eigen::Index i = 0; i < m; ++i) u[inactive_idx[static_cast<std::size_t>(i)]] = x[i];
    }
    const Vector residual = problem.A * u - problem.f_vec;
    lambda = Vector::Zero(n);
    for (auto p : active_idx) lambda[p] = residual[p] / problem.B[p];
}

}  // namespace detail

/// Primal-dual active set iteration on the nodal complementarity system.
inline VIResult active_set_solve(const ObstacleProblem& problem, const ActiveSetOptions& opts = {}) {
    detail::require(opts.c > 0.0, "active-set parameter c must be positive");
    const auto n = problem.A.rows();
    VIResult result;
    result.u = solve_linear(problem.A, problem.f_vec).u;
    result.lambda = Vector::Zero(n);

    auto predict = [&](const Vector& u, const Vector& lambda) {
        std::vector<bool> active(static_cast<std::size_t>(n));
        for (Eigen::Index p = 0; p < n; ++p)
            active[static_cast<std::size_t>(p)] = lambda[p] + opts.c * (problem.psi_vec[p] - u[p]) > 0.0;
        return active;
    };

    std::vector<bool> active = predict(result.u, result.lambda);
    std::vector<std::size_t> sizes;
    bool converged = false;
    while (result.iterations < opts.max_iter) {
        detail::reduced_solve(problem, active, result.u, result.lambda);
        ++result.iterations;
        sizes.push_back(static_cast<std::size_t>(std::count(active.begin(), active.end(), true)));
        std::vector<bool> next = predict(result.u, result.lambda);
        if (next == active) {
            converged = true;
            break;
        }
        active = std::move(next);
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "active-set iteration did not converge in " << opts.max_iter << " iterations; last active set sizes:";
        for (std::size_t k = sizes.size() > 5 ? sizes.size() - 5 : 0; k < sizes.size(); ++k) msg << ' ' << sizes[k];
        throw NumericalError(msg.str());
    }
    for (Eigen::Index p = 0; p < n; ++p)
        if (active[static_cast<std::size_t>(p)]) result.active_set.push_back(static_cast<std::size_t>(p));
    result.kkt = kkt_residuals(problem, result);
    return result;
}

/// Piecewise-linear penalty H_eps: 1 for t <= 0, 1 - t/eps on [0, eps], 0 beyond.
inline double penalty_function(double t, double eps) {
    if (t <= 0.0) return 1.0;
    if (t >= eps) return 0.0;
    return 1.0 - t / eps;
}

/// Antiderivative -int_0^t H_eps, convex in t.
inline double penalty_potential(double t, double eps) {
    if (t <= 0.0) return -t;
    if (t >= eps) return -0.5 * eps;
    return -(t - 0.5 * t * t / eps);
}

struct PenaltyOptions {
    double tol = 1e-11;  ///< relative to 1 + |f| + |B g+|
    std::size_t max_iter = 200;
    std::optional<Vector> initial_guess;
};

struct PenaltyResult {
    Vector u;
    Vector lambda;  ///< nodal g+ * H_eps(u - psi)
    std::size_t iterations = 0;
};

/// Semismooth Newton for A u = B (g+ o H_eps(u - psi)) + f. The equation is
/// the gradient of a convex energy, which the step length control decreases.
inline PenaltyResult penalty_solve(const ObstacleProblem& problem, double eps, const PenaltyOptions& opts = {}) {
    detail::require(eps > 0.0, "penalty parameter epsilon must be positive");
    const auto n = problem.A.rows();
    const Vector& g = problem.g_plus_vec;
    const Vector weight = problem.B.cwiseProduct(g);

    auto multiplier = [&](const Vector& u) {
        Vector lambda(n);
        for (Eigen::Index p = 0; p < n; ++p) lambda[p] = g[p] * penalty_function(u[p] - problem.psi_vec[p], eps);
        return lambda;
    };
    auto residual = [&](const Vector& u) {
        return Vector(problem.A * u - problem.B.cwiseProduct(multiplier(u)) - problem.f_vec);
    };
    // energy(u + theta d) - energy(u), formed without cancelling large terms.
    auto energy_change = [&](const Vector& u, const Vector& Au, const Vector& d, const Vector& Ad, double theta) {
        double change = theta * d.dot(Au - problem.f_vec) + 0.5 * theta * theta * d.dot(Ad);
        for (Eigen::Index p = 0; p < n; ++p) {
            if (weight[p] == 0.0) continue;
            const double t = u[p] - problem.psi_vec[p];
            change += weight[p] * (penalty_potential(t + theta * d[p], eps) - penalty_potential(t, eps));
        }
        return change;
    };

    PenaltyResult result;
    result.u = opts.initial_guess ? *opts.initial_guess : solve_linear(problem.A, problem.f_vec).u;
    detail::require(result.u.size() == n, "initial guess has the wrong size");
    const double scale = 1.0 + problem.f_vec.norm() + weight.norm();

    Vector F = residual(result.u);
    double norm = F.norm();
    double best = norm;
    std::size_t since_best = 0;
    while (norm > opts.tol * scale) {
        if (result.iterations >= opts.max_iter || since_best >= 10) {
            std::ostringstream msg;
            msg << "penalty Newton stagnated at residual " << norm << " for eps = " << eps
                << "; continue from a solution with larger eps";
            throw NumericalError(msg.str());
        }
        Matrix J = problem.A;
        for (Eigen::Index p = 0; p < n; ++p) {
            const double t = result.u[p] - problem.psi_vec[p];
            if (t > 0.0 && t < eps) J(p, p) += weight[p] / eps;
        }
        Eigen::LLT<Matrix> llt(J);
        if (llt.info() != Eigen::Success) throw NumericalError("penalty Newton matrix is not positive definite");
        const Vector step = llt.solve(-F);
        // Rounding floor: the step no longer moves u.
        if (step.norm() <= 1e-14 * (1.0 + result.u.norm()) && norm <= 1e-6 * scale) break;

        const Vector Au = problem.A * result.u;
        const Vector Ad = problem.A * step;
        const double slope = F.dot(step);
        double theta = 1.0;
        for (int halving = 0; halving < 20; ++halving) {
            if (energy_change(result.u, Au, step, Ad, theta) <= 1e-4 * theta * slope) break;
            theta *= 0.5;
        }
        result.u += theta * step;
        F = residual(result.u);
        norm = F.norm();
        ++result.iterations;
        if (norm < best) {
            best = norm;
            since_best = 0;
        } else {
            ++since_best;
        }
    }
    result.lambda = multiplier(result.u);
    return result;
}

/// Penalty solutions for a decreasing sequence of eps, each started from the previous one.
inline std::vector<PenaltyResult> penalty_path(const ObstacleProblem& problem, const std::vector<double>& eps,
                                               PenaltyOptions opts = {}) {
    std::vector<PenaltyResult> path;
    for (std::size_t k = 0; k < eps.size(); ++k) {
        detail::require(k == 0 || eps[k] < eps[k - 1], "penalty path needs decreasing eps");
        path.push_back(penalty_solve(problem, eps[k], opts));
        opts.initial_guess = path.back().u;
    }
    return path;
}

/// Nodal slack (-L psi - f)^+ - lambda of the dual bound.
inline Vector lewy_stampacchia_margin(const ObstacleProblem& problem, const Vector& lambda) {
    return problem.g_plus_vec - lambda;
}

}  // namespace nlvi
