#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <sstream>

#include <Eigen/Dense>

#include "nlvi/assembly.hpp"
#include "nlvi/errors.hpp"
#include "nlvi/grid.hpp"
#include "nlvi/kernels.hpp"

namespace nlvi {

struct LinearSolution {
    Vector u;
    double residual_norm = 0.0;
    bool factorization_ok = false;
};

inline constexpr double linear_residual_tolerance = 1e-10;

/// Cholesky solve with one step of iterative refinement.
inline LinearSolution solve_linear(const Matrix& A, const Vector& b) {
    detail::require(A.rows() == A.cols() && A.rows() == b.size(), "linear system dimensions do not match");
    LinearSolution sol;
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success)
        throw NumericalError("Cholesky factorization failed: stiffness matrix is not positive definite");
    sol.factorization_ok = true;
    sol.u = llt.solve(b);
    Vector r = b - A * sol.u;
    sol.u += llt.solve(r);
    r = b - A * sol.u;
    sol.residual_norm = r.norm();
    if (sol.residual_norm > linear_residual_tolerance * std::max(b.norm(), 1e-300) && b.norm() > 0.0) {
        std::ostringstream msg;
        msg << "linear solve residual " << sol.residual_norm << " exceeds tolerance (|b| = " << b.norm() << ")";
        throw NumericalError(msg.str());
    }
    return sol;
}

/// Unpreconditioned conjugate gradients for an SPD operator given by its action.
inline LinearSolution conjugate_gradient(const std::function<Vector(const Vector&)>& apply, const Vector& b,
                                         double rel_tol = 1e-12, std::size_t max_iter = 0) {
    if (max_iter == 0) max_iter = 10 * static_cast<std::size_t>(b.size()) + 100;
    LinearSolution sol;
    sol.u = Vector::Zero(b.size());
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        sol.factorization_ok = true;
        return sol;
    }
    Vector r = b;
    Vector p = r;
    double rr = r.squaredNorm();
    for (std::size_t it = 0; it < max_iter; ++it) {
        const Vector Ap = apply(p);
        const double pAp = p.dot(Ap);
        if (!(pAp > 0.0)) throw NumericalError("conjugate gradients met a non-positive curvature direction");
        const double alpha = rr / pAp;
        sol.u += alpha * p;
        r -= alpha * Ap;
        const double rr_new = r.squaredNorm();
        if (std::sqrt(rr_new) <= rel_tol * bnorm) break;
        p = r + (rr_new / rr) * p;
        rr = rr_new;
    }
    sol.residual_norm = (b - apply(sol.u)).norm();
    sol.factorization_ok = true;
    if (sol.residual_norm > linear_residual_tolerance * bnorm)
        throw NumericalError("conjugate gradients did not reach the residual tolerance");
    return sol;
}

/// Solves with whatever stiffness storage the operator set carries.
inline LinearSolution solve_linear(const OperatorSet& ops, const Vector& b) {
    if (ops.has_dense()) return solve_linear(ops.A, b);
    return conjugate_gradient([&](const Vector& v) { return ops.A_toeplitz->apply(v); }, b);
}

/// Standard P1 stiffness (1/h)(-1, 2, -1) of -u'' over the free nodes.
inline Matrix local_stiffness(const FeSpace1D& space) {
    const auto n = static_cast<Eigen::Index>(space.free_count());
    const double inv_h = 1.0 / space.h();
    Matrix A = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        A(i, i) = 2.0 * inv_h;
        if (i + 1 < n) A(i, i + 1) = A(i + 1, i) = -inv_h;
    }
    return A;
}

/// P1 solution of -u'' = f on Omega with zero boundary values.
template <class F>
Vector solve_local_reference(const FeSpace1D& space, F&& f) {
    return solve_linear(local_stiffness(space), assemble_load(space, f)).u;
}

/// Fractional Laplacian kernel c_{1,s} / (2 |x - y|^{1 + 2s}) with infinite horizon.
inline KernelSpec fractional_laplacian_kernel(double s) {
    return make_kernel(KernelCase::FractionalType, s, infinite_horizon, SigmaMode::fractional_normalization());
}

/// Discrete fractional Laplacian problem, assembled through the truncation
/// identity on a space whose horizon covers diam(Omega).
template <class F>
Vector solve_fractional(const FeSpace1D& space, double s, F&& f, const QuadOptions& opts = {}) {
    const Matrix A = infinite_horizon_matrix(space, fractional_laplacian_kernel(s), opts);
    return solve_linear(A, assemble_load(space, f)).u;
}

}  // namespace nlvi
