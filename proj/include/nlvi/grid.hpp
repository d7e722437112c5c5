#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "nlvi/errors.hpp"

namespace nlvi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Uniform P1 space on Omega = (a, b) embedded in the meshed interaction
/// collar [a - delta, b + delta]. Only hats of nodes strictly inside Omega
/// are free; everything else is pinned to zero by the volume constraint.
///
/// Global node indices run over the whole collar, 0 at a - delta; free node
/// p (0-based) is global node collar_cells() + 1 + p.
class FeSpace1D {
public:
    double a() const { return a_; }
    double b() const { return b_; }
    double h() const { return (b_ - a_) / static_cast<double>(cells_); }
    double delta() const { return static_cast<double>(collar_) * h(); }
    std::size_t cells() const { return cells_; }
    /// delta / h.
    std::size_t collar_cells() const { return collar_; }
    std::size_t total_cells() const { return cells_ + 2 * collar_; }
    std::size_t total_nodes() const { return total_cells() + 1; }
    std::size_t free_count() const { return cells_ - 1; }

    /// Coordinate of global node g.
    double node(std::size_t g) const {
        const double i = static_cast<double>(g) - static_cast<double>(collar_);
        return a_ + i * (b_ - a_) / static_cast<double>(cells_);
    }
    /// Coordinate of free node p.
    double free_node(std::size_t p) const {
        return a_ + static_cast<double>(p + 1) * (b_ - a_) / static_cast<double>(cells_);
    }
    std::vector<std::size_t> free_nodes() const {
        std::vector<std::size_t> idx(free_count());
        for (std::size_t p = 0; p < idx.size(); ++p) idx[p] = collar_ + 1 + p;
        return idx;
    }

    /// Hat function of free node p evaluated at x.
    double hat(std::size_t p, double x) const {
        const double t = std::abs(x - free_node(p)) / h();
        return t < 1.0 ? 1.0 - t : 0.0;
    }

    bool same_geometry(const FeSpace1D& other) const {
        return a_ == other.a_ && b_ == other.b_ &&
               std::abs(delta() - other.delta()) <= 1e-12 * delta();
    }

private:
    friend FeSpace1D build_space(double, double, std::size_t, double);

    double a_ = 0.0;
    double b_ = 1.0;
    std::size_t cells_ = 2;
    std::size_t collar_ = 1;
};

inline FeSpace1D build_space(double a, double b, std::size_t cells, double delta) {
    detail::require(b > a, "domain needs a < b");
    detail::require(cells >= 2, "mesh needs at least 2 cells");
    detail::require(delta > 0.0 && std::isfinite(delta), "delta must be positive and finite");
    const double h = (b - a) / static_cast<double>(cells);
    const double ratio = delta / h;
    const double k = std::round(ratio);
    if (k < 1.0 || std::abs(ratio - k) > 1e-12 * ratio) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "delta = " << delta << " is not an integer multiple of h = " << h
            << "; nearest admissible values are " << std::max(1.0, std::floor(ratio)) * h
            << " and " << std::max(1.0, std::ceil(ratio)) * h;
        throw ConfigurationError(msg.str());
    }
    FeSpace1D space;
    space.a_ = a;
    space.b_ = b;
    space.cells_ = cells;
    space.collar_ = static_cast<std::size_t>(k);
    return space;
}

/// Nodal interpolant over the free nodes.
template <class F>
Vector interpolate_nodal(const FeSpace1D& space, F&& fn) {
    Vector v(space.free_count());
    for (std::size_t p = 0; p < space.free_count(); ++p) {
        const double value = fn(space.free_node(p));
        if (!std::isfinite(value)) {
            std::ostringstream msg;
            msg << "non-finite function value at x = " << space.free_node(p);
            throw ConfigurationError(msg.str());
        }
        v[static_cast<Eigen::Index>(p)] = value;
    }
    return v;
}

/// Evaluates the P1 function with free-node values v at x (zero outside Omega).
inline double evaluate(const FeSpace1D& space, const Vector& v, double x) {
    if (x <= space.a() || x >= space.b()) return 0.0;
    const double t = (x - space.a()) / space.h();
    auto cell = static_cast<std::size_t>(std::floor(t));
    if (cell >= space.cells()) cell = space.cells() - 1;
    const double xi = t - static_cast<double>(cell);
    auto value_at = [&](std::size_t node) {
        return (node == 0 || node == space.cells()) ? 0.0 : v[static_cast<Eigen::Index>(node - 1)];
    };
    return (1.0 - xi) * value_at(cell) + xi * value_at(cell + 1);
}

/// Nodal values on `fine` of the P1 function given on the nested `coarse` space.
inline Vector prolong(const FeSpace1D& coarse, const FeSpace1D& fine, const Vector& v_coarse) {
    detail::require(coarse.same_geometry(fine), "prolongation needs the same domain and horizon");
    detail::require(fine.cells() % coarse.cells() == 0,
                    "prolongation needs nested meshes (fine cell count a multiple of coarse)");
    detail::require(static_cast<std::size_t>(v_coarse.size()) == coarse.free_count(),
                    "coarse vector size does not match the coarse space");
    const std::size_t factor = fine.cells() / coarse.cells();
    Vector v(fine.free_count());
    for (std::size_t j = 1; j < fine.cells(); ++j) {
        const std::size_t cell = j / factor;
        const std::size_t offset = j % factor;
        auto value_at = [&](std::size_t node) {
            return (node == 0 || node == coarse.cells()) ? 0.0
                                                         : v_coarse[static_cast<Eigen::Index>(node - 1)];
        };
        double value = value_at(cell);
        if (offset != 0) {
            const double t = static_cast<double>(offset) / static_cast<double>(factor);
            value = (1.0 - t) * value + t * value_at(cell + 1);
        }
        v[static_cast<Eigen::Index>(j - 1)] = value;
    }
    return v;
}

/// Local coefficients of the biorthogonal dual basis on a cell: the dual
/// function of a vertex is 2 * (own hat) - 1 * (other vertex hat), which gives
/// integral_K xi_q phi_p = delta_pq integral_K phi_p.
inline constexpr std::array<double, 2> dual_basis_stencil{2.0, -1.0};

/// Dual basis function of free node q at x (discontinuous across vertices
/// only at the support boundary).
inline double dual_basis(const FeSpace1D& space, std::size_t q, double x) {
    const double xq = space.free_node(q);
    const double t = (x - xq) / space.h();
    if (std::abs(t) >= 1.0) return 0.0;
    const double own = 1.0 - std::abs(t);
    return dual_basis_stencil[0] * own + dual_basis_stencil[1] * (1.0 - own);
}

}  // namespace nlvi
