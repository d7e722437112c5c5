#pragma once

// Finite element operators for the truncated nonlocal bilinear form
//
//   a(u, v) = int int (u(x) - u(y)) (v(x) - v(y)) gamma(|x - y|) dy dx
//
// on the P1 space of a FeSpace1D. Two independent routes compute the
// stiffness matrix:
//
//  * assemble_stiffness: element pairs of Omega x Omega plus the collar term
//    2 int_Omega u v w, w(x) = int_{Omega_delta} gamma(x, y) dy. The collar
//    weight w is a closed-form radial tail.
//  * assemble_stiffness_toeplitz: on a uniform grid a(phi_i, phi_j) depends
//    only on |i - j|; with z = x - y the double integral collapses to
//    2 int_0^delta g(z) (2R(mh) - R(mh + z) - R(mh - z)) dz, R being the
//    autocorrelation of a hat (h times the cubic B-spline).
//
// Both routes integrate in difference form. Pieces touching r = 0 use exact
// power moments of the kernel; all other pieces are smooth and use a
// 20-point Gauss rule, which is exact to rounding for these integrands.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nlvi/errors.hpp"
#include "nlvi/grid.hpp"
#include "nlvi/kernels.hpp"
#include "nlvi/quadrature.hpp"

namespace nlvi {

enum class SingularQuadrature {
    SemiAnalytic,  ///< exact power moments on pieces touching the singularity
    Graded         ///< geometric subdivision toward r = 0 plus Gauss
};

struct QuadOptions {
    SingularQuadrature singular = SingularQuadrature::SemiAnalytic;
    int gauss_order = 5;             ///< Gauss order on graded subcells
    double min_width = 1e-6;         ///< innermost graded subcell, in units of h
    int regular_order = 20;          ///< Gauss order on pieces away from r = 0
    double graded_tolerance = 1e-8;  ///< accepted change when the grading is refined
};

/// Symmetric Toeplitz matrix stored by its first row.
struct ToeplitzRow {
    std::vector<double> values;  ///< values[m] = A(i, i + m)
    std::size_t n = 0;

    double lag(std::size_t m) const { return m < values.size() ? values[m] : 0.0; }

    Matrix to_dense() const {
        Matrix A(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = lag(i > j ? i - j : j - i);
        return A;
    }

    Vector apply(const Vector& v) const {
        Vector out = Vector::Zero(static_cast<Eigen::Index>(n));
        const std::size_t band = std::min(values.size(), n);
        for (std::size_t i = 0; i < n; ++i) {
            double sum = values[0] * v[static_cast<Eigen::Index>(i)];
            for (std::size_t m = 1; m < band; ++m) {
                if (i + m < n) sum += values[m] * v[static_cast<Eigen::Index>(i + m)];
                if (i >= m) sum += values[m] * v[static_cast<Eigen::Index>(i - m)];
            }
            out[static_cast<Eigen::Index>(i)] = sum;
        }
        return out;
    }
};

enum class StiffnessStorage { Dense, Toeplitz };

struct AssemblyOptions {
    QuadOptions quad;
    StiffnessStorage storage = StiffnessStorage::Dense;
    /// Toeplitz storage is expanded to dense up to this many unknowns.
    std::size_t dense_limit = 6000;
};

/// Assembled operators over the free nodes of one space.
struct OperatorSet {
    Matrix A;                                ///< stiffness; empty if only Toeplitz is kept
    std::optional<ToeplitzRow> A_toeplitz;   ///< first row when assembled that way
    Matrix M;                                ///< P1 mass
    Vector B;                                ///< diagonal of the dual pairing
    std::string fingerprint;

    std::size_t size() const { return static_cast<std::size_t>(B.size()); }
    bool has_dense() const { return A.size() > 0; }

    Vector apply_stiffness(const Vector& v) const {
        if (has_dense()) return A * v;
        return A_toeplitz->apply(v);
    }
};

namespace detail {

/// Polynomial in one variable, coefficient k of t^k; degree <= 3 here.
struct Poly {
    std::array<double, 4> c{};

    double operator()(double t) const { return ((c[3] * t + c[2]) * t + c[1]) * t + c[0]; }

    static Poly linear(double c0, double c1) {
        Poly p;
        p.c[0] = c0;
        p.c[1] = c1;
        return p;
    }
    friend Poly operator+(Poly a, const Poly& b) {
        for (std::size_t k = 0; k < 4; ++k) a.c[k] += b.c[k];
        return a;
    }
    friend Poly operator-(Poly a, const Poly& b) {
        for (std::size_t k = 0; k < 4; ++k) a.c[k] -= b.c[k];
        return a;
    }
    friend Poly operator*(double s, Poly a) {
        for (auto& v : a.c) v *= s;
        return a;
    }
    friend Poly operator*(const Poly& a, const Poly& b) {
        Poly p;
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) {
                if (a.c[i] == 0.0 || b.c[j] == 0.0) continue;
                if (i + j > 3) throw std::logic_error("polynomial degree exceeds 3");
                p.c[i + j] += a.c[i] * b.c[j];
            }
        return p;
    }
    /// q(t) = p(alpha * t + beta).
    Poly compose_linear(double alpha, double beta) const {
        const Poly lin = linear(beta, alpha);
        Poly out;
        Poly power = linear(1.0, 0.0);
        for (std::size_t k = 0; k < 4; ++k) {
            out = out + c[k] * power;
            if (k < 3) power = power * lin;
        }
        return out;
    }
};

/// (hi^k - lo^k) / k for linear hi, lo.
inline Poly power_difference(const Poly& hi, const Poly& lo, int k) {
    Poly ph = Poly::linear(1.0, 0.0), pl = Poly::linear(1.0, 0.0);
    for (int i = 0; i < k; ++i) {
        ph = ph * hi;
        pl = pl * lo;
    }
    return (1.0 / k) * (ph - pl);
}

/// Zeroes round-off remnants of coefficients that vanish analytically. The
/// difference-form integrands on pieces touching r = 0 vanish to second
/// order there; the exact coefficients are O(1) rationals.
inline Poly drop_roundoff(Poly p) {
    double scale = 0.0;
    for (double v : p.c) scale = std::max(scale, std::abs(v));
    for (double& v : p.c)
        if (std::abs(v) <= 1e-13 * scale) v = 0.0;
    return p;
}

/// Integral over rho in [0, 1] of g(h rho) * p(rho), exactly, for p vanishing
/// fast enough at 0 that the product is integrable.
inline double singular_piece_exact(const KernelSpec& kernel, double h, const Poly& p) {
    double sum = 0.0;
    for (int k = 0; k < 4; ++k) {
        const double ck = p.c[static_cast<std::size_t>(k)];
        if (ck == 0.0) continue;
        if (k + kernel.exponent() + 1.0 <= 0.0)
            throw std::logic_error("non-integrable monomial with nonzero coefficient");
        sum += ck * radial_moment(kernel, k, 0.0, h) / std::pow(h, k + 1);
    }
    return sum;
}

/// Same integral by geometric grading; throws if refining the grading moves
/// the value by more than the tolerance.
template <class F>
double singular_piece_graded(const KernelSpec& kernel, double h, F&& p, const QuadOptions& opts,
                             const std::string& where) {
    auto integrand = [&](double rho) { return kernel.sigma() * std::pow(h * rho, kernel.exponent()) * p(rho); };
    const GaussRule& rule = gauss_rule(opts.gauss_order);
    // Integrand ~ rho^{2 + p}: shrink the innermost cell until its share is negligible.
    const double e = 3.0 + kernel.exponent();
    double width = opts.min_width;
    if (e > 0.0) width = std::min(width, std::pow(1e-16, 1.0 / e));
    const double fine = graded_integral(integrand, 1.0, rule, width);
    const double coarse = graded_integral(integrand, 1.0, rule, 2.0 * width);
    if (!(std::abs(fine - coarse) <= opts.graded_tolerance * std::abs(fine) + 1e-300) ||
        !std::isfinite(fine)) {
        std::ostringstream msg;
        msg << "graded quadrature did not settle for " << where << " (" << coarse << " vs " << fine << ")";
        throw NumericalError(msg.str());
    }
    return fine;
}

/// Integral over rho in [lo, lo + 1] (lo >= 1) of g(h rho) p(rho); smooth.
template <class F>
double regular_piece(const KernelSpec& kernel, double h, F&& p, double lo, const QuadOptions& opts) {
    const GaussRule& rule = gauss_rule(opts.regular_order);
    return rule.integrate([&](double rho) { return kernel.sigma() * std::pow(h * rho, kernel.exponent()) * p(rho); },
                          lo, lo + 1.0);
}

inline void check_kernel_for_assembly(const FeSpace1D& space, const KernelSpec& kernel) {
    require(kernel.dimension() == 1, "finite element assembly supports n = 1 only");
    require(kernel.finite_horizon(), "assembly needs a finite horizon");
    require(std::abs(kernel.delta() - space.delta()) <= 1e-12 * space.delta(),
            "kernel horizon and mesh horizon differ");
}

/// Vertex offsets of the element pair (K_k, K_{k+d}) relative to vertex k,
/// duplicates merged.
inline std::vector<std::size_t> pair_vertex_offsets(std::size_t d) {
    if (d == 0) return {0, 1};
    if (d == 1) return {0, 1, 2};
    return {0, 1, d, d + 1};
}

struct PairMatrix {
    std::vector<std::size_t> offsets;
    Matrix values;
};

inline PairMatrix element_pair_matrix(const KernelSpec& kernel, double h, std::size_t d, std::size_t K,
                                      const QuadOptions& opts) {
    const std::vector<std::size_t> offsets = pair_vertex_offsets(d);
    const std::size_t nloc = offsets.size();

    // D_o(xi, tau) = phi_o(x) - phi_o(y), x in cell 0, y in cell d, eta = xi + tau.
    // Stored as A0(tau) + A1 * xi.
    struct Diff {
        Poly a0;
        double a1;
    };
    std::vector<Diff> diffs;
    for (std::size_t o : offsets) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;  // alpha + beta xi + gamma eta
        if (o == 0) alpha += 1.0, beta -= 1.0;
        if (o == 1) beta += 1.0;
        if (o == d) alpha -= 1.0, gamma += 1.0;
        if (o == d + 1) gamma -= 1.0;
        diffs.push_back({Poly::linear(alpha, gamma), beta + gamma});
    }

    PairMatrix result{offsets, Matrix::Zero(static_cast<Eigen::Index>(nloc), static_cast<Eigen::Index>(nloc))};
    // tau in [-1, 0]: xi in [-tau, 1]; tau in [0, 1]: xi in [0, 1 - tau].
    struct Half {
        Poly lo, hi;
        double rho_lo;  // distance range in units of h: rho in [rho_lo, rho_lo + 1]
        bool lower;
    };
    std::vector<Half> halves;
    halves.push_back({Poly::linear(0.0, -1.0), Poly::linear(1.0, 0.0), static_cast<double>(d) - 1.0, true});
    halves.push_back({Poly::linear(0.0, 0.0), Poly::linear(1.0, -1.0), static_cast<double>(d), false});
    if (d == 0) halves[0].rho_lo = 0.0;  // rho = -tau

    for (const Half& half : halves) {
        if (half.rho_lo + 1.0 > static_cast<double>(K) + 1e-9) continue;  // beyond the horizon
        const Poly L1 = power_difference(half.hi, half.lo, 1);
        const Poly L2 = power_difference(half.hi, half.lo, 2);
        const Poly L3 = power_difference(half.hi, half.lo, 3);
        // Map tau to rho: lower half tau = rho - d (d >= 1) or tau = -rho (d = 0); upper tau = rho - d.
        const double alpha = (d == 0 && half.lower) ? -1.0 : 1.0;
        const double beta = (d == 0 && half.lower) ? 0.0 : -static_cast<double>(d);
        const bool singular = half.rho_lo == 0.0;
        for (std::size_t i = 0; i < nloc; ++i) {
            for (std::size_t j = i; j < nloc; ++j) {
                const Diff& u = diffs[i];
                const Diff& v = diffs[j];
                const Poly P = u.a0 * v.a0 * L1 + (u.a0 * (v.a1 * L2) + v.a0 * (u.a1 * L2)) +
                               (u.a1 * v.a1) * L3;
                const Poly Prho = drop_roundoff(P.compose_linear(alpha, beta));
                double value = 0.0;
                if (!singular) {
                    value = regular_piece(kernel, h, Prho, half.rho_lo, opts);
                } else if (opts.singular == SingularQuadrature::SemiAnalytic) {
                    value = singular_piece_exact(kernel, h, Prho);
                } else {
                    std::ostringstream where;
                    where << "element pair at offset " << d << ", local vertices (" << offsets[i] << ", "
                          << offsets[j] << ")";
                    value = singular_piece_graded(kernel, h, Prho, opts, where.str());
                }
                value *= h * h;
                result.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += value;
                if (i != j) result.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) += value;
            }
        }
    }
    return result;
}

/// Moments mu_m = int_0^1 t^m T(h (j + t)) dt, m = 0, 1, 2, of the collar
/// weight T(rho) = int_rho^delta g(r) dr on the cell at distance index j.
inline std::array<double, 3> collar_moments(const KernelSpec& kernel, double h, std::size_t j, std::size_t K,
                                            const QuadOptions& opts) {
    std::array<double, 3> mu{};
    if (j >= K) return mu;
    const double delta = kernel.delta();
    auto T = [&](double rho) { return rho >= delta ? 0.0 : radial_moment(kernel, 0, rho, delta); };
    if (j == 0) {
        // Only t^2 is needed here: the vertex at distance 0 is constrained, and
        // int_0 T diverges for s >= 1/2.
        mu[0] = mu[1] = std::numeric_limits<double>::quiet_NaN();
        if (opts.singular == SingularQuadrature::SemiAnalytic) {
            // int_0^h rho^2 T(rho) = int_0^h g r^3 / 3 + h^3 / 3 int_h^delta g.
            const double inner = radial_moment(kernel, 3, 0.0, h) / 3.0 +
                                 h * h * h / 3.0 * radial_moment(kernel, 0, h, delta);
            mu[2] = inner / (h * h * h);
        } else {
            const GaussRule& rule = gauss_rule(opts.gauss_order);
            const double e = 4.0 + kernel.exponent();  // t^2 T ~ t^{3 + p}
            double width = opts.min_width;
            if (e > 0.0) width = std::min(width, std::pow(1e-16, 1.0 / e));
            mu[2] = graded_integral([&](double t) { return t * t * T(h * t); }, 1.0, rule, width);
        }
        return mu;
    }
    const GaussRule& rule = gauss_rule(opts.regular_order);
    for (int m = 0; m < 3; ++m)
        mu[static_cast<std::size_t>(m)] =
            rule.integrate([&](double t) { return std::pow(t, m) * T(h * (static_cast<double>(j) + t)); }, 0.0, 1.0);
    return mu;
}

/// Cubic B-spline with support [-2, 2], integral 1.
inline double cubic_bspline(double u) {
    u = std::abs(u);
    if (u >= 2.0) return 0.0;
    if (u >= 1.0) {
        const double v = 2.0 - u;
        return v * v * v / 6.0;
    }
    return 2.0 / 3.0 - u * u + 0.5 * u * u * u;
}

}  // namespace detail

/// Dense stiffness matrix over the free nodes via element pairs of Omega and
/// the collar weight.
inline Matrix assemble_stiffness(const FeSpace1D& space, const KernelSpec& kernel, const QuadOptions& opts = {}) {
    detail::check_kernel_for_assembly(space, kernel);
    const double h = space.h();
    const std::size_t N = space.cells();
    const std::size_t K = space.collar_cells();
    const std::size_t n = space.free_count();
    Matrix A = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));

    // Omega node index i in [0, N] -> free index i - 1 when 1 <= i <= N - 1.
    auto add = [&](std::size_t gi, std::size_t gj, double value) {
        if (gi == 0 || gj == 0 || gi >= N || gj >= N) return;
        A(static_cast<Eigen::Index>(gi - 1), static_cast<Eigen::Index>(gj - 1)) += value;
    };

    // Interior pairs, fixed order: offset d, then cell k.
    for (std::size_t d = 0; d < N && d <= K; ++d) {
        const detail::PairMatrix local = detail::element_pair_matrix(kernel, h, d, K, opts);
        const double multiplicity = d == 0 ? 1.0 : 2.0;  // (K, L) and (L, K)
        for (std::size_t k = 0; k + d < N; ++k) {
            for (std::size_t i = 0; i < local.offsets.size(); ++i)
                for (std::size_t j = 0; j < local.offsets.size(); ++j)
                    add(k + local.offsets[i], k + local.offsets[j],
                        multiplicity * local.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
    }

    // Collar term 2 int_Omega phi_i phi_j w.
    for (std::size_t k = 0; k < N; ++k) {
        const auto left = detail::collar_moments(kernel, h, k, K, opts);          // t = xi
        const auto right = detail::collar_moments(kernel, h, N - 1 - k, K, opts);  // t = 1 - xi
        // int (1-t)^2 T, int t(1-t) T, int t^2 T
        auto products = [](const std::array<double, 3>& mu) {
            return std::array<double, 3>{mu[0] - 2.0 * mu[1] + mu[2], mu[1] - mu[2], mu[2]};
        };
        const auto pl = products(left);
        const auto pr = products(right);
        const double m00 = 2.0 * h * (pl[0] + pr[2]);
        const double m01 = 2.0 * h * (pl[1] + pr[1]);
        const double m11 = 2.0 * h * (pl[2] + pr[0]);
        add(k, k, m00);
        add(k, k + 1, m01);
        add(k + 1, k, m01);
        add(k + 1, k + 1, m11);
    }
    return A;
}

/// First row of the (Toeplitz) stiffness matrix, lags 0 .. min(n - 1, K + 1).
inline ToeplitzRow assemble_stiffness_toeplitz(const FeSpace1D& space, const KernelSpec& kernel,
                                               const QuadOptions& opts = {}) {
    detail::check_kernel_for_assembly(space, kernel);
    const double h = space.h();
    const std::size_t K = space.collar_cells();
    const std::size_t n = space.free_count();
    ToeplitzRow row;
    row.n = n;
    const std::size_t lags = std::min(n, K + 2);
    row.values.assign(lags, 0.0);

    // Exact cubic f_m(tau) = 2B(m) - B(m + tau) - B(m - tau) on tau in [0, 1].
    const std::array<detail::Poly, 3> first_piece{
        detail::Poly{{0.0, 0.0, 2.0, -1.0}},
        detail::Poly{{0.0, 0.0, -1.0, 2.0 / 3.0}},
        detail::Poly{{0.0, 0.0, 0.0, -1.0 / 6.0}},
    };

    for (std::size_t m = 0; m < lags; ++m) {
        const double md = static_cast<double>(m);
        auto f = [&](double tau) {
            return 2.0 * detail::cubic_bspline(md) - detail::cubic_bspline(md + tau) -
                   detail::cubic_bspline(md - tau);
        };
        double integral = 0.0;  // int_0^K g(h tau) f_m(tau) dtau
        const std::size_t first = m >= 2 ? m - 2 : 0;
        const std::size_t last = std::min(K, m + 2);
        for (std::size_t j = first; j < last; ++j) {
            if (j == 0) {
                if (opts.singular == SingularQuadrature::SemiAnalytic) {
                    integral += detail::singular_piece_exact(kernel, h, first_piece[m]);
                } else {
                    integral += detail::singular_piece_graded(kernel, h, first_piece[m], opts,
                                                              "Toeplitz lag " + std::to_string(m));
                }
            } else {
                integral += detail::regular_piece(kernel, h, f, static_cast<double>(j), opts);
            }
        }
        if (m <= 1 && K > m + 2) {
            // f_m is the constant 2B(m) beyond tau = m + 2.
            integral += 2.0 * detail::cubic_bspline(md) * radial_moment(kernel, 0, (md + 2.0) * h, kernel.delta()) / h;
        }
        row.values[m] = 2.0 * h * h * integral;
    }
    return row;
}

/// P1 mass matrix over the free nodes.
inline Matrix assemble_mass(const FeSpace1D& space) {
    const std::size_t N = space.cells();
    const double h = space.h();
    const std::size_t n = space.free_count();
    Matrix M = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    const double local[2][2] = {{h / 3.0, h / 6.0}, {h / 6.0, h / 3.0}};
    for (std::size_t k = 0; k < N; ++k)
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) {
                const std::size_t gi = k + i, gj = k + j;
                if (gi == 0 || gj == 0 || gi >= N || gj >= N) continue;
                M(static_cast<Eigen::Index>(gi - 1), static_cast<Eigen::Index>(gj - 1)) += local[i][j];
            }
    return M;
}

/// Diagonal of B(p, q) = int xi_q phi_p, assembled cellwise from the dual stencil.
inline Vector assemble_dual_pairing(const FeSpace1D& space) {
    const std::size_t N = space.cells();
    const double h = space.h();
    const double mass[2][2] = {{h / 3.0, h / 6.0}, {h / 6.0, h / 3.0}};
    Vector B = Vector::Zero(static_cast<Eigen::Index>(space.free_count()));
    for (std::size_t k = 0; k < N; ++k)
        for (std::size_t q = 0; q < 2; ++q)
            for (std::size_t p = 0; p < 2; ++p) {
                // xi_q = 2 phi_q - phi_{other}
                const double value = dual_basis_stencil[0] * mass[q][p] + dual_basis_stencil[1] * mass[1 - q][p];
                const std::size_t gp = k + p, gq = k + q;
                if (gp == 0 || gq == 0 || gp >= N || gq >= N) continue;
                if (p != q) {
                    if (std::abs(value) > 1e-15 * h) throw std::logic_error("dual basis is not biorthogonal");
                    continue;
                }
                B[static_cast<Eigen::Index>(gp - 1)] += value;
            }
    return B;
}

/// Load vector int_Omega f phi_p, 5-point Gauss per cell.
template <class F>
Vector assemble_load(const FeSpace1D& space, F&& f) {
    const std::size_t N = space.cells();
    const double h = space.h();
    const GaussRule& rule = gauss_rule(5);
    Vector b = Vector::Zero(static_cast<Eigen::Index>(space.free_count()));
    for (std::size_t k = 0; k < N; ++k) {
        const double x0 = space.a() + static_cast<double>(k) * (space.b() - space.a()) / static_cast<double>(N);
        double left = 0.0, right = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double xi = rule.nodes[q];
            const double value = f(x0 + h * xi);
            if (!std::isfinite(value)) {
                std::ostringstream msg;
                msg << "non-finite load value at x = " << x0 + h * xi;
                throw ConfigurationError(msg.str());
            }
            left += rule.weights[q] * value * (1.0 - xi);
            right += rule.weights[q] * value * xi;
        }
        if (k >= 1) b[static_cast<Eigen::Index>(k - 1)] += h * left;
        if (k + 1 < N) b[static_cast<Eigen::Index>(k)] += h * right;
    }
    return b;
}

inline std::string fingerprint(const FeSpace1D& space, const KernelSpec& kernel) {
    std::ostringstream os;
    os.precision(17);
    os << "kernel=" << to_string(kernel.kernel_case());
    if (kernel.s()) os << " s=" << *kernel.s();
    os << " delta=" << kernel.delta() << " sigma=" << kernel.sigma() << " (" << to_string(kernel.sigma_mode())
       << ") omega=(" << space.a() << "," << space.b() << ") N=" << space.cells();
    return os.str();
}

/// Stiffness, mass and dual pairing for one space and kernel.
inline OperatorSet assemble_operators(const FeSpace1D& space, const KernelSpec& kernel,
                                      const AssemblyOptions& opts = {}) {
    OperatorSet ops;
    if (opts.storage == StiffnessStorage::Toeplitz) {
        ops.A_toeplitz = assemble_stiffness_toeplitz(space, kernel, opts.quad);
        if (space.free_count() <= opts.dense_limit) ops.A = ops.A_toeplitz->to_dense();
    } else {
        ops.A = assemble_stiffness(space, kernel, opts.quad);
    }
    ops.M = assemble_mass(space);
    ops.B = assemble_dual_pairing(space);
    ops.fingerprint = fingerprint(space, kernel);
    return ops;
}

/// Stiffness of the infinite-horizon (fractional) operator on Omega from the
/// truncated one: A_inf = A_delta + C(delta) M, valid for delta >= diam(Omega).
inline Matrix infinite_horizon_matrix(const FeSpace1D& space, const KernelSpec& kernel_inf,
                                      const QuadOptions& opts = {}) {
    detail::require(kernel_inf.kernel_case() == KernelCase::FractionalType,
            "infinite-horizon operator needs a fractional kernel");
    detail::require(space.delta() >= (space.b() - space.a()) * (1.0 - 1e-12),
            "mesh horizon must be at least diam(Omega) for the truncation identity");
    const KernelSpec truncated = kernel_inf.with_delta(space.delta());
    const double C = truncation_constant(truncated);
    return assemble_stiffness(space, truncated, opts) + C * assemble_mass(space);
}

/// Lumped nodal values diag(B)^{-1} A v of the operator applied to v.
inline Vector nodal_operator_values(const Vector& B, const Matrix& A, const Vector& v) {
    return (A * v).cwiseQuotient(B);
}

}  // namespace nlvi
