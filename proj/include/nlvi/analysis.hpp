#pragma once

// Error norms against fine-mesh surrogates and the convergence studies
// (mesh size, horizon, fractional order) built on them.

#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nlvi/assembly.hpp"
#include "nlvi/errors.hpp"
#include "nlvi/grid.hpp"
#include "nlvi/kernels.hpp"
#include "nlvi/linear.hpp"
#include "nlvi/obstacle.hpp"

namespace nlvi {

struct ErrorPair {
    double energy = 0.0;  ///< sqrt(e^T A e)
    double l2 = 0.0;      ///< sqrt(e^T M e)
};

inline ErrorPair error_norms(const Vector& e, const Matrix& A, const Matrix& M) {
    return {std::sqrt(std::max(0.0, e.dot(A * e))), std::sqrt(std::max(0.0, e.dot(M * e)))};
}

/// Norms of prolong(u_c) - u_f measured with operators of the fine space.
inline ErrorPair error_vs_reference(const FeSpace1D& space_c, const Vector& u_c, const FeSpace1D& space_f,
                                    const Vector& u_f, const Matrix& A_f, const Matrix& M_f) {
    const Vector e = prolong(space_c, space_f, u_c) - u_f;
    return error_norms(e, A_f, M_f);
}

/// rate_i = log2(e_i / e_{i+1}) for successive halvings of h (or doublings of delta).
inline std::vector<double> convergence_rates(const std::vector<double>& errors) {
    detail::require(errors.size() >= 2, "convergence rates need at least two errors");
    for (double e : errors)
        if (!(e > 0.0)) throw NumericalError("convergence rates need strictly positive errors");
    std::vector<double> rates;
    for (std::size_t i = 0; i + 1 < errors.size(); ++i) rates.push_back(std::log2(errors[i] / errors[i + 1]));
    return rates;
}

/// Obstacle selector: the two reference obstacles, a constant, or none.
struct PsiSelector {
    enum class Kind { None, Smooth, Kink, Constant };
    Kind kind = Kind::None;
    double value = 0.0;

    double operator()(double x) const {
        switch (kind) {
            case Kind::Smooth: return psi_smooth(x);
            case Kind::Kink: return psi_kink(x);
            case Kind::Constant: return value;
            case Kind::None: break;
        }
        return -std::numeric_limits<double>::infinity();
    }
    std::string name() const {
        switch (kind) {
            case Kind::Smooth: return "smooth";
            case Kind::Kink: return "kink";
            case Kind::Constant: {
                std::ostringstream os;
                os.precision(17);
                os << "const:" << value;
                return os.str();
            }
            case Kind::None: break;
        }
        return "none";
    }
};

enum class ProblemKind { Linear, Obstacle };

struct ProblemSpec {
    ProblemKind kind = ProblemKind::Linear;
    double f = 1.0;  ///< constant right-hand side
    PsiSelector psi;
    ActiveSetOptions active_set;
};

struct DiscreteSolution {
    Vector u;
    Vector lambda;
    std::optional<VIResult> vi;  ///< set for obstacle problems
};

/// Solves the linear or obstacle problem for a given stiffness matrix.
inline DiscreteSolution solve_problem(const FeSpace1D& space, const Matrix& A, const ProblemSpec& problem) {
    const double f = problem.f;
    Vector load = assemble_load(space, [f](double) { return f; });
    DiscreteSolution sol;
    if (problem.kind == ProblemKind::Linear || problem.psi.kind == PsiSelector::Kind::None) {
        sol.u = solve_linear(A, load).u;
        sol.lambda = Vector::Zero(sol.u.size());
        return sol;
    }
    ObstacleProblem ob = make_obstacle_problem(A, assemble_dual_pairing(space), std::move(load),
                                               interpolate_nodal(space, problem.psi));
    VIResult vi = active_set_solve(ob, problem.active_set);
    sol.u = vi.u;
    sol.lambda = vi.lambda;
    sol.vi = std::move(vi);
    return sol;
}

struct ReportRow {
    double param = 0.0;
    double energy = 0.0;
    std::optional<double> energy_rate;
    double l2 = 0.0;
    std::optional<double> l2_rate;
    std::optional<KktResiduals> kkt;  ///< obstacle problems only
    std::size_t iterations = 0;       ///< active-set iterations, obstacle problems only
};

struct ConvergenceReport {
    std::string param_name;  ///< "h" or "delta"
    std::optional<double> s; ///< set for the rows of an order sweep
    std::vector<ReportRow> rows;
    std::string settings;
    std::optional<KktResiduals> reference_kkt;
    std::size_t reference_iterations = 0;
};

enum class StudyKind { MeshSize, Horizon, Order };

struct StudyConfig {
    StudyKind kind = StudyKind::MeshSize;
    ProblemSpec problem;
    KernelCase kernel_case = KernelCase::FractionalType;
    double s = 0.5;
    std::vector<double> s_values;  ///< order sweep
    double delta = 0.5;
    SigmaMode sigma = SigmaMode::constant(1.0);
    int level_lo = 3;  ///< h = 2^{-level}
    int level_hi = 7;
    int ref_level = 11;
    std::vector<double> deltas;  ///< horizon study, increasing by factors of 2
    int level = 9;               ///< fixed mesh of the horizon study
    QuadOptions quad;
};

namespace detail {

inline std::optional<double> order_of(const StudyConfig& cfg, double s) {
    if (cfg.kernel_case == KernelCase::FractionalType) return s;
    return std::nullopt;
}

inline void fill_rates(ConvergenceReport& report) {
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
        const auto& prev = report.rows[i - 1];
        auto& row = report.rows[i];
        if (prev.energy > 0.0 && row.energy > 0.0) row.energy_rate = std::log2(prev.energy / row.energy);
        if (prev.l2 > 0.0 && row.l2 > 0.0) row.l2_rate = std::log2(prev.l2 / row.l2);
    }
}

inline std::string settings_string(const StudyConfig& cfg, std::optional<double> s) {
    std::ostringstream os;
    os.precision(17);
    os << "kernel=" << to_string(cfg.kernel_case);
    if (s) os << " s=" << *s;
    os << " sigma=" << to_string(cfg.sigma)
       << " problem=" << (cfg.problem.kind == ProblemKind::Linear ? "linear" : "obstacle") << " f=" << cfg.problem.f
       << " psi=" << cfg.problem.psi.name();
    if (cfg.kind == StudyKind::Horizon)
        os << " level=" << cfg.level;
    else
        os << " delta=" << cfg.delta << " ref_level=" << cfg.ref_level;
    return os.str();
}

inline ConvergenceReport mesh_study(const StudyConfig& cfg, double s) {
    detail::require(cfg.level_lo >= 1 && cfg.level_hi >= cfg.level_lo && cfg.ref_level > cfg.level_hi,
                    "mesh study needs 1 <= level_lo <= level_hi < ref_level");
    const KernelSpec kernel = make_kernel(cfg.kernel_case, order_of(cfg, s), cfg.delta, cfg.sigma);
    const FeSpace1D fine = build_space(0.0, 1.0, std::size_t{1} << cfg.ref_level, cfg.delta);
    AssemblyOptions fine_opts;
    fine_opts.quad = cfg.quad;
    fine_opts.storage = StiffnessStorage::Toeplitz;
    const OperatorSet fine_ops = assemble_operators(fine, kernel, fine_opts);
    detail::require(fine_ops.has_dense(), "reference level too fine for dense storage");
    const DiscreteSolution reference = solve_problem(fine, fine_ops.A, cfg.problem);

    ConvergenceReport report;
    report.param_name = "h";
    report.s = order_of(cfg, s);
    report.settings = settings_string(cfg, order_of(cfg, s));
    if (reference.vi) {
        report.reference_kkt = reference.vi->kkt;
        report.reference_iterations = reference.vi->iterations;
    }
    for (int level = cfg.level_lo; level <= cfg.level_hi; ++level) {
        const FeSpace1D coarse = build_space(0.0, 1.0, std::size_t{1} << level, cfg.delta);
        const Matrix A = assemble_stiffness(coarse, kernel, cfg.quad);
        const DiscreteSolution sol = solve_problem(coarse, A, cfg.problem);
        const ErrorPair err = error_vs_reference(coarse, sol.u, fine, reference.u, fine_ops.A, fine_ops.M);
        ReportRow row;
        row.param = coarse.h();
        row.energy = err.energy;
        row.l2 = err.l2;
        if (sol.vi) {
            row.kkt = sol.vi->kkt;
            row.iterations = sol.vi->iterations;
        }
        report.rows.push_back(row);
    }
    fill_rates(report);
    return report;
}

/// Truncated solutions for growing delta against the infinite-horizon
/// surrogate on the same mesh. Errors use the infinite-horizon energy norm.
inline ConvergenceReport horizon_study(const StudyConfig& cfg) {
    detail::require(cfg.kernel_case == KernelCase::FractionalType, "horizon study needs a fractional kernel");
    detail::require(cfg.deltas.size() >= 2, "horizon study needs at least two horizons");
    const std::size_t N = std::size_t{1} << cfg.level;
    const FeSpace1D base = build_space(0.0, 1.0, N, 1.0);
    const KernelSpec kernel_inf = make_kernel(KernelCase::FractionalType, cfg.s, infinite_horizon, cfg.sigma);
    const Matrix A_inf = infinite_horizon_matrix(base, kernel_inf, cfg.quad);
    const Matrix M = assemble_mass(base);
    const DiscreteSolution surrogate = solve_problem(base, A_inf, cfg.problem);

    ConvergenceReport report;
    report.param_name = "delta";
    report.s = cfg.s;
    report.settings = settings_string(cfg, cfg.s);
    if (surrogate.vi) {
        report.reference_kkt = surrogate.vi->kkt;
        report.reference_iterations = surrogate.vi->iterations;
    }
    for (double delta : cfg.deltas) {
        const FeSpace1D space = build_space(0.0, 1.0, N, delta);
        const KernelSpec kernel = kernel_inf.with_delta(delta);
        const Matrix A = assemble_stiffness_toeplitz(space, kernel, cfg.quad).to_dense();
        const DiscreteSolution sol = solve_problem(space, A, cfg.problem);
        const ErrorPair err = error_norms(sol.u - surrogate.u, A_inf, M);
        ReportRow row;
        row.param = delta;
        row.energy = err.energy;
        row.l2 = err.l2;
        if (sol.vi) {
            row.kkt = sol.vi->kkt;
            row.iterations = sol.vi->iterations;
        }
        report.rows.push_back(row);
    }
    fill_rates(report);
    return report;
}

}  // namespace detail

/// Runs a study; an order sweep yields one report per s, the others one report.
inline std::vector<ConvergenceReport> run_study(const StudyConfig& cfg) {
    switch (cfg.kind) {
        case StudyKind::MeshSize:
            return {detail::mesh_study(cfg, cfg.s)};
        case StudyKind::Horizon:
            return {detail::horizon_study(cfg)};
        case StudyKind::Order: {
            detail::require(!cfg.s_values.empty(), "order sweep needs s values");
            std::vector<ConvergenceReport> reports;
            for (double s : cfg.s_values) reports.push_back(detail::mesh_study(cfg, s));
            return reports;
        }
    }
    return {};
}

}  // namespace nlvi
