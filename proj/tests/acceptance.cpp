// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "nlvi/nlvi.hpp"

using namespace nlvi;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;
    std::string violations;

    void expect(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            violations += " [violated: " + what + "]";
        }
    }
};

bool within(double value, double target, double tol) { return std::abs(value - target) <= tol; }
bool within_rel(double value, double target, double rel) { return std::abs(value - target) <= rel * std::abs(target); }

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

std::string fix(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

void print_rows(const ConvergenceReport& report) {
    for (const auto& row : report.rows)
        std::printf("      %s=%-10s energy %s rate %-6s  l2 %s rate %-6s\n", report.param_name.c_str(),
                    sci(row.param).c_str(), sci(row.energy).c_str(),
                    row.energy_rate ? fix(*row.energy_rate).c_str() : "-", sci(row.l2).c_str(),
                    row.l2_rate ? fix(*row.l2_rate).c_str() : "-");
}

// 1. Linear h-convergence, s = 0.5, delta = 0.5, sigma = 1, f = 1.
void table2(Outcome& out) {
    StudyConfig cfg;
    cfg.kind = StudyKind::MeshSize;
    cfg.delta = 0.5;
    cfg.level_lo = 3;
    cfg.level_hi = 7;
    cfg.ref_level = 11;
    const ConvergenceReport report = run_study(cfg).front();
    print_rows(report);
    const double energy[] = {9.27e-2, 6.59e-2, 4.66e-2, 3.27e-2, 2.24e-2};
    const double l2[] = {1.00e-2, 5.21e-3, 2.67e-3, 1.34e-3, 6.54e-4};
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const auto& row = report.rows[i];
        out.expect(within_rel(row.energy, energy[i], 0.20), "energy error within 20% at row " + std::to_string(i));
        out.expect(within_rel(row.l2, l2[i], 0.20), "L2 error within 20% at row " + std::to_string(i));
        if (i == 0) continue;
        out.expect(within(*row.energy_rate, 0.50, 0.10), "energy rate 0.50 +- 0.10 at row " + std::to_string(i));
        out.expect(within(*row.l2_rate, 1.00, 0.15), "L2 rate 1.00 +- 0.15 at row " + std::to_string(i));
    }
    out.detail << "energy " << sci(report.rows.front().energy) << " -> " << sci(report.rows.back().energy) << ", L2 "
               << sci(report.rows.front().l2) << " -> " << sci(report.rows.back().l2);
}

// 2. Order sweep at delta = 1, rates between h = 2^-6 and 2^-7, reference 2^-10.
void table3(Outcome& out) {
    StudyConfig cfg;
    cfg.kind = StudyKind::Order;
    cfg.delta = 1.0;
    cfg.s_values = {0.1, 0.25, 0.5, 0.75};
    cfg.level_lo = 6;
    cfg.level_hi = 7;
    cfg.ref_level = 10;
    const auto reports = run_study(cfg);
    const double l2_target[] = {0.66, 0.79, 0.98, 1.20};
    for (std::size_t k = 0; k < reports.size(); ++k) {
        const auto& row = reports[k].rows.back();
        out.expect(within(*row.energy_rate, 0.50, 0.10), "energy rate 0.50 +- 0.10 for s = " + fix(cfg.s_values[k]));
        out.expect(within(*row.l2_rate, l2_target[k], 0.15),
                   "L2 rate " + fix(l2_target[k]) + " +- 0.15 for s = " + fix(cfg.s_values[k]));
        out.detail << "s=" << cfg.s_values[k] << ": " << fix(*row.energy_rate) << "/" << fix(*row.l2_rate) << "  ";
    }
}

// 3. Horizon convergence to the fractional Laplacian, h = 2^-9.
void table1(Outcome& out) {
    StudyConfig cfg;
    cfg.kind = StudyKind::Horizon;
    cfg.sigma = SigmaMode::fractional_normalization();
    cfg.deltas = {8.0, 16.0, 32.0, 64.0};
    cfg.level = 9;
    const ConvergenceReport report = run_study(cfg).front();
    print_rows(report);
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
        out.expect(within(*report.rows[i].energy_rate, 1.00, 0.05), "energy rate 1.00 +- 0.05");
        out.expect(within(*report.rows[i].l2_rate, 1.00, 0.05), "L2 rate 1.00 +- 0.05");
    }
    out.expect(within_rel(report.rows.front().energy, 9.7e-3, 0.20),
               "first energy error " + sci(report.rows.front().energy) + " within 20% of 9.7e-3");
    out.detail << "rates " << fix(*report.rows[1].energy_rate) << ".." << fix(*report.rows.back().energy_rate)
               << " (energy), " << fix(*report.rows[1].l2_rate) << ".." << fix(*report.rows.back().l2_rate) << " (L2)";
}

// 4. A_inf = A_delta0 + C(delta0) M for delta0 in {1, 2}, N = 64.
void operator_identity(Outcome& out) {
    const KernelSpec frac =
        make_kernel(KernelCase::FractionalType, 0.5, infinite_horizon, SigmaMode::fractional_normalization());
    std::vector<Matrix> results;
    double worst = 0.0;
    for (double delta0 : {1.0, 2.0}) {
        const FeSpace1D sp = build_space(0.0, 1.0, 64, delta0);
        const KernelSpec truncated = frac.with_delta(delta0);
        // Infinite-horizon first row: the B-spline overlap is the constant 2B(m) beyond the horizon.
        ToeplitzRow row = assemble_stiffness_toeplitz(sp, truncated);
        const double tail = radial_moment(frac, 0, delta0, infinite_horizon);
        for (std::size_t m = 0; m < 2; ++m) row.values[m] += 2.0 * sp.h() * 2.0 * detail::cubic_bspline(double(m)) * tail;
        const Matrix A_inf = row.to_dense();
        const Matrix identity = assemble_stiffness(sp, truncated) + truncation_constant(truncated) * assemble_mass(sp);
        const double scale = A_inf.cwiseAbs().maxCoeff();
        const double residual = (A_inf - identity).cwiseAbs().maxCoeff() / scale;
        worst = std::max(worst, residual);
        out.expect(residual <= 1e-8, "identity residual " + sci(residual) + " for delta0 = " + fix(delta0));
        results.push_back(identity);
    }
    const double agree = (results[0] - results[1]).cwiseAbs().maxCoeff() / results[0].cwiseAbs().maxCoeff();
    out.expect(agree <= 1e-8, "delta0 = 1 and 2 agree");
    out.detail << "max relative residual " << sci(worst) << ", delta0 agreement " << sci(agree);
}

// 5 and 6. VI h-convergence at s = 0.5, delta = 1, f = 0, smooth obstacle, plus KKT
// residuals of every VI solve, including the order sweep.
void table4(Outcome& out5, Outcome& out6) {
    StudyConfig cfg;
    cfg.kind = StudyKind::MeshSize;
    cfg.delta = 1.0;
    cfg.problem.kind = ProblemKind::Obstacle;
    cfg.problem.f = 0.0;
    cfg.problem.psi.kind = PsiSelector::Kind::Smooth;
    cfg.level_lo = 5;
    cfg.level_hi = 8;
    cfg.ref_level = 10;
    const ConvergenceReport report = run_study(cfg).front();
    print_rows(report);
    std::size_t max_iter = report.reference_iterations;
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const auto& row = report.rows[i];
        max_iter = std::max(max_iter, row.iterations);
        if (i == 0) continue;
        out5.expect(within(*row.energy_rate, 0.52, 0.10), "energy rate 0.52 +- 0.10 at row " + std::to_string(i));
        out5.expect(within(*row.l2_rate, 1.00, 0.20), "L2 rate 1.00 +- 0.20 at row " + std::to_string(i));
    }
    out5.expect(max_iter <= 25, "active set terminates in <= 25 iterations");
    out5.detail << "rates " << fix(*report.rows[1].energy_rate) << ".." << fix(*report.rows.back().energy_rate)
                << " (energy), " << fix(*report.rows[1].l2_rate) << ".." << fix(*report.rows.back().l2_rate)
                << " (L2), max iterations " << max_iter;

    std::vector<KktResiduals> all;
    all.push_back(*report.reference_kkt);
    for (const auto& row : report.rows) all.push_back(*row.kkt);
    StudyConfig sweep = cfg;
    sweep.kind = StudyKind::Order;
    sweep.s_values = {0.1, 0.25, 0.5, 0.75};
    for (const auto& r : run_study(sweep)) {
        all.push_back(*r.reference_kkt);
        for (const auto& row : r.rows) all.push_back(*row.kkt);
    }
    double worst = 0.0;
    for (const KktResiduals& k : all) {
        worst = std::max({worst, k.stationarity, -k.primal_feasibility, -k.dual_feasibility, k.complementarity});
        out6.expect(k.within(1e-10), "residuals <= 1e-10");
    }
    out6.detail << all.size() << " solves, worst residual " << sci(worst);
}

// 7. Penalty solutions against the active-set solution.
void penalty(Outcome& out) {
    const FeSpace1D sp = build_space(0.0, 1.0, 512, 1.0);
    const KernelSpec k = make_kernel(KernelCase::FractionalType, 0.5, 1.0, SigmaMode::constant(1.0));
    const ObstacleProblem p =
        make_obstacle_problem(assemble_stiffness_toeplitz(sp, k).to_dense(), assemble_dual_pairing(sp),
                              assemble_load(sp, [](double) { return 0.0; }), interpolate_nodal(sp, psi_smooth));
    const VIResult as = active_set_solve(p);
    const std::vector<double> eps{1e-2, 1e-3, 1e-4, 1e-5};
    const auto path = penalty_path(p, eps);
    double previous = INFINITY, worst_margin = INFINITY, gap = 0.0;
    for (std::size_t i = 0; i < path.size(); ++i) {
        const Vector e = path[i].u - as.u;
        gap = std::sqrt(e.dot(p.A * e));
        out.expect(gap <= previous, "energy gap nonincreasing at eps = " + sci(eps[i]));
        previous = gap;
        const double margin = lewy_stampacchia_margin(p, path[i].lambda).minCoeff();
        worst_margin = std::min(worst_margin, margin);
        out.expect(margin >= -1e-12, "dual bound margin >= -1e-12 at eps = " + sci(eps[i]));
        out.detail << "eps=" << sci(eps[i]) << " gap " << sci(gap) << "  ";
    }
    out.expect(gap <= 1e-3, "gap <= 1e-3 at eps = 1e-5");
    out.detail << "min margin " << sci(worst_margin);
}

// 8. Dense and first-row assembly agree; symmetry and bandwidth.
void toeplitz(Outcome& out) {
    double worst = 0.0;
    for (double s : {0.25, 0.75})
        for (double delta : {0.25, 1.0}) {
            const FeSpace1D sp = build_space(0.0, 1.0, 32, delta);
            const KernelSpec k = make_kernel(KernelCase::FractionalType, s, delta, SigmaMode::constant(1.0));
            const Matrix dense = assemble_stiffness(sp, k);
            const Matrix first_row = assemble_stiffness_toeplitz(sp, k).to_dense();
            const double diff = (dense - first_row).cwiseAbs().maxCoeff();
            worst = std::max(worst, diff);
            out.expect(diff <= 1e-12, "max-norm difference " + sci(diff) + " for s = " + fix(s) + ", delta = " + fix(delta));
            for (const Matrix* A : {&dense, &first_row}) {
                out.expect((*A - A->transpose()).cwiseAbs().maxCoeff() == 0.0, "symmetry");
                const auto band = static_cast<Eigen::Index>(sp.collar_cells() + 1);
                bool banded = true;
                for (Eigen::Index i = 0; i < A->rows(); ++i)
                    for (Eigen::Index j = 0; j < A->cols(); ++j)
                        if (std::abs(i - j) > band && (*A)(i, j) != 0.0) banded = false;
                out.expect(banded, "bandwidth delta/h + 1");
            }
        }
    out.detail << "max difference " << sci(worst);
}

// 9. Local limit: L2 distance to the local obstacle solution decreases with delta.
void local_limit(Outcome& out) {
    const std::size_t N = 512;
    const auto f = [](double) { return -1.0; };
    const FeSpace1D local_space = build_space(0.0, 1.0, N, 1.0 / double(N));
    ActiveSetOptions local_opts;
    local_opts.max_iter = N;
    const auto local_problem = [&](double coefficient) {
        return make_obstacle_problem(coefficient * local_stiffness(local_space), assemble_dual_pairing(local_space),
                                     assemble_load(local_space, f), interpolate_nodal(local_space, psi_smooth));
    };
    const Vector u_local = active_set_solve(local_problem(1.0), local_opts).u;
    const Vector u_local2 = active_set_solve(local_problem(2.0), local_opts).u;
    const Matrix M = assemble_mass(local_space);
    double previous = INFINITY;
    std::ostringstream info;
    for (double delta : {0.25, 0.125, 0.0625}) {
        const FeSpace1D sp = build_space(0.0, 1.0, N, delta);
        const KernelSpec k = make_kernel(KernelCase::FractionalType, 0.5, delta, SigmaMode::local_scaling());
        const ObstacleProblem p =
            make_obstacle_problem(assemble_stiffness_toeplitz(sp, k).to_dense(), assemble_dual_pairing(sp),
                                  assemble_load(sp, f), interpolate_nodal(sp, psi_smooth));
        const Vector u = active_set_solve(p).u;
        const Vector e = u - u_local, e2 = u - u_local2;
        const double err = std::sqrt(e.dot(M * e));
        out.expect(err < previous, "strict decrease at delta = " + fix(delta));
        previous = err;
        out.detail << "delta=" << delta << " L2 " << sci(err) << "  ";
        info << "delta=" << delta << " " << sci(std::sqrt(e2.dot(M * e2))) << "  ";
    }
    std::printf("      distance to the -2u'' obstacle solution: %s\n", info.str().c_str());
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        std::string name;
        std::function<void(Outcome&)> run;
    };
    Outcome kkt;
    const std::vector<Criterion> criteria{
        {1, "mesh convergence, linear problem (s=0.5, delta=0.5, ref 2^-11)", table2},
        {2, "order sweep rates at h=2^-7 (delta=1, ref 2^-10)", table3},
        {3, "horizon convergence to the fractional Laplacian (h=2^-9)", table1},
        {4, "truncation identity, N=64, delta0 in {1,2}", operator_identity},
        {5, "mesh convergence, obstacle problem (s=0.5, delta=1, f=0, ref 2^-10)",
         [&](Outcome& o) { table4(o, kkt); }},
        {6, "KKT residuals of every obstacle solve", [&](Outcome& o) {
             o.pass = kkt.pass;
             o.detail << kkt.detail.str();
             o.violations = kkt.violations;
         }},
        {7, "penalty vs active set, eps 1e-2..1e-5", penalty},
        {8, "dense vs first-row assembly, N=32", toeplitz},
        {9, "local limit with local scaling (h=2^-9)", local_limit},
    };
    int failures = 0;
    for (const Criterion& c : criteria) {
        Outcome outcome;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.run(outcome);
        } catch (const std::exception& e) {
            outcome.pass = false;
            outcome.violations += std::string(" exception: ") + e.what();
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s  [%d] %s (%.1fs): %s%s\n", outcome.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), seconds,
                    outcome.detail.str().c_str(), outcome.violations.c_str());
        std::fflush(stdout);
        if (!outcome.pass) ++failures;
    }
    std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
