#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "nlvi/obstacle.hpp"

using namespace nlvi;

namespace {

ObstacleProblem build_problem(double s, double delta, std::size_t N, double f, double (*psi)(double),
                              SigmaMode sigma = SigmaMode::constant(1.0)) {
    const FeSpace1D sp = build_space(0.0, 1.0, N, delta);
    const KernelSpec k = make_kernel(KernelCase::FractionalType, s, delta, sigma);
    return make_obstacle_problem(assemble_stiffness_toeplitz(sp, k).to_dense(), assemble_dual_pairing(sp),
                                 assemble_load(sp, [f](double) { return f; }), interpolate_nodal(sp, psi));
}

double far_below(double) { return -1e6; }

double energy_norm(const ObstacleProblem& p, const Vector& e) { return std::sqrt(e.dot(p.A * e)); }

}  // namespace

TEST(ActiveSet, InactiveObstacleGivesTheLinearSolution) {
    const ObstacleProblem p = build_problem(0.5, 0.25, 32, 1.0, far_below);
    const VIResult r = active_set_solve(p);
    EXPECT_LE(r.iterations, 2u);
    EXPECT_TRUE(r.active_set.empty());
    EXPECT_EQ(r.lambda.norm(), 0.0);
    EXPECT_LE((r.u - solve_linear(p.A, p.f_vec).u).norm(), 1e-14);
    EXPECT_TRUE(r.kkt.within(1e-10));
}

TEST(ActiveSet, KktResidualsVanish) {
    struct Case {
        double s, delta, f;
        double (*psi)(double);
    };
    for (const Case& c : {Case{0.5, 1.0, 0.0, psi_smooth}, Case{0.25, 0.5, -1.0, psi_smooth},
                          Case{0.75, 1.0, 0.0, psi_kink}, Case{0.1, 0.25, -1.0, psi_kink}}) {
        const ObstacleProblem p = build_problem(c.s, c.delta, 64, c.f, c.psi);
        const VIResult r = active_set_solve(p);
        EXPECT_TRUE(r.kkt.within(1e-10)) << c.s << ' ' << r.kkt.stationarity << ' ' << r.kkt.complementarity;
        EXPECT_FALSE(r.active_set.empty());
        EXPECT_LE(r.iterations, 25u);
        for (std::size_t q : r.active_set) EXPECT_EQ(r.u[static_cast<Eigen::Index>(q)], p.psi_vec[static_cast<Eigen::Index>(q)]);
    }
}

TEST(ActiveSet, PeridynamicAndConstantKernels) {
    const FeSpace1D sp = build_space(0.0, 1.0, 64, 0.125);
    for (const KernelSpec& k :
         {make_kernel(KernelCase::Peridynamic, std::nullopt, 0.125, SigmaMode::constant(1.0)),
          make_kernel(KernelCase::ConstantIntegrable, std::nullopt, 0.125, SigmaMode::inverse_two_delta_sq())}) {
        const ObstacleProblem p =
            make_obstacle_problem(assemble_stiffness(sp, k), assemble_dual_pairing(sp),
                                  assemble_load(sp, [](double) { return -1.0; }), interpolate_nodal(sp, psi_smooth));
        EXPECT_TRUE(active_set_solve(p).kkt.within(1e-10)) << to_string(k.kernel_case());
    }
}

TEST(KktResiduals, PerturbationBreaksComplementarity) {
    const ObstacleProblem p = build_problem(0.5, 1.0, 64, 0.0, psi_smooth);
    const VIResult r = active_set_solve(p);
    ASSERT_FALSE(r.active_set.empty());
    const auto q = static_cast<Eigen::Index>(r.active_set[r.active_set.size() / 2]);
    Vector u = r.u;
    u[q] += 1e-3;
    const KktResiduals k = kkt_residuals(p, u, r.lambda);
    EXPECT_NEAR(k.complementarity, p.B[q] * r.lambda[q] * 1e-3, 1e-12);
    EXPECT_GT(k.complementarity, 1e-10);
    EXPECT_GT(k.stationarity, 1e-10);
}

TEST(KktResiduals, LinearSolutionUnderAFarObstacle) {
    const ObstacleProblem p = build_problem(0.5, 0.5, 32, 1.0, far_below);
    const KktResiduals k = kkt_residuals(p, solve_linear(p.A, p.f_vec).u, Vector::Zero(31));
    EXPECT_TRUE(k.within(1e-10));
}

TEST(ActiveSet, ReportsNonConvergence) {
    const ObstacleProblem p = build_problem(0.5, 1.0, 128, 0.0, psi_smooth);
    ActiveSetOptions opts;
    opts.max_iter = 1;
    try {
        active_set_solve(p, opts);
        FAIL() << "expected a numerical error";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("last active set sizes"), std::string::npos);
    }
    opts.c = 0.0;
    EXPECT_THROW(active_set_solve(p, opts), ConfigurationError);
}

TEST(ObstacleProblem, ValidatesDimensions) {
    EXPECT_THROW(make_obstacle_problem(Matrix::Identity(3, 3), Vector::Ones(2), Vector::Ones(3), Vector::Ones(3)),
                 ConfigurationError);
    EXPECT_THROW(make_obstacle_problem(Matrix::Identity(2, 2), Vector::Zero(2), Vector::Ones(2), Vector::Ones(2)),
                 ConfigurationError);
}

TEST(Penalty, FunctionShape) {
    EXPECT_EQ(penalty_function(-1.0, 0.1), 1.0);
    EXPECT_EQ(penalty_function(0.0, 0.1), 1.0);
    EXPECT_DOUBLE_EQ(penalty_function(0.05, 0.1), 0.5);
    EXPECT_EQ(penalty_function(0.1, 0.1), 0.0);
    EXPECT_EQ(penalty_function(2.0, 0.1), 0.0);
}

TEST(Penalty, ApproachesTheActiveSetSolution) {
    const ObstacleProblem p = build_problem(0.5, 1.0, 64, 0.0, psi_smooth);
    const VIResult as = active_set_solve(p);
    const auto path = penalty_path(p, {1e-2, 1e-3, 1e-4, 1e-5, 1e-6});
    double previous = INFINITY;
    for (const PenaltyResult& r : path) {
        const double gap = energy_norm(p, r.u - as.u);
        EXPECT_LE(gap, previous);
        previous = gap;
        EXPECT_GE(lewy_stampacchia_margin(p, r.lambda).minCoeff(), -1e-12);
        EXPECT_GE(r.lambda.minCoeff(), 0.0);
    }
    const Vector e = path.back().u - as.u;
    const FeSpace1D sp = build_space(0.0, 1.0, 64, 1.0);
    EXPECT_LE(std::sqrt(e.dot(assemble_mass(sp) * e)), 1e-4);
}

TEST(Penalty, Preconditions) {
    const ObstacleProblem p = build_problem(0.5, 0.5, 16, 0.0, psi_smooth);
    EXPECT_THROW(penalty_solve(p, 0.0), ConfigurationError);
    EXPECT_THROW(penalty_path(p, {1e-3, 1e-2}), ConfigurationError);
    PenaltyOptions opts;
    opts.initial_guess = Vector::Zero(3);
    EXPECT_THROW(penalty_solve(p, 1e-2, opts), ConfigurationError);
}

TEST(LewyStampacchia, ActiveSetMultiplierBelowTheBound) {
    for (double s : {0.25, 0.5, 0.75}) {
        const ObstacleProblem p = build_problem(s, 1.0, 128, 0.0, psi_smooth);
        const VIResult r = active_set_solve(p);
        const Vector margin = lewy_stampacchia_margin(p, r.lambda);
        EXPECT_GE(margin.minCoeff(), -1e-6 * p.g_plus_vec.maxCoeff()) << s;
    }
}

TEST(LewyStampacchia, FarObstacleHasZeroBound) {
    const ObstacleProblem p = build_problem(0.5, 0.25, 32, 1.0, far_below);
    const VIResult r = active_set_solve(p);
    const Vector margin = lewy_stampacchia_margin(p, r.lambda);
    EXPECT_EQ(margin.cwiseAbs().maxCoeff(), 0.0);
}
