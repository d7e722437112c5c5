#pragma once

// Command-line front end. Every subcommand writes one CSV table.
//
//   solve          x,u            (linear)   or  x,u,lambda  (obstacle)
//   study-h        h,energy_error,energy_rate,l2_error,l2_rate
//   study-delta    delta,energy_error,...
//   study-s        s,h,energy_error,...
//   compare-local  x,u_local[,lambda_local],u_delta_<d>[,lambda_delta_<d>],...
//
// Exit status: 0 success, 1 numerical failure, 2 usage error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nlvi/analysis.hpp"
#include "nlvi/assembly.hpp"
#include "nlvi/errors.hpp"
#include "nlvi/grid.hpp"
#include "nlvi/kernels.hpp"
#include "nlvi/linear.hpp"
#include "nlvi/obstacle.hpp"

namespace nlvi::cli {

struct RunConfig {
    std::string subcommand;
    std::string kernel = "fractional";
    double s = 0.5;
    std::string delta = "0.5";
    std::optional<std::string> sigma;  ///< default depends on the subcommand
    std::string problem = "linear";
    double f = 1.0;
    std::string psi = "none";
    std::string method = "active-set";
    double epsilon = 1e-4;
    std::size_t cells = 64;
    std::string levels = "3:7";
    int ref_level = 11;
    std::string deltas;
    int level = 9;
    std::string s_values = "0.1,0.25,0.5,0.75";
    double local_coefficient = 1.0;
    std::string out;
};

/// 17 significant digits, '.' separator.
inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

using nlvi::detail::require;

inline double parse_double(const std::string& text, const std::string& what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    require(used == text.size() && used > 0, "cannot parse " + what + " '" + text + "'");
    return v;
}

inline std::vector<double> parse_list(const std::string& text, const std::string& what) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) values.push_back(parse_double(item, what));
    require(!values.empty(), what + " list is empty");
    return values;
}

inline KernelCase parse_kernel(const std::string& text) {
    if (text == "fractional") return KernelCase::FractionalType;
    if (text == "constant") return KernelCase::ConstantIntegrable;
    if (text == "peridynamic") return KernelCase::Peridynamic;
    throw ConfigurationError("unknown kernel '" + text + "' (fractional|constant|peridynamic)");
}

inline SigmaMode parse_sigma(const std::string& text) {
    if (text == "fractional") return SigmaMode::fractional_normalization();
    if (text == "local") return SigmaMode::local_scaling();
    if (text == "inv2delta2") return SigmaMode::inverse_two_delta_sq();
    if (text.rfind("constant:", 0) == 0) return SigmaMode::constant(parse_double(text.substr(9), "sigma"));
    throw ConfigurationError("unknown sigma '" + text + "' (constant:v|fractional|local|inv2delta2)");
}

inline PsiSelector parse_psi(const std::string& text) {
    PsiSelector psi;
    if (text == "none") return psi;
    if (text == "smooth") {
        psi.kind = PsiSelector::Kind::Smooth;
    } else if (text == "kink") {
        psi.kind = PsiSelector::Kind::Kink;
    } else if (text.rfind("const:", 0) == 0) {
        psi.kind = PsiSelector::Kind::Constant;
        psi.value = parse_double(text.substr(6), "obstacle constant");
    } else {
        throw ConfigurationError("unknown obstacle '" + text + "' (smooth|kink|const:v|none)");
    }
    return psi;
}

inline double parse_delta(const std::string& text) {
    if (text == "inf" || text == "infinity") return infinite_horizon;
    return parse_double(text, "delta");
}

inline std::pair<int, int> parse_levels(const std::string& text) {
    const auto colon = text.find(':');
    require(colon != std::string::npos, "levels must look like lo:hi");
    const double lo = parse_double(text.substr(0, colon), "level");
    const double hi = parse_double(text.substr(colon + 1), "level");
    require(lo == std::floor(lo) && hi == std::floor(hi) && lo >= 1 && hi >= lo && hi <= 20,
            "levels must be integers with 1 <= lo <= hi <= 20");
    return {static_cast<int>(lo), static_cast<int>(hi)};
}

inline ProblemSpec parse_problem(const RunConfig& cfg) {
    ProblemSpec problem;
    problem.f = cfg.f;
    problem.psi = parse_psi(cfg.psi);
    if (cfg.problem == "linear") {
        problem.kind = ProblemKind::Linear;
        require(problem.psi.kind == PsiSelector::Kind::None, "linear problems take no obstacle (use --psi none)");
    } else if (cfg.problem == "obstacle") {
        problem.kind = ProblemKind::Obstacle;
        require(problem.psi.kind != PsiSelector::Kind::None, "obstacle problems need --psi");
    } else {
        throw ConfigurationError("unknown problem '" + cfg.problem + "' (linear|obstacle)");
    }
    return problem;
}

inline SigmaMode sigma_or(const RunConfig& cfg, SigmaMode fallback) {
    return cfg.sigma ? parse_sigma(*cfg.sigma) : fallback;
}

/// Stiffness over the free nodes; an infinite horizon goes through the
/// truncation identity with delta = diam(Omega).
struct Discretization {
    FeSpace1D space;
    Matrix A;
};

inline Discretization discretize(KernelCase kc, std::optional<double> s, double delta, SigmaMode sigma,
                                 std::size_t cells) {
    const KernelSpec kernel = make_kernel(kc, s, delta, sigma);
    if (!kernel.finite_horizon()) {
        FeSpace1D space = build_space(0.0, 1.0, cells, 1.0);
        return {space, infinite_horizon_matrix(space, kernel)};
    }
    FeSpace1D space = build_space(0.0, 1.0, cells, delta);
    AssemblyOptions opts;
    opts.storage = StiffnessStorage::Toeplitz;
    OperatorSet ops = assemble_operators(space, kernel, opts);
    require(ops.has_dense(), "too many cells for a dense solve");
    return {space, std::move(ops.A)};
}

struct Solved {
    Vector u;
    std::optional<Vector> lambda;
};

inline Solved solve_on(const FeSpace1D& space, const Matrix& A, const ProblemSpec& problem, const RunConfig& cfg,
                       std::size_t max_active_set_iter = 50) {
    Vector load = assemble_load(space, [f = problem.f](double) { return f; });
    if (problem.kind == ProblemKind::Linear) return {solve_linear(A, load).u, std::nullopt};
    const ObstacleProblem ob =
        make_obstacle_problem(A, assemble_dual_pairing(space), std::move(load), interpolate_nodal(space, problem.psi));
    if (cfg.method == "active-set") {
        ActiveSetOptions opts;
        opts.max_iter = max_active_set_iter;
        VIResult r = active_set_solve(ob, opts);
        return {r.u, r.lambda};
    }
    require(cfg.method == "penalty", "unknown method '" + cfg.method + "' (active-set|penalty)");
    require(cfg.epsilon > 0.0, "penalty parameter epsilon must be positive");
    std::vector<double> eps;
    for (double e = 1e-1; e > cfg.epsilon * (1.0 + 1e-12); e *= 0.1) eps.push_back(e);
    eps.push_back(cfg.epsilon);
    const auto path = penalty_path(ob, eps);
    return {path.back().u, path.back().lambda};
}

/// Nodal value on the closure of Omega; boundary rows are zero.
inline double closure_value(const Vector& v, std::size_t i, std::size_t N) {
    return (i == 0 || i == N) ? 0.0 : v[static_cast<Eigen::Index>(i - 1)];
}

inline void write_solution(std::ostream& os, const FeSpace1D& space, const Solved& sol) {
    os << (sol.lambda ? "x,u,lambda\n" : "x,u\n");
    const std::size_t N = space.cells();
    for (std::size_t i = 0; i <= N; ++i) {
        const double x = space.a() + static_cast<double>(i) * (space.b() - space.a()) / static_cast<double>(N);
        os << format_number(x) << ',' << format_number(closure_value(sol.u, i, N));
        if (sol.lambda) os << ',' << format_number(closure_value(*sol.lambda, i, N));
        os << '\n';
    }
}

inline std::string optional_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

inline void write_reports(std::ostream& os, const std::vector<ConvergenceReport>& reports, bool with_s) {
    require(!reports.empty(), "study produced no report");
    if (with_s) os << "s,";
    os << reports.front().param_name << ",energy_error,energy_rate,l2_error,l2_rate\n";
    for (const auto& report : reports)
        for (const auto& row : report.rows) {
            if (with_s) os << optional_number(report.s) << ',';
            os << format_number(row.param) << ',' << format_number(row.energy) << ','
               << optional_number(row.energy_rate) << ',' << format_number(row.l2) << ','
               << optional_number(row.l2_rate) << '\n';
        }
}

inline StudyConfig study_base(const RunConfig& cfg) {
    StudyConfig sc;
    sc.problem = parse_problem(cfg);
    sc.kernel_case = parse_kernel(cfg.kernel);
    sc.s = cfg.s;
    return sc;
}

inline void run_solve(const RunConfig& cfg, std::ostream& os) {
    const KernelCase kc = parse_kernel(cfg.kernel);
    const ProblemSpec problem = parse_problem(cfg);
    const Discretization d =
        discretize(kc, cfg.s, parse_delta(cfg.delta), sigma_or(cfg, SigmaMode::constant(1.0)), cfg.cells);
    write_solution(os, d.space, solve_on(d.space, d.A, problem, cfg));
}

inline void run_study_h(const RunConfig& cfg, std::ostream& os, bool order_sweep) {
    StudyConfig sc = study_base(cfg);
    sc.kind = order_sweep ? StudyKind::Order : StudyKind::MeshSize;
    sc.delta = parse_delta(cfg.delta);
    require(std::isfinite(sc.delta), "mesh studies need a finite delta");
    sc.sigma = sigma_or(cfg, SigmaMode::constant(1.0));
    std::tie(sc.level_lo, sc.level_hi) = parse_levels(cfg.levels);
    sc.ref_level = cfg.ref_level;
    if (order_sweep) {
        require(sc.kernel_case == KernelCase::FractionalType, "order sweeps need the fractional kernel");
        sc.s_values = parse_list(cfg.s_values, "s");
        for (double s : sc.s_values) make_kernel(KernelCase::FractionalType, s, sc.delta, sc.sigma);
    } else {
        make_kernel(sc.kernel_case, sc.s, sc.delta, sc.sigma);
    }
    write_reports(os, run_study(sc), order_sweep);
}

inline void run_study_delta(const RunConfig& cfg, std::ostream& os) {
    StudyConfig sc = study_base(cfg);
    sc.kind = StudyKind::Horizon;
    sc.sigma = sigma_or(cfg, SigmaMode::fractional_normalization());
    sc.deltas = parse_list(cfg.deltas.empty() ? "8,16,32,64" : cfg.deltas, "delta");
    sc.level = cfg.level;
    require(cfg.level >= 1 && cfg.level <= 14, "level must lie in 1..14");
    make_kernel(sc.kernel_case, sc.s, infinite_horizon, sc.sigma);
    write_reports(os, run_study(sc), false);
}

inline void run_compare_local(const RunConfig& cfg, std::ostream& os) {
    const KernelCase kc = parse_kernel(cfg.kernel);
    const ProblemSpec problem = parse_problem(cfg);
    const SigmaMode sigma = sigma_or(cfg, SigmaMode::local_scaling());
    const std::vector<double> deltas = parse_list(cfg.deltas.empty() ? "0.25,0.125,0.0625" : cfg.deltas, "delta");
    require(cfg.local_coefficient > 0.0, "local coefficient must be positive");
    for (double delta : deltas) make_kernel(kc, cfg.s, delta, sigma);

    const FeSpace1D local_space = build_space(0.0, 1.0, cfg.cells, 1.0 / static_cast<double>(cfg.cells));
    std::vector<Solved> columns;
    // The local active-set iteration can release only a few nodes per step.
    columns.push_back(solve_on(local_space, cfg.local_coefficient * local_stiffness(local_space), problem, cfg,
                               cfg.cells + 50));
    for (double delta : deltas) {
        const Discretization d = discretize(kc, cfg.s, delta, sigma, cfg.cells);
        columns.push_back(solve_on(d.space, d.A, problem, cfg));
    }

    const bool vi = problem.kind == ProblemKind::Obstacle;
    os << "x,u_local";
    if (vi) os << ",lambda_local";
    for (double delta : deltas) {
        os << ",u_delta_" << format_number(delta);
        if (vi) os << ",lambda_delta_" << format_number(delta);
    }
    os << '\n';
    const std::size_t N = cfg.cells;
    for (std::size_t i = 0; i <= N; ++i) {
        os << format_number(static_cast<double>(i) / static_cast<double>(N));
        for (const Solved& c : columns) {
            os << ',' << format_number(closure_value(c.u, i, N));
            if (vi) os << ',' << format_number(closure_value(*c.lambda, i, N));
        }
        os << '\n';
    }
}

}  // namespace detail

/// Parses `args` (without the program name) and runs one subcommand.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    RunConfig cfg;
    CLI::App app{"Nonlocal and fractional linear and obstacle problems in 1D", "nlvi"};
    app.require_subcommand(1);

    auto add_kernel = [&](CLI::App* sub) {
        sub->add_option("--kernel", cfg.kernel, "fractional|constant|peridynamic");
        sub->add_option("--s", cfg.s, "fractional order in (0,1)");
        sub->add_option("--sigma", cfg.sigma, "constant:v|fractional|local|inv2delta2");
    };
    auto add_problem = [&](CLI::App* sub) {
        sub->add_option("--problem", cfg.problem, "linear|obstacle");
        sub->add_option("--f", cfg.f, "constant right-hand side");
        sub->add_option("--psi", cfg.psi, "smooth|kink|const:v|none");
        sub->add_option("--out", cfg.out, "output CSV (stdout if omitted)");
    };

    CLI::App* solve = app.add_subcommand("solve", "solve one linear or obstacle problem");
    add_kernel(solve);
    add_problem(solve);
    solve->add_option("--delta", cfg.delta, "horizon, a multiple of h, or inf");
    solve->add_option("--cells", cfg.cells, "number of cells in Omega = (0,1)");
    solve->add_option("--method", cfg.method, "active-set|penalty");
    solve->add_option("--epsilon", cfg.epsilon, "penalty parameter");

    CLI::App* study_h = app.add_subcommand("study-h", "convergence in h against a fine reference");
    CLI::App* study_s = app.add_subcommand("study-s", "convergence in h for several s");
    for (CLI::App* sub : {study_h, study_s}) {
        add_kernel(sub);
        add_problem(sub);
        sub->add_option("--delta", cfg.delta, "horizon");
        sub->add_option("--levels", cfg.levels, "h = 2^-lo .. 2^-hi, as lo:hi");
        sub->add_option("--ref-level", cfg.ref_level, "reference mesh h = 2^-ref");
    }
    study_s->add_option("--s-values", cfg.s_values, "comma-separated orders");

    CLI::App* study_delta = app.add_subcommand("study-delta", "convergence in delta to the fractional Laplacian");
    add_kernel(study_delta);
    add_problem(study_delta);
    study_delta->add_option("--deltas", cfg.deltas, "comma-separated horizons (default 8,16,32,64)");
    study_delta->add_option("--level", cfg.level, "fixed mesh h = 2^-level");

    CLI::App* compare = app.add_subcommand("compare-local", "nonlocal profiles next to the local solution");
    add_kernel(compare);
    add_problem(compare);
    compare->add_option("--cells", cfg.cells, "number of cells in Omega = (0,1)");
    compare->add_option("--deltas", cfg.deltas, "comma-separated horizons (default 0.25,0.125,0.0625)");
    compare->add_option("--method", cfg.method, "active-set|penalty");
    compare->add_option("--epsilon", cfg.epsilon, "penalty parameter");
    compare->add_option("--local-coefficient", cfg.local_coefficient, "local operator is -c u''");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    cfg.subcommand = app.get_subcommands().front()->get_name();

    try {
        std::ostringstream buffer;
        if (cfg.subcommand == "solve") {
            detail::run_solve(cfg, buffer);
        } else if (cfg.subcommand == "study-h") {
            detail::run_study_h(cfg, buffer, false);
        } else if (cfg.subcommand == "study-s") {
            detail::run_study_h(cfg, buffer, true);
        } else if (cfg.subcommand == "study-delta") {
            detail::run_study_delta(cfg, buffer);
        } else {
            detail::run_compare_local(cfg, buffer);
        }
        if (cfg.out.empty() || cfg.out == "-") {
            out << buffer.str();
        } else {
            std::ofstream file(cfg.out, std::ios::binary);
            if (!file) throw ConfigurationError("cannot open output file '" + cfg.out + "'");
            file << buffer.str();
            if (!file) throw NumericalError("writing '" + cfg.out + "' failed");
        }
    } catch (const ConfigurationError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << cfg.subcommand << ": " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace nlvi::cli
