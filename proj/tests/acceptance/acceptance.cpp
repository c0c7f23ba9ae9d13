// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bcsd/adjoint.hpp"
#include "bcsd/cli.hpp"
#include "bcsd/config.hpp"
#include "bcsd/error.hpp"
#include "bcsd/io.hpp"
#include "bcsd/optimize.hpp"
#include "bcsd/transport.hpp"
#include "bcsd/verify.hpp"

namespace fs = std::filesystem;
using namespace bcsd;

namespace {

const fs::path kConfigs = fs::path(BCSD_SOURCE_DIR) / "configs";

struct Outcome
{
    bool passed = false;
    std::string detail;
};

std::string sci(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

/// 2D unit square, 32x32, 8 directions, 32 energy steps, S = 1 + eps.
TransportProblem reference_problem(int cells = 32, std::size_t steps = 32, double sigma_t = 1.0,
                                   double sigma_s = 0.4)
{
    TransportProblem p;
    const std::vector<double> extent{1.0, 1.0};
    const std::vector<int> n{cells, cells};
    p.grid = build_grid(2, extent, n);
    p.quad = build_quadrature(2, 8);
    p.xs = CrossSections::uniform(p.grid.num_voxels(), Material{sigma_t, sigma_s, KernelKind::Isotropic, 0.0});
    p.energy = build_energy_map(StoppingPower::tabulated({0.0, 1.0}, {1.0, 2.0}), 1.0, steps);
    return p;
}

SolverSettings tight_settings()
{
    SolverSettings s;
    s.tolerance = 1e-13;
    s.max_iterations = 2000;
    return s;
}

Outcome adjoint_identity(std::mt19937_64& rng)
{
    double worst = 0.0;
    double worst_free = 0.0;
    const TransportProblem p = reference_problem();
    const TransportProblem free = reference_problem(32, 32, 1.0, 0.0);
    const TransportSolver solver(p, tight_settings());
    const TransportSolver free_solver(free, tight_settings());
    for (int i = 0; i < 10; ++i) {
        const Field w = verify::random_field(p.field_shape(), rng, 0.0, 1.0);
        const Field z = verify::random_field(p.field_shape(), rng, 0.0, 1.0);
        worst = std::max(worst, adjoint_identity_gap(solver, w, z));
        worst_free = std::max(worst_free, adjoint_identity_gap(free_solver, w, z));
    }
    return {worst <= 1e-10 && worst_free <= 1e-12,
            "max gap " + sci(worst) + " <= 1e-10, without scattering " + sci(worst_free) + " <= 1e-12 (10 pairs)"};
}

Outcome gradient_consistency(std::mt19937_64& rng)
{
    RunConfig cfg = parse_config(kConfigs / "reference.json");
    cfg.solver = tight_settings();
    const TransportProblem p = cfg.problem();
    const TransportSolver solver(p, cfg.solver);
    const ObjectiveConfig obj = build_objective(cfg, solver);
    std::vector<double> steps;
    for (int e = 1; e <= 9; ++e) {
        steps.push_back(std::pow(10.0, -e));
    }
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
        const Field q = verify::random_field(p.field_shape(), rng, 0.0, 1.0);
        const Field dq = verify::random_field(p.field_shape(), rng, -1.0, 1.0);
        worst = std::max(worst, verify::gradient_check(solver, obj, q, dq, steps).min_error);
    }
    return {worst <= 1e-6, "worst min-over-h relative error " + sci(worst) + " <= 1e-6 (5 directions)"};
}

Outcome fixed_point_optimality()
{
    const RunConfig cfg = parse_config(kConfigs / "exact_recovery.json");
    const TransportSolver solver(cfg.problem(), cfg.solver);
    const ObjectiveConfig obj = build_objective(cfg, solver);
    OptimizerSettings opt = build_optimizer_settings(cfg);
    opt.tolerance = 1e-6;
    const OptResult r = optimize_projected_gradient(solver, obj, opt);
    const double j0 = r.history.front().objective;
    const double j = r.state.objective;
    const GradientResult fresh = gradient(solver, r.state.q, obj);
    const double kkt_fresh = kkt_residual(solver.problem(), r.state.q, fresh.lambda, obj);
    const bool ok = r.converged && r.state.kkt_residual <= 1e-6 && j <= 1e-8 * j0 && kkt_fresh <= 1e-6;
    return {ok, "KKT " + sci(r.state.kkt_residual) + ", J/J0 " + sci(j / j0) + ", recomputed KKT "
                    + sci(kkt_fresh) + " after " + std::to_string(r.state.iteration) + " iterations"};
}

Outcome positivity(std::mt19937_64& rng)
{
    const TransportProblem p = reference_problem();
    const TransportSolver solver(p);
    double worst = 1.0;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 10; ++i) {
        Field q = verify::random_field(p.field_shape(), rng, 0.0, 1.0);
        // sparse sources put sharp fronts into the solution
        const double keep = u(rng);
        for (double& x : q.values()) {
            x = u(rng) < keep ? x : 0.0;
        }
        worst = std::min(worst, verify::positivity_ratio(solver.solve_forward(q)));
    }
    return {worst >= -1e-13, "min psi / max psi " + sci(worst) + " >= -1e-13 (10 sources)"};
}

std::string ladder_detail(const verify::Ladder& l)
{
    std::ostringstream os;
    os << "errors";
    for (std::size_t i = 0; i < l.errors.size(); ++i) {
        os << ' ' << l.cells[i] << ':' << sci(l.errors[i]);
    }
    os << ", orders";
    for (double o : l.orders) {
        os << ' ' << sci(o);
    }
    return os.str();
}

Outcome transformation_equivalence()
{
    const verify::Ladder l = verify::transformation_equivalence(reference_problem(16, 16), tight_settings(), 3);
    return {l.min_order() >= 0.9, ladder_detail(l) + " (min >= 0.9)"};
}

Outcome collisionless_oracle()
{
    const verify::Ladder l = verify::collisionless_convergence(reference_problem(16, 16), 3);
    return {l.min_order() >= 0.9, ladder_detail(l) + " (min >= 0.9)"};
}

Outcome gronwall(std::mt19937_64& rng)
{
    const TransportProblem p = reference_problem(32, 32, 0.0, 0.4);
    const TransportSolver solver(p, tight_settings());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> initial(p.field_shape().slice_size());
    for (double& x : initial) {
        x = u(rng);
    }
    const verify::GronwallResult r = verify::gronwall_check(solver, initial);
    return {r.worst_margin <= 0.0, "worst log-growth margin " + sci(r.worst_margin) + " <= 0 (|K| "
                                       + sci(r.k_norm) + ", delta " + sci(r.delta) + ")"};
}

Outcome uniqueness(std::mt19937_64& rng)
{
    RunConfig cfg = parse_config(kConfigs / "reference.json");
    cfg.solver = tight_settings();
    const TransportProblem p = cfg.problem();
    const TransportSolver solver(p, cfg.solver);
    const ObjectiveConfig obj = build_objective(cfg, solver);
    OptimizerSettings a = build_optimizer_settings(cfg);
    a.initial = Field(p.field_shape());
    a.tolerance = 1e-8;
    a.max_iterations = 2000;
    OptimizerSettings b = a;
    b.initial = verify::random_field(p.field_shape(), rng, 0.0, 2.0);
    const OptResult ra = optimize_projected_gradient(solver, obj, a);
    const OptResult rb = optimize_projected_gradient(solver, obj, b);
    const Field d = ra.state.q - rb.state.q;
    const double rel = weighted_norm(p, d.values()) / std::max(weighted_norm(p, ra.state.q.values()), 1e-300);
    return {ra.converged && rb.converged && rel <= 1e-5,
            "relative distance " + sci(rel) + " <= 1e-5 (iterations " + std::to_string(ra.state.iteration) + ", "
                + std::to_string(rb.state.iteration) + ")"};
}

Outcome moller_gate()
{
    const RunConfig water = parse_config(kConfigs / "water_moller.json");
    double lowest = std::numeric_limits<double>::infinity();
    constexpr int kSamples = 20000;
    for (int i = 0; i <= kSamples; ++i) {
        const double e = water.eps_max * i / kSamples;
        lowest = std::min(lowest, water.stopping(e));
    }
    bool rejected = false;
    std::string message;
    try {
        (void)parse_config(kConfigs / "moller_out_of_range.json");
    } catch (const ConfigError& e) {
        message = e.what();
        rejected = message.find("A4") != std::string::npos;
    }
    return {lowest > 0.0 && rejected,
            "min S on [0, " + sci(water.eps_max) + "] = " + sci(lowest) + ", out-of-range config "
                + (rejected ? "rejected with A4" : "not rejected")};
}

Outcome determinism()
{
    const fs::path base = fs::temp_directory_path() / "bcsd_acceptance_determinism";
    fs::remove_all(base);
    std::ostringstream sink;
    const std::string cfg = (kConfigs / "reference.json").string();
    std::vector<std::string> texts;
    for (const char* run : {"a", "b"}) {
        const fs::path dir = base / run;
        const int code = run_command({"optimize", "--config", cfg, "--out", dir.string(), "--threads", "1"}, sink, sink);
        if (code != kExitOk) {
            return {false, "optimize exited with " + std::to_string(code)};
        }
        texts.push_back(read_text(dir / "history.txt"));
    }
    bool same_outputs = true;
    for (const char* f : {"q.txt", "psi.txt", "lambda.txt", "dose.txt", "dvh.txt", "report.json"}) {
        same_outputs = same_outputs && read_text(base / "a" / f) == read_text(base / "b" / f);
    }
    fs::remove_all(base);
    return {texts[0] == texts[1], std::string("history files ") + (texts[0] == texts[1] ? "identical" : "differ")
                                      + " (" + std::to_string(texts[0].size()) + " bytes), other outputs "
                                      + (same_outputs ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv)
{
    const bool report_only = argc > 1 && std::string(argv[1]) == "--report-only";
    std::mt19937_64 rng(20261016);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"adjoint identity", [&] { return adjoint_identity(rng); }},
        {"gradient check", [&] { return gradient_consistency(rng); }},
        {"fixed-point optimality", [] { return fixed_point_optimality(); }},
        {"positivity", [&] { return positivity(rng); }},
        {"transformation equivalence", [] { return transformation_equivalence(); }},
        {"collisionless oracle", [] { return collisionless_oracle(); }},
        {"Gronwall stability", [&] { return gronwall(rng); }},
        {"uniqueness probe", [&] { return uniqueness(rng); }},
        {"Moller/A4 gate", [] { return moller_gate(); }},
        {"determinism", [] { return determinism(); }},
    };
    int failures = 0;
    int index = 0;
    for (const auto& [name, check] : criteria) {
        ++index;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += o.passed ? 0 : 1;
        std::printf("%s %2d %-27s %s [%.1fs]\n", o.passed ? "PASS" : "FAIL", index, name.c_str(), o.detail.c_str(),
                    secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 || report_only ? 0 : 1;
}
