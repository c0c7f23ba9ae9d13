// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#include "bcsd/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "bcsd/config.hpp"
#include "bcsd/dose.hpp"
#include "bcsd/error.hpp"
#include "bcsd/io.hpp"
#include "bcsd/optimize.hpp"
#include "bcsd/transport.hpp"
#include "bcsd/verify.hpp"

namespace bcsd {

namespace fs = std::filesystem;

namespace {

struct Options
{
    std::string config;
    std::string out;
    std::optional<int> threads;
};

struct Context
{
    RunConfig cfg;
    fs::path out_dir;
};

Context load(const Options& opt)
{
    Context ctx{parse_config(opt.config), {}};
    if (opt.threads) {
        ctx.cfg.solver.threads = *opt.threads;
        ctx.cfg.solver.validate();
    }
    ctx.out_dir = opt.out.empty() ? ctx.cfg.output_dir : fs::path(opt.out);
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec) {
        throw IoError(ctx.out_dir.string(), "cannot create output directory: " + ec.message());
    }
    return ctx;
}

void write_state(const Context& ctx, const Field& f, const std::string& stem, std::string_view label)
{
    write_field(ctx.out_dir / (stem + ".txt"), f, label);
    if (ctx.cfg.binary_fields) {
        write_field_binary(ctx.out_dir / (stem + ".bin"), f.shape(), f.values());
    }
}

DoseReport write_dose_outputs(const Context& ctx, const Field& psi, const ReportContext& rc,
                              std::ostream& out)
{
    const DoseMap dose = compute_dose(ctx.cfg.problem(), psi);
    const DoseReport report = region_stats(dose, ctx.cfg.regions, ctx.cfg.report.bounds);
    write_dose(ctx.out_dir / "dose.txt", ctx.cfg.grid, dose);
    write_dvh(ctx.out_dir / "dvh.txt", dvh(dose, ctx.cfg.regions, ctx.cfg.report.dvh_bins));
    write_report(ctx.out_dir / "report.json", report, rc);
    for (const RegionStats& s : report.regions) {
        if (s.voxels == 0) {
            continue;
        }
        out << "  " << to_string(s.region) << ": voxels " << s.voxels << ", dose min "
            << s.min << " mean " << s.mean << " max " << s.max;
        if (s.region != Region::Normal) {
            out << ", violation fraction " << s.violation_fraction;
        }
        out << '\n';
    }
    return report;
}

int cmd_forward(const Options& opt, std::ostream& out)
{
    const Context ctx = load(opt);
    const TransportSolver solver(ctx.cfg.problem(), ctx.cfg.solver);
    const Field psi = solver.solve_forward(build_source(ctx.cfg.source, ctx.cfg));
    write_state(ctx, psi, "psi", "state");
    out << "forward solve written to " << ctx.out_dir.string() << '\n';
    write_dose_outputs(ctx, psi, {"forward"}, out);
    return kExitOk;
}

int cmd_optimize(const Options& opt, std::ostream& out, std::ostream& err)
{
    const Context ctx = load(opt);
    const TransportSolver solver(ctx.cfg.problem(), ctx.cfg.solver);
    const ObjectiveConfig objective = build_objective(ctx.cfg, solver);
    const OptimizerSettings settings = build_optimizer_settings(ctx.cfg);
    OptResult result;
    try {
        result = optimize_projected_gradient(solver, objective, settings);
    } catch (const OptimizerError& e) {
        const OptState& st = e.last_state();
        write_state(ctx, st.q, "q", "control");
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    const OptState& st = result.state;
    write_state(ctx, st.q, "q", "control");
    write_state(ctx, st.psi, "psi", "state");
    write_field(ctx.out_dir / "lambda.txt", st.lambda, "adjoint");
    write_history(ctx.out_dir / "history.txt", result.history);
    out << "optimizer " << (result.converged ? "converged" : "stopped at the iteration cap")
        << " after " << st.iteration << " iterations: objective " << st.objective
        << ", KKT residual " << st.kkt_residual << '\n';
    ReportContext rc{"optimize", static_cast<std::size_t>(st.iteration), st.objective,
                     st.kkt_residual, true, result.converged};
    write_dose_outputs(ctx, st.psi, rc, out);
    return kExitOk;
}

int cmd_report(const Options& opt, std::ostream& out)
{
    const Context ctx = load(opt);
    FieldFile file = read_field(ctx.out_dir / "psi.txt");
    if (file.field.shape() != ctx.cfg.problem().field_shape()) {
        throw ConfigError("saved field shape " + to_string(file.field.shape())
                          + " does not match the configuration");
    }
    out << "report recomputed from " << (ctx.out_dir / "psi.txt").string() << '\n';
    write_dose_outputs(ctx, file.field, {"report"}, out);
    return kExitOk;
}

int cmd_verify(const Options& opt, std::ostream& out)
{
    const Context ctx = load(opt);
    const auto checks = verify::run_property_suite(ctx.cfg.problem(), ctx.cfg.solver);
    out << verify::format_table(checks);
    const bool ok = std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
    out << (ok ? "all checks passed" : "some checks failed") << '\n';
    return ok ? kExitOk : kExitFailure;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Continuous slowing-down transport solver and treatment-plan optimizer", "bcsd"};
    app.require_subcommand(1);
    Options opt;
    auto add = [&](const char* name, const char* help) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opt.config, "run configuration (JSON)")->required();
        sub->add_option("--out", opt.out, "output directory (overrides output.dir)");
        sub->add_option("--threads", opt.threads, "worker threads for the sweeps")
            ->check(CLI::PositiveNumber);
        return sub;
    };
    CLI::App* forward = add("forward", "solve the forward problem and write psi and dose");
    CLI::App* optimize = add("optimize", "run the projected-gradient optimizer");
    CLI::App* report = add("report", "recompute dose and DVH from a saved psi");
    CLI::App* verify_cmd = add("verify", "run the numerical property suite");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (forward->parsed()) {
            return cmd_forward(opt, out);
        }
        if (optimize->parsed()) {
            return cmd_optimize(opt, out, err);
        }
        if (report->parsed()) {
            return cmd_report(opt, out);
        }
        if (verify_cmd->parsed()) {
            return cmd_verify(opt, out);
        }
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    err << app.help();
    return kExitUsage;
}

}  // namespace bcsd
