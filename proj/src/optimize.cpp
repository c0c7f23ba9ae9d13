// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#include "bcsd/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bcsd/adjoint.hpp"

namespace bcsd {

std::string_view to_string(ObjectiveKind k)
{
    return k == ObjectiveKind::AngleAveraged ? "angle_averaged" : "full_field";
}

ObjectiveKind parse_objective_kind(std::string_view name)
{
    if (name == "angle_averaged") {
        return ObjectiveKind::AngleAveraged;
    }
    if (name == "full_field") {
        return ObjectiveKind::FullField;
    }
    throw ConfigError("unknown objective kind '" + std::string(name) + "'");
}

void ObjectiveConfig::validate(const FieldShape& shape) const
{
    if (alpha1.size() != shape.voxels) {
        throw ConfigError("alpha1 needs one weight per voxel");
    }
    for (double a : alpha1) {
        if (!(a >= 0.0) || !std::isfinite(a)) {
            throw ConfigError("alpha1 must be non-negative and finite");
        }
    }
    if (!(alpha2 > 0.0) || !std::isfinite(alpha2)) {
        throw ConfigError("alpha2 must be positive");
    }
    require_same_shape(psi_bar.shape(), shape, "objective target psi_bar");
    require_same_shape(q_bar.shape(), shape, "objective target q_bar");
    for (double x : q_bar.values()) {
        if (!(x >= 0.0)) {
            throw ConfigError("q_bar must be non-negative");
        }
    }
    if (!all_finite(psi_bar.values())) {
        throw ConfigError("psi_bar must be finite");
    }
}

std::vector<double> alpha_from_regions(const RegionMask& mask, double tumor, double normal,
                                       double risk)
{
    std::vector<double> alpha(mask.size());
    for (std::size_t v = 0; v < mask.size(); ++v) {
        switch (mask[v]) {
        case Region::Tumor:
            alpha[v] = tumor;
            break;
        case Region::Normal:
            alpha[v] = normal;
            break;
        case Region::Risk:
            alpha[v] = risk;
            break;
        }
    }
    return alpha;
}

Field isotropic_target(const TransportProblem& p, std::span<const double> angular_mean)
{
    if (angular_mean.size() != p.grid.num_voxels()) {
        throw ContractError("isotropic_target: one value per voxel expected");
    }
    Field target(p.field_shape());
    const double measure = p.quad.measure();
    for (std::size_t k = 0; k < target.shape().energies; ++k) {
        for (std::size_t m = 0; m < target.shape().directions; ++m) {
            for (std::size_t v = 0; v < target.shape().voxels; ++v) {
                target(k, m, v) = angular_mean[v] / measure;
            }
        }
    }
    return target;
}

std::vector<double> angular_mean_residual(const TransportProblem& p, const Field& psi,
                                          const ObjectiveConfig& cfg)
{
    const FieldShape shape = p.field_shape();
    require_same_shape(psi.shape(), shape, "angular_mean_residual");
    require_same_shape(cfg.psi_bar.shape(), shape, "angular_mean_residual");
    std::vector<double> phi(shape.energies * shape.voxels, 0.0);
    for (std::size_t k = 0; k < shape.energies; ++k) {
        double* out = phi.data() + k * shape.voxels;
        for (std::size_t m = 0; m < shape.directions; ++m) {
            const double w = p.quad.weight(m);
            for (std::size_t v = 0; v < shape.voxels; ++v) {
                out[v] += w * (psi(k, m, v) - cfg.psi_bar(k, m, v));
            }
        }
    }
    return phi;
}

namespace {

double control_term(const TransportProblem& p, const Field& q, const ObjectiveConfig& cfg)
{
    const Field diff = q - cfg.q_bar;
    return 0.5 * cfg.alpha2 * weighted_inner(p, diff.values(), diff.values());
}

double tracking_term(const TransportProblem& p, const Field& psi, const ObjectiveConfig& cfg)
{
    const FieldShape shape = p.field_shape();
    const auto c = p.energy.energy_weights();
    double total = 0.0;
    if (cfg.kind == ObjectiveKind::AngleAveraged) {
        const auto phi = angular_mean_residual(p, psi, cfg);
        for (std::size_t k = 0; k < shape.energies; ++k) {
            double per_energy = 0.0;
            for (std::size_t v = 0; v < shape.voxels; ++v) {
                const double r = phi[k * shape.voxels + v];
                per_energy += cfg.alpha1[v] * r * r;
            }
            total += c[k] * per_energy;
        }
        return 0.5 * total * p.grid.cell_volume();
    }
    for (std::size_t k = 0; k < shape.energies; ++k) {
        double per_energy = 0.0;
        for (std::size_t m = 0; m < shape.directions; ++m) {
            double per_direction = 0.0;
            for (std::size_t v = 0; v < shape.voxels; ++v) {
                const double r = psi(k, m, v) - cfg.psi_bar(k, m, v);
                per_direction += cfg.alpha1[v] * r * r;
            }
            per_energy += p.quad.weight(m) * per_direction;
        }
        total += c[k] * per_energy;
    }
    return 0.5 * total * p.grid.cell_volume();
}

/// Derivative of the tracking term with respect to psi, as a field under weighted_inner.
Field tracking_source(const TransportProblem& p, const Field& psi, const ObjectiveConfig& cfg)
{
    const FieldShape shape = p.field_shape();
    Field src(shape);
    if (cfg.kind == ObjectiveKind::AngleAveraged) {
        const auto phi = angular_mean_residual(p, psi, cfg);
        for (std::size_t k = 0; k < shape.energies; ++k) {
            for (std::size_t m = 0; m < shape.directions; ++m) {
                for (std::size_t v = 0; v < shape.voxels; ++v) {
                    src(k, m, v) = cfg.alpha1[v] * phi[k * shape.voxels + v];
                }
            }
        }
        return src;
    }
    for (std::size_t k = 0; k < shape.energies; ++k) {
        for (std::size_t m = 0; m < shape.directions; ++m) {
            for (std::size_t v = 0; v < shape.voxels; ++v) {
                src(k, m, v) = cfg.alpha1[v] * (psi(k, m, v) - cfg.psi_bar(k, m, v));
            }
        }
    }
    return src;
}

}  // namespace

double objective(const TransportProblem& p, const Field& psi, const Field& q,
                 const ObjectiveConfig& cfg)
{
    require_same_shape(psi.shape(), p.field_shape(), "objective");
    require_same_shape(q.shape(), p.field_shape(), "objective");
    return tracking_term(p, psi, cfg) + control_term(p, q, cfg);
}

GradientResult gradient_at_state(const TransportSolver& solver, const Field& q, Field psi,
                                 const ObjectiveConfig& cfg)
{
    const TransportProblem& p = solver.problem();
    GradientResult out;
    out.objective = objective(p, psi, q, cfg);
    const bool decoupled = std::all_of(cfg.alpha1.begin(), cfg.alpha1.end(),
                                       [](double a) { return a == 0.0; });
    out.lambda = decoupled ? AdjointField(p.field_shape())
                           : solve_adjoint(solver, tracking_source(p, psi, cfg));
    out.gradient = retag<StateTag>(out.lambda);
    out.gradient.axpy(cfg.alpha2, q);
    out.gradient.axpy(-cfg.alpha2, cfg.q_bar);
    out.psi = std::move(psi);
    return out;
}

GradientResult gradient(const TransportSolver& solver, const Field& q, const ObjectiveConfig& cfg)
{
    return gradient_at_state(solver, q, solver.solve_forward(q), cfg);
}

Field project_admissible(const Field& q)
{
    Field out = q;
    for (double& x : out.values()) {
        x = std::max(x, 0.0);
    }
    return out;
}

double kkt_residual(const TransportProblem& p, const Field& q, const AdjointField& lambda,
                    const ObjectiveConfig& cfg)
{
    require_same_shape(q.shape(), p.field_shape(), "kkt_residual");
    require_same_shape(lambda.shape(), p.field_shape(), "kkt_residual");
    Field r(q.shape());
    const auto qv = q.values();
    const auto lv = lambda.values();
    const auto bv = cfg.q_bar.values();
    auto rv = r.values();
    for (std::size_t i = 0; i < qv.size(); ++i) {
        const double fixed = std::max(qv[i] - lv[i] - cfg.alpha2 * (qv[i] - bv[i]), 0.0);
        rv[i] = qv[i] - fixed;
    }
    return weighted_norm(p, r.values()) / std::max(weighted_norm(p, qv), 1.0);
}

namespace {

std::string line_search_failure(int iter, const OptState& st)
{
    std::ostringstream os;
    os << "line search failed at iteration " << iter << " (objective " << st.objective
       << ", KKT residual " << st.kkt_residual << ")";
    return os.str();
}

}  // namespace

OptResult optimize_projected_gradient(const TransportSolver& solver, const ObjectiveConfig& cfg,
                                      const OptimizerSettings& settings)
{
    const TransportProblem& p = solver.problem();
    cfg.validate(p.field_shape());
    require_same_shape(settings.initial.shape(), p.field_shape(), "optimizer initial control");
    for (double x : settings.initial.values()) {
        if (!(x >= 0.0)) {
            throw ConfigError("initial control must be non-negative");
        }
    }
    if (!(settings.tolerance > 0.0) || settings.max_iterations < 0 || !(settings.shrink > 0.0)
        || !(settings.shrink < 1.0) || !(settings.armijo > 0.0)) {
        throw ConfigError("invalid optimizer settings");
    }

    OptResult result;
    OptState& st = result.state;
    st.q = settings.initial;
    GradientResult gr = gradient(solver, st.q, cfg);

    for (int iter = 0;; ++iter) {
        st.psi = gr.psi;
        st.lambda = gr.lambda;
        st.objective = gr.objective;
        st.gradient_norm = weighted_norm(p, gr.gradient.values());
        st.kkt_residual = kkt_residual(p, st.q, gr.lambda, cfg);
        st.iteration = iter;
        result.history.push_back(
            {iter, st.objective, st.gradient_norm, st.kkt_residual, iter == 0 ? 0.0 : st.step});
        if (st.kkt_residual <= settings.tolerance) {
            result.converged = true;
            break;
        }
        if (iter >= settings.max_iterations) {
            break;
        }

        double gamma = 1.0;
        for (;;) {
            Field trial = st.q;
            trial.axpy(-gamma, gr.gradient);
            trial = project_admissible(trial);
            Field d = trial - st.q;
            const double slope = weighted_inner(p, gr.gradient.values(), d.values());
            const bool resolvable = weighted_norm(p, d.values())
                                    > 8.0 * std::numeric_limits<double>::epsilon()
                                          * std::max(weighted_norm(p, st.q.values()), 1.0);
            if (!resolvable) {
                throw OptimizerError(line_search_failure(iter, st), st);
            }
            Field psi_trial = solver.solve_forward(trial);
            const double j_trial = objective(p, psi_trial, trial, cfg);
            if (j_trial <= st.objective + settings.armijo * slope) {
                st.q = std::move(trial);
                st.step = gamma;
                gr = gradient_at_state(solver, st.q, std::move(psi_trial), cfg);
                break;
            }
            gamma *= settings.shrink;
            if (gamma < settings.min_step) {
                throw OptimizerError(line_search_failure(iter, st), st);
            }
        }
    }
    return result;
}

}  // namespace bcsd
