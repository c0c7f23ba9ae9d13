// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "bcsd/error.hpp"
#include "bcsd/field.hpp"
#include "bcsd/grid.hpp"
#include "bcsd/transport.hpp"

namespace bcsd {

enum class ObjectiveKind
{
    AngleAveraged,  ///< alpha1/2 (int (psi - psi_bar) dOmega)^2 tracking
    FullField       ///< alpha1/2 (psi - psi_bar)^2 tracking at every direction
};

std::string_view to_string(ObjectiveKind k);
ObjectiveKind parse_objective_kind(std::string_view name);

struct ObjectiveConfig
{
    ObjectiveKind kind = ObjectiveKind::AngleAveraged;
    std::vector<double> alpha1;  ///< per voxel, >= 0
    double alpha2 = 1.0;         ///< > 0
    Field psi_bar;
    Field q_bar;  ///< >= 0

    /// Throws ConfigError on negative weights, alpha2 <= 0 or negative q_bar.
    void validate(const FieldShape& shape) const;
};

/// alpha1(x) from one weight per region.
std::vector<double> alpha_from_regions(const RegionMask& mask, double tumor, double normal,
                                       double risk);

/// Isotropic psi_bar whose angular integral equals `angular_mean[v]` at every energy.
Field isotropic_target(const TransportProblem& p, std::span<const double> angular_mean);

double objective(const TransportProblem& p, const Field& psi, const Field& q,
                 const ObjectiveConfig& cfg);

/// Phi(psi)(k, v) = sum_m w_m (psi - psi_bar); stored energy-major, voxel fastest.
std::vector<double> angular_mean_residual(const TransportProblem& p, const Field& psi,
                                          const ObjectiveConfig& cfg);

struct GradientResult
{
    Field psi;
    AdjointField lambda;
    Field gradient;
    double objective = 0.0;
};

/// g = lambda + alpha2 (q - q_bar) with lambda the adjoint of the tracking residual.
GradientResult gradient(const TransportSolver& solver, const Field& q, const ObjectiveConfig& cfg);
/// Same as gradient() when psi = solve_forward(q) is already known.
GradientResult gradient_at_state(const TransportSolver& solver, const Field& q, Field psi,
                                 const ObjectiveConfig& cfg);

/// Pointwise max(q, 0).
Field project_admissible(const Field& q);

/// |q - (q - lambda - alpha2 (q - q_bar))^+| / max(|q|, 1) in the weighted norm.
double kkt_residual(const TransportProblem& p, const Field& q, const AdjointField& lambda,
                    const ObjectiveConfig& cfg);

struct OptimizerSettings
{
    Field initial;  ///< q0 >= 0
    double tolerance = 1e-6;
    int max_iterations = 200;
    double armijo = 1e-4;
    double shrink = 0.5;
    double min_step = 1e-20;
};

struct OptRecord
{
    int iteration = 0;
    double objective = 0.0;
    double gradient_norm = 0.0;
    double kkt_residual = 0.0;
    double step = 0.0;  ///< step that produced this iterate, 0 for the start
};

struct OptState
{
    Field q;
    Field psi;
    AdjointField lambda;
    double objective = 0.0;
    double gradient_norm = 0.0;
    double kkt_residual = 0.0;
    int iteration = 0;
    double step = 0.0;
};

struct OptResult
{
    OptState state;
    std::vector<OptRecord> history;
    bool converged = false;
};

class OptimizerError : public Error
{
  public:
    OptimizerError(const std::string& what, OptState last) : Error(what), last_(std::move(last)) {}
    const OptState& last_state() const noexcept { return last_; }

  private:
    OptState last_;
};

/*!
 * Projected gradient with Armijo backtracking:
 * q_{k+1} = (q_k - gamma g_k)^+, gamma = 1, 1/2, 1/4, ... until
 * J(q_{k+1}) <= J(q_k) + c <g_k, q_{k+1} - q_k>. Stops when the KKT
 * residual drops to the tolerance or the iteration cap is hit.
 */
OptResult optimize_projected_gradient(const TransportSolver& solver, const ObjectiveConfig& cfg,
                                      const OptimizerSettings& settings);

}  // namespace bcsd
