// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "bcsd/field.hpp"
#include "bcsd/optimize.hpp"
#include "bcsd/transport.hpp"

/// Reference solvers and numerical property checks used by the test suites and `bcsd verify`.
namespace bcsd::verify {

/*!
 * Marches d(S psi)/deps + Omega.grad psi + sigma_t psi = K psi + q directly in
 * eps with implicit Euler and an implicit source:
 *
 *   (S_k/deps + H - K) psi_k = S_{k-1} psi_{k-1}/deps + q_k,   psi_0 = 0.
 *
 * Shares no sweep or marching code with TransportSolver.
 */
Field direct_march(const TransportProblem& p, const Field& q, double tolerance = 1e-13,
                   int max_iterations = 2000);

/// Same physics with every cell split into factor^dims children and factor x the energy steps.
TransportProblem refine(const TransportProblem& base, int factor);

/// Copy of `p` with all cross sections set to zero.
TransportProblem collisionless(const TransportProblem& p);

Field random_field(const FieldShape& shape, std::mt19937_64& rng, double lo, double hi);

struct GradientCheck
{
    std::vector<double> steps;
    std::vector<double> errors;  ///< |fd - <g, dq>| / |<g, dq>|
    double min_error = 0.0;
};

/// Central differences of the objective along dq against the adjoint gradient.
GradientCheck gradient_check(const TransportSolver& solver, const ObjectiveConfig& cfg,
                             const Field& q, const Field& dq, std::span<const double> steps);

struct Ladder
{
    std::vector<int> cells;  ///< cells along x per level
    std::vector<double> errors;
    std::vector<double> orders;  ///< log2(e_{l-1} / e_l)
    double min_order() const;
};

/// Weighted distance between the remapped solve and direct_march on 1x, 2x, 4x... refinements.
Ladder transformation_equivalence(const TransportProblem& base, const SolverSettings& settings,
                                  int levels = 3);

/// Smooth compactly supported source used by the convergence studies.
double bump(const SpatialGrid& grid, const Vec3& x);

/*!
 * Collisionless solve against the characteristic solution
 * psi(x, eps) = (1/S(eps)) int_0^eps q(x - Omega (r(eps) - r(s)), s) ds,
 * built from free_streaming_oracle.
 */
Ladder collisionless_convergence(const TransportProblem& base, int levels = 3);

/// min psi / max psi (1 when psi vanishes identically).
double positivity_ratio(const Field& psi);

struct GronwallResult
{
    double k_norm = 0.0;      ///< sup of sigma_s times the sphere measure
    double worst_margin = 0.0;  ///< max_k log(growth_k) - (2 |K| tau_k + delta), <= 0 on success
    double delta = 0.0;
};

/// Zero source, non-zero initial slice; squared norm growth against exp(2 |K| tau + delta).
GronwallResult gronwall_check(const TransportSolver& solver, std::span<const double> initial);

struct Check
{
    std::string name;
    bool passed = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

/// Adjoint gap, gradient check, positivity, transformation equivalence and convergence.
std::vector<Check> run_property_suite(const TransportProblem& problem, const SolverSettings& settings,
                                      std::uint64_t seed = 20260101);

std::string format_table(std::span<const Check> checks);

}  // namespace bcsd::verify
