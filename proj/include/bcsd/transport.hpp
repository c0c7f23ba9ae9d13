// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "bcsd/field.hpp"
#include "bcsd/grid.hpp"
#include "bcsd/physics.hpp"
#include "bcsd/quadrature.hpp"

namespace bcsd {

struct SolverSettings
{
    double tolerance = 1e-10;  ///< relative L2 change between source iterates
    int max_iterations = 500;
    int threads = 1;

    void validate() const;
};

struct TransportProblem
{
    SpatialGrid grid;
    AngularQuadrature quad;
    CrossSections xs;
    EnergyMap energy;

    FieldShape field_shape() const
    {
        return {grid.num_voxels(), quad.size(), energy.num_nodes()};
    }
    /// Throws ContractError when the pieces disagree on sizes or dimension.
    void validate() const;
};

/*!
 * Weighted L2 pairing over phase space,
 * sum_k c_k sum_m w_m sum_v |cell| a b, with c the trapezoid energy weights.
 * Summation order is fixed.
 */
double weighted_inner(const TransportProblem& p, std::span<const double> a,
                      std::span<const double> b);
double weighted_norm(const TransportProblem& p, std::span<const double> a);

/// Forward sweeps march along Omega; adjoint sweeps along -Omega.
enum class SweepMode
{
    Forward,
    Adjoint
};

/// Boundary value on the inflow face of `voxel` normal to `axis`.
using InflowFunction = std::function<double(std::size_t voxel, int axis)>;

/*!
 * Solve (inv_dt + sigma_t + Omega.grad_upwind) u = source for one direction.
 *
 * First-order upwind finite volumes: every voxel couples only to its
 * upstream neighbour along each axis, so one pass in upstream-first order is
 * an exact solve. Missing `inflow` means zero inflow.
 */
void sweep_one_direction(const SpatialGrid& grid, std::span<const double> sigma_t,
                         const Vec3& omega, std::span<const double> source, double inv_dt,
                         std::span<double> out, SweepMode mode = SweepMode::Forward,
                         const InflowFunction& inflow = {});

std::vector<double> sweep_one_direction(const SpatialGrid& grid, std::span<const double> sigma_t,
                                        const Vec3& omega, std::span<const double> source,
                                        double inv_dt, const InflowFunction& inflow = {});

/// out = (sigma_t + Omega.grad_upwind) u with zero inflow; the sweep's stencil, applied.
void apply_streaming(const SpatialGrid& grid, std::span<const double> sigma_t, const Vec3& omega,
                     std::span<const double> u, std::span<double> out,
                     SweepMode mode = SweepMode::Forward);

/*!
 * Discrete scattering operator
 * (K phi)(v, m) = sum_m' w_m' sigma_s(v, Omega_m'.Omega_m) phi(v, m').
 *
 * Kernel matrices are shared between voxels with the same kernel kind and
 * anisotropy. Slices use the (direction, voxel) layout of Field.
 */
class ScatteringOperator
{
  public:
    ScatteringOperator() = default;
    ScatteringOperator(const AngularQuadrature& quad, const CrossSections& xs);

    bool empty() const { return empty_; }
    void apply(std::span<const double> slice, std::span<double> out) const;
    /// Coefficient multiplying phi(v, m') in (K phi)(v, m).
    double entry(std::size_t v, std::size_t m, std::size_t m_prime) const;

  private:
    std::size_t nm_ = 0;
    std::size_t nv_ = 0;
    bool empty_ = true;
    std::vector<double> sigma_s_;
    std::vector<std::size_t> kernel_of_voxel_;
    std::vector<std::vector<double>> kernels_;  // nm x nm, unit total scatter
};

std::vector<double> apply_scattering(std::span<const double> slice, const AngularQuadrature& quad,
                                     const CrossSections& xs);

struct StepStats
{
    int iterations = 0;
    double relative_change = 0.0;
};

/*!
 * Forward and adjoint solver for the continuous slowing-down problem.
 *
 * The energy variable is marched on tau_k = r(eps_k), the images of the
 * uniform eps nodes, so transforming between the two axes is a pointwise
 * scaling by S. Each step is implicit Euler in tau with the source lagged to
 * the start of the step:
 *
 *   (1/dtau_k + H - K) phi_k = phi_{k-1}/dtau_k + S_{k-1} q_{k-1},
 *
 * with H streaming plus absorption, phi_0 = 0 and psi_k = phi_k / S_k.
 * Scattering is resolved by source iteration with K lagged.
 */
class TransportSolver
{
  public:
    explicit TransportSolver(TransportProblem problem, SolverSettings settings = {});

    const TransportProblem& problem() const { return problem_; }
    const SolverSettings& settings() const { return settings_; }
    FieldShape shape() const { return problem_.field_shape(); }
    const ScatteringOperator& scattering() const { return scattering_; }

    /*!
     * Solve (inv_dt + H - K) out = rhs for one energy slice. `out` holds
     * the initial iterate on entry. Throws SolverError when the iteration
     * budget runs out.
     */
    StepStats solve_slice(std::span<const double> rhs, double inv_dt, std::span<double> out,
                          SweepMode mode = SweepMode::Forward) const;

    /// phi_next solving (1/dt + H - K) phi_next = phi_prev/dt + source.
    std::vector<double> step_energy(std::span<const double> phi_prev,
                                    std::span<const double> source, double dt) const;

    /*!
     * March the transformed problem from `initial` over the solver's tau
     * nodes. The zero-initial case is the production path; a nonzero
     * initial slice exists for stability checks.
     */
    TransformedField march(const TransformedField& source, std::span<const double> initial) const;

    Field solve_forward(const Field& q) const;

  private:
    TransportProblem problem_;
    SolverSettings settings_;
    ScatteringOperator scattering_;
};

Field solve_forward(const TransportSolver& solver, const Field& q);

/// q~(tau_k) = S(eps_k) q(eps_k) on the map's own tau nodes.
TransformedField transform_source(const Field& q, const EnergyMap& map);
/// q~ on arbitrary tau nodes, linear interpolation of q in eps.
TransformedField transform_source(const Field& q, const EnergyMap& map,
                                  std::span<const double> tau_nodes);
/// psi(eps_k) = phi(r(eps_k)) / S(eps_k), linear interpolation in tau when needed.
Field untransform_state(const TransformedField& phi, const EnergyMap& map);

using DirectionalFunction = std::function<double(const Vec3& x, std::size_t m)>;

/*!
 * Collisionless propagator: eta evaluated at x - Omega * (r(eps) - r(s))
 * for every voxel centre and direction, zero when the shifted point leaves
 * the domain.
 */
std::vector<double> free_streaming_oracle(const DirectionalFunction& eta, double eps, double s,
                                          const EnergyMap& map, const SpatialGrid& grid,
                                          const AngularQuadrature& quad);

/*!
 * Weighted L2 norm of the discrete residual of
 * d(S psi)/deps + Omega.grad psi + sigma_t psi - K psi - q, written with the
 * solver's own stencils (the tau step divided by S_k), plus psi at eps = 0.
 */
double pde_residual(const TransportSolver& solver, const Field& psi, const Field& q);

}  // namespace bcsd
