// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#include "bcsd/adjoint.hpp"

#include <algorithm>
#include <cmath>

namespace bcsd {

AdjointField solve_adjoint(const TransportSolver& solver, const Field& source)
{
    const TransportProblem& p = solver.problem();
    const FieldShape shape = p.field_shape();
    require_same_shape(source.shape(), shape, "solve_adjoint");
    const std::size_t steps = p.energy.steps();
    const auto c = p.energy.energy_weights();
    const auto s = p.energy.stopping_at_nodes();
    const auto tau = p.energy.tau_nodes();
    const std::size_t n = shape.slice_size();

    // Transpose of: G_k phi_k = phi_{k-1}/dtau_k + S_{k-1} q_{k-1}, psi_k = phi_k / S_k.
    // nu solves G_k^T nu_k = c_k z_k / S_k + nu_{k+1} / dtau_{k+1}, then
    // lambda_{k-1} = S_{k-1} nu_k / c_{k-1}.
    AdjointField lambda(shape);
    std::vector<double> nu(n, 0.0);
    std::vector<double> rhs(n);
    double inv_dt_next = 0.0;
    for (std::size_t k = steps; k >= 1; --k) {
        const auto z = source.slice(k);
        const double y_scale = c[k] / s[k];
        for (std::size_t i = 0; i < n; ++i) {
            rhs[i] = y_scale * z[i] + nu[i] * inv_dt_next;
        }
        const double inv_dt = 1.0 / (tau[k] - tau[k - 1]);
        solver.solve_slice(rhs, inv_dt, nu, SweepMode::Adjoint);
        inv_dt_next = inv_dt;
        auto out = lambda.slice(k - 1);
        const double l_scale = s[k - 1] / c[k - 1];
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = l_scale * nu[i];
        }
    }
    return lambda;
}

double adjoint_identity_gap(const TransportSolver& solver, const Field& w, const Field& z)
{
    const TransportProblem& p = solver.problem();
    require_same_shape(w.shape(), p.field_shape(), "adjoint_identity_gap");
    require_same_shape(z.shape(), p.field_shape(), "adjoint_identity_gap");
    const double nw = weighted_norm(p, w.values());
    const double nz = weighted_norm(p, z.values());
    if (nw == 0.0 || nz == 0.0) {
        return 0.0;
    }
    const AdjointField lam = solve_adjoint(solver, z);
    const Field psi = solver.solve_forward(w);
    const double lhs = weighted_inner(p, w.values(), lam.values());
    const double rhs = weighted_inner(p, psi.values(), z.values());
    return std::abs(lhs - rhs) / (nw * nz);
}

std::vector<double> boundary_trace(const SpatialGrid& grid, std::span<const BoundaryFace> faces,
                                   std::span<const double> slice, SweepMode mode)
{
    const std::size_t nv = grid.num_voxels();
    const Orientation entering = mode == SweepMode::Forward ? Orientation::Inflow
                                                            : Orientation::Outflow;
    std::vector<double> out;
    out.reserve(faces.size());
    for (const BoundaryFace& f : faces) {
        if (f.orientation == Orientation::Tangential || f.orientation == entering) {
            out.push_back(0.0);
        } else {
            out.push_back(slice[f.direction * nv + f.voxel]);
        }
    }
    return out;
}

}  // namespace bcsd
