// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "bcsd/field.hpp"
#include "bcsd/grid.hpp"
#include "bcsd/transport.hpp"

namespace bcsd {

/*!
 * Adjoint of solve_forward with respect to weighted_inner.
 *
 * Marches backward from eps_max with downwind (reversed) sweeps, zero data
 * on the outflow boundary and the same absorption and scattering. The
 * result is the exact transpose of the discrete forward map, so
 * <w, solve_adjoint(z)> = <solve_forward(w), z> up to the source-iteration
 * tolerance. Because the forward step lags its source, the slice at
 * eps_max is identically zero.
 */
AdjointField solve_adjoint(const TransportSolver& solver, const Field& source);

/// |<w, X* z> - <X w, z>| / (|w| |z|); zero when either field vanishes.
double adjoint_identity_gap(const TransportSolver& solver, const Field& w, const Field& z);

/*!
 * Face values seen by the upwind stencil on boundary faces: the boundary
 * datum (zero) on faces the sweep enters through, the cell value on faces it
 * leaves through. Forward sweeps enter through inflow faces, adjoint sweeps
 * through outflow faces. One entry per face, tangential faces give zero.
 */
std::vector<double> boundary_trace(const SpatialGrid& grid, std::span<const BoundaryFace> faces,
                                   std::span<const double> slice, SweepMode mode);

}  // namespace bcsd
