// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <span>
#include <vector>

#include "bcsd/field.hpp"
#include "bcsd/grid.hpp"
#include "bcsd/quadrature.hpp"
#include "bcsd/transport.hpp"

namespace bcsd {

/// Relative dose per voxel (no absolute calibration).
struct DoseMap
{
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t v) const { return values[v]; }
};

/// D(x) = sum_k c_k sum_m w_m S(eps_k) psi(x, m, k).
DoseMap compute_dose(const AngularQuadrature& quad, const EnergyMap& energy, const Field& psi);
DoseMap compute_dose(const TransportProblem& p, const Field& psi);

struct DoseBounds
{
    double d_min = 0.0;  ///< tumor lower bound
    double d_max = 0.0;  ///< risk-region upper bound
};

struct RegionStats
{
    Region region = Region::Normal;
    std::size_t voxels = 0;
    double min = 0.0;
    double mean = 0.0;
    double max = 0.0;
    /// Fraction of the region violating its bound: below d_min for the tumor,
    /// above d_max for the risk region, always 0 for normal tissue.
    double violation_fraction = 0.0;
};

struct DoseReport
{
    DoseBounds bounds;
    std::array<RegionStats, 3> regions;

    const RegionStats& at(Region r) const { return regions[static_cast<std::size_t>(r)]; }
};

DoseReport region_stats(const DoseMap& dose, const RegionMask& mask, const DoseBounds& bounds);

struct DvhCurve
{
    Region region = Region::Normal;
    bool empty = false;
    std::vector<double> fraction;  ///< fraction of voxels with D >= edge[b]
};

struct Dvh
{
    std::vector<double> edges;  ///< edges[b] = b * max(D) / (bins - 1)
    std::array<DvhCurve, 3> curves;

    const DvhCurve& at(Region r) const { return curves[static_cast<std::size_t>(r)]; }
};

/// Cumulative dose-volume histograms; throws ContractError for bins < 2.
Dvh dvh(const DoseMap& dose, const RegionMask& mask, std::size_t bins);

/// 1/2 sum_v alpha(v) |cell| (D_v - target_v)^2.
double dose_tracking_discrepancy(const DoseMap& dose, std::span<const double> target,
                                 std::span<const double> alpha, double cell_volume);

}  // namespace bcsd
