// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "bcsd/quadrature.hpp"

namespace bcsd {

/*!
 * Uniform Cartesian grid on the box [0, extent_0] x ... x [0, extent_{d-1}].
 *
 * Voxels are numbered with x fastest: v = i + nx * (j + ny * k). Unused axes
 * in two dimensions carry one cell of unit size so that volume and index
 * arithmetic need no special cases.
 */
struct SpatialGrid
{
    int dims = 2;
    std::array<int, 3> cells{1, 1, 1};
    std::array<double, 3> extent{1.0, 1.0, 1.0};
    std::array<double, 3> h{1.0, 1.0, 1.0};

    std::size_t num_voxels() const;
    double cell_volume() const;
    double domain_volume() const { return cell_volume() * static_cast<double>(num_voxels()); }

    std::size_t index(int i, int j, int k = 0) const
    {
        return static_cast<std::size_t>(i)
               + static_cast<std::size_t>(cells[0])
                     * (static_cast<std::size_t>(j)
                        + static_cast<std::size_t>(cells[1]) * static_cast<std::size_t>(k));
    }
    std::array<int, 3> coords(std::size_t v) const;
    Vec3 center(std::size_t v) const;
    bool contains(const Vec3& x) const;

    bool operator==(const SpatialGrid&) const = default;
};

SpatialGrid build_grid(int dims, std::span<const double> extent, std::span<const int> cells);

enum class Region : std::uint8_t
{
    Tumor,
    Normal,
    Risk
};

inline constexpr std::array<Region, 3> kAllRegions{Region::Tumor, Region::Normal, Region::Risk};

std::string_view to_string(Region r);
/// Accepts the single-letter labels T, N, R and the full lower-case names.
Region parse_region(std::string_view label);

/// One label per voxel; the three regions partition the domain.
class RegionMask
{
  public:
    RegionMask() = default;
    explicit RegionMask(std::vector<Region> labels) : labels_(std::move(labels)) {}

    std::size_t size() const { return labels_.size(); }
    Region operator[](std::size_t v) const { return labels_[v]; }
    std::span<const Region> labels() const { return labels_; }
    std::size_t count(Region r) const;

  private:
    std::vector<Region> labels_;
};

enum class Orientation : std::uint8_t
{
    Inflow,
    Outflow,
    Tangential
};

/// A boundary face of a voxel paired with one quadrature direction.
struct BoundaryFace
{
    std::size_t voxel = 0;
    int axis = 0;
    int side = 0;  ///< -1 for the low face, +1 for the high face
    Vec3 normal{};
    std::size_t direction = 0;
    Orientation orientation = Orientation::Tangential;
};

/// Classify every (boundary face, direction) pair by the sign of n . Omega.
std::vector<BoundaryFace> classify_boundary(const SpatialGrid& grid, const AngularQuadrature& quad);

}  // namespace bcsd
