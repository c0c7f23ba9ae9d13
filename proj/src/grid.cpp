// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#include "bcsd/grid.hpp"

#include <cmath>
#include <string>

#include "bcsd/error.hpp"

namespace bcsd {

std::size_t SpatialGrid::num_voxels() const
{
    return static_cast<std::size_t>(cells[0]) * static_cast<std::size_t>(cells[1])
           * static_cast<std::size_t>(cells[2]);
}

double SpatialGrid::cell_volume() const
{
    double vol = 1.0;
    for (int a = 0; a < dims; ++a) {
        vol *= h[a];
    }
    return vol;
}

std::array<int, 3> SpatialGrid::coords(std::size_t v) const
{
    const auto nx = static_cast<std::size_t>(cells[0]);
    const auto ny = static_cast<std::size_t>(cells[1]);
    return {static_cast<int>(v % nx), static_cast<int>((v / nx) % ny),
            static_cast<int>(v / (nx * ny))};
}

Vec3 SpatialGrid::center(std::size_t v) const
{
    const auto c = coords(v);
    Vec3 x{0.0, 0.0, 0.0};
    for (int a = 0; a < dims; ++a) {
        x[a] = (c[a] + 0.5) * h[a];
    }
    return x;
}

bool SpatialGrid::contains(const Vec3& x) const
{
    for (int a = 0; a < dims; ++a) {
        if (x[a] < 0.0 || x[a] > extent[a]) {
            return false;
        }
    }
    return true;
}

SpatialGrid build_grid(int dims, std::span<const double> extent, std::span<const int> cells)
{
    if (dims != 2 && dims != 3) {
        throw ConfigError("grid dimension must be 2 or 3, got " + std::to_string(dims));
    }
    if (extent.size() != static_cast<std::size_t>(dims)
        || cells.size() != static_cast<std::size_t>(dims)) {
        throw ConfigError("grid extent and cell counts need one entry per axis");
    }
    SpatialGrid g;
    g.dims = dims;
    for (int a = 0; a < dims; ++a) {
        if (!(extent[a] > 0.0) || !std::isfinite(extent[a])) {
            throw ConfigError("grid extent along axis " + std::to_string(a) + " must be positive");
        }
        if (cells[a] <= 0) {
            throw ConfigError("grid cell count along axis " + std::to_string(a)
                              + " must be positive");
        }
        g.extent[a] = extent[a];
        g.cells[a] = cells[a];
        g.h[a] = extent[a] / cells[a];
    }
    return g;
}

std::string_view to_string(Region r)
{
    switch (r) {
    case Region::Tumor:
        return "tumor";
    case Region::Normal:
        return "normal";
    case Region::Risk:
        return "risk";
    }
    return "?";
}

Region parse_region(std::string_view label)
{
    if (label == "T" || label == "tumor") {
        return Region::Tumor;
    }
    if (label == "N" || label == "normal") {
        return Region::Normal;
    }
    if (label == "R" || label == "risk") {
        return Region::Risk;
    }
    throw ConfigError("unknown region label '" + std::string(label) + "'");
}

std::size_t RegionMask::count(Region r) const
{
    std::size_t n = 0;
    for (Region l : labels_) {
        n += (l == r) ? 1 : 0;
    }
    return n;
}

std::vector<BoundaryFace> classify_boundary(const SpatialGrid& grid, const AngularQuadrature& quad)
{
    std::vector<BoundaryFace> faces;
    for (std::size_t v = 0; v < grid.num_voxels(); ++v) {
        const auto c = grid.coords(v);
        for (int a = 0; a < grid.dims; ++a) {
            for (int side : {-1, +1}) {
                const bool on_boundary = (side < 0) ? c[a] == 0 : c[a] == grid.cells[a] - 1;
                if (!on_boundary) {
                    continue;
                }
                Vec3 n{0.0, 0.0, 0.0};
                n[a] = side;
                for (std::size_t m = 0; m < quad.size(); ++m) {
                    const double dot = n[a] * quad.direction(m)[a];
                    BoundaryFace f{v, a, side, n, m, Orientation::Tangential};
                    if (dot < 0.0) {
                        f.orientation = Orientation::Inflow;
                    } else if (dot > 0.0) {
                        f.orientation = Orientation::Outflow;
                    }
                    faces.push_back(f);
                }
            }
        }
    }
    return faces;
}

}  // namespace bcsd
