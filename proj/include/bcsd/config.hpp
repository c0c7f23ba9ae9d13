// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bcsd/dose.hpp"
#include "bcsd/grid.hpp"
#include "bcsd/optimize.hpp"
#include "bcsd/physics.hpp"
#include "bcsd/quadrature.hpp"
#include "bcsd/transport.hpp"

namespace bcsd {

/// Per-voxel material names and region labels read from a phantom description.
struct Phantom
{
    std::array<int, 3> cells{1, 1, 1};
    int dims = 2;
    std::vector<std::string> material;
    std::vector<Region> region;
};

/*!
 * Read a phantom grid file. Format:
 *
 *   # comments and blank lines are ignored
 *   nx ny [nz]
 *   <ny rows of nx tokens>        (repeated nz times in 3D, z slowest)
 *
 * Each token is `material:R` with R one of T, N, R (tumor, normal, risk).
 * Rows run in increasing y, tokens in increasing x.
 */
Phantom load_phantom(const std::filesystem::path& path);
Phantom parse_phantom(const std::string& text, const std::string& origin = "<phantom>");

struct SourceTerm
{
    enum class Kind
    {
        Constant,
        Box,
        Region,
        File
    };
    Kind kind = Kind::Constant;
    double value = 0.0;
    std::array<double, 3> lo{0.0, 0.0, 0.0};
    std::array<double, 3> hi{0.0, 0.0, 0.0};
    Region region = Region::Tumor;
    double eps_lo = 0.0;
    double eps_hi = 0.0;  ///< set to eps_max when omitted
    std::optional<Vec3> cone_axis;
    double cone_min_cos = -1.0;
    std::filesystem::path file;
};

/// Sum of terms; empty means zero.
struct SourceSpec
{
    std::vector<SourceTerm> terms;
};

struct TargetSpec
{
    enum class Kind
    {
        Zero,          ///< psi_bar = 0
        RegionLevels,  ///< isotropic, angular mean = level of the voxel's region
        Forward,       ///< psi_bar = solve_forward(source)
        File           ///< field file
    };
    Kind kind = Kind::Zero;
    std::array<double, 3> levels{0.0, 0.0, 0.0};  ///< tumor, normal, risk
    SourceSpec source;
    std::filesystem::path file;
};

struct ObjectiveSpec
{
    ObjectiveKind kind = ObjectiveKind::AngleAveraged;
    std::array<double, 3> alpha{1.0, 1.0, 1.0};  ///< tumor, normal, risk
    double alpha2 = 1.0;
    TargetSpec target;
    SourceSpec q_bar;
};

struct OptimizerSpec
{
    double tolerance = 1e-6;
    int max_iterations = 200;
    double armijo = 1e-4;
    double shrink = 0.5;
    double min_step = 1e-20;
    SourceSpec initial;
};

struct ReportSpec
{
    DoseBounds bounds{0.0, 1e300};
    std::size_t dvh_bins = 50;
};

struct RunConfig
{
    std::filesystem::path path;
    std::filesystem::path base_dir;

    SpatialGrid grid;
    int quadrature_order = 8;
    AngularQuadrature quad;

    StoppingPower stopping;
    double eps_max = 1.0;
    std::size_t energy_steps = 32;
    EnergyMap energy;

    std::vector<std::string> material_names;
    std::vector<Material> materials;
    std::vector<std::size_t> material_of_voxel;
    RegionMask regions;
    CrossSections xs;

    ValidationLimits limits;
    AssumptionReport assumptions;
    SolverSettings solver;

    SourceSpec source;
    ObjectiveSpec objective;
    OptimizerSpec optimizer;
    ReportSpec report;

    std::filesystem::path output_dir = "out";
    bool binary_fields = false;

    TransportProblem problem() const { return {grid, quad, xs, energy}; }
};

/// Parse and fully validate a run configuration (A1-A4 checked before returning).
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir);

Field build_source(const SourceSpec& spec, const RunConfig& cfg);
ObjectiveConfig build_objective(const RunConfig& cfg, const TransportSolver& solver);
OptimizerSettings build_optimizer_settings(const RunConfig& cfg);

}  // namespace bcsd
