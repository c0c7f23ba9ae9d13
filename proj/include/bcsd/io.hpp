// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bcsd/dose.hpp"
#include "bcsd/field.hpp"
#include "bcsd/grid.hpp"
#include "bcsd/optimize.hpp"

namespace bcsd {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);
double parse_double(std::string_view token, const std::string& origin);

/*!
 * Text field layout:
 *
 *   # bcsd-field v1
 *   kind <label>
 *   shape <voxels> <directions> <energies>
 *   <one row per (energy k, direction m), k slowest, holding `voxels` values>
 *
 * Values use the shortest round-trip representation, so a write/read cycle is
 * bit-identical.
 */
std::string format_field(const FieldShape& shape, std::span<const double> values,
                         std::string_view label);
void write_field(const std::filesystem::path& path, const Field& f, std::string_view label = "state");
void write_field(const std::filesystem::path& path, const AdjointField& f,
                 std::string_view label = "adjoint");

struct FieldFile
{
    std::string label;
    Field field;
};

FieldFile parse_field(const std::string& text, const std::string& origin = "<field>");
FieldFile read_field(const std::filesystem::path& path);

/*!
 * Binary mirror: magic "BCSDFLD1", three little-endian u64 (voxels,
 * directions, energies), then the values as little-endian f64 in the text
 * layout's order.
 */
void write_field_binary(const std::filesystem::path& path, const FieldShape& shape,
                        std::span<const double> values);
Field read_field_binary(const std::filesystem::path& path);

/*!
 * Dose layout:
 *
 *   # bcsd-dose v1
 *   cells <nx> <ny> <nz>
 *   <ny * nz rows of nx values>   (y fastest among rows, z slowest)
 */
void write_dose(const std::filesystem::path& path, const SpatialGrid& grid, const DoseMap& dose);
DoseMap read_dose(const std::filesystem::path& path, const SpatialGrid& grid);

/// Header line "iter objective grad_norm kkt_residual step" then one row per record.
void write_history(const std::filesystem::path& path, std::span<const OptRecord> history);
std::vector<OptRecord> read_history(const std::filesystem::path& path);

/// Header "dose tumor normal risk" then one row per bin edge.
void write_dvh(const std::filesystem::path& path, const Dvh& curves);

struct ReportContext
{
    std::string command;
    std::size_t iterations = 0;
    double objective = 0.0;
    double kkt_residual = 0.0;
    bool has_optimizer = false;
    bool converged = false;
};

/// JSON summary of region statistics, bounds and run metadata.
void write_report(const std::filesystem::path& path, const DoseReport& report,
                  const ReportContext& context);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace bcsd
