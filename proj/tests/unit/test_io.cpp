// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "bcsd/cli.hpp"
#include "bcsd/config.hpp"
#include "bcsd/error.hpp"
#include "bcsd/io.hpp"
#include "helpers.hpp"

using namespace bcsd;
using bcsd::testing::Gen;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(BCSD_SOURCE_DIR) / "configs";

/// Fresh scratch directory per test case.
fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("bcsd_test_io_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

const char* kMinimal = R"({
  "grid": {"dims": 2, "cells": [2, 1], "extent": [1.0, 0.5]},
  "quadrature": {"order": 4},
  "energy": {"eps_max": 1.0, "steps": 4, "stopping_power": {"kind": "constant", "value": 1.0}},
  "materials": {"water": {"sigma_t": 1.0, "sigma_s": 0.2}},
  "phantom": {"fill": "water:N", "boxes": [{"lo": [0.5, 0.0], "hi": [1.0, 0.5], "value": "water:T"}]},
  "source": {"kind": "constant", "value": 1.0}
})";

int run(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr)
{
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_command(args, out, err);
    if (out_text != nullptr) {
        *out_text = out.str();
    }
    if (err_text != nullptr) {
        *err_text = err.str();
    }
    return code;
}

}  // namespace

TEST_CASE("double formatting round trips exactly")
{
    Gen gen(61);
    for (int i = 0; i < 2000; ++i) {
        const double x = gen.uniform(-1.0, 1.0) * std::pow(10.0, gen.integer(-300, 300));
        CHECK(parse_double(format_double(x), "t") == x);
    }
    CHECK(parse_double(format_double(std::numeric_limits<double>::denorm_min()), "t")
          == std::numeric_limits<double>::denorm_min());
    CHECK(format_double(0.5) == "0.5");
    CHECK_THROWS_AS(parse_double("1.5x", "t"), IoError);
}

TEST_CASE("minimal config parses and validates")
{
    const RunConfig cfg = parse_config_text(kMinimal, ".");
    CHECK(cfg.grid.num_voxels() == 2);
    CHECK(cfg.quad.size() == 4);
    CHECK(cfg.energy.num_nodes() == 5);
    CHECK(cfg.regions[0] == Region::Normal);
    CHECK(cfg.regions[1] == Region::Tumor);
    CHECK(cfg.xs.sigma_s[1] == 0.2);
    CHECK(cfg.assumptions.all_passed());
    const Field q = build_source(cfg.source, cfg);
    CHECK(q(2, 1, 1) == 1.0);
}

TEST_CASE("config errors name the offending key or assumption")
{
    std::string bad = kMinimal;
    bad.replace(bad.find("\"sigma_t\": 1.0"), 14, "\"sigma_t\": -1.0");
    try {
        (void)parse_config_text(bad, ".");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        CHECK(what.find("A1") != std::string::npos);
        CHECK(what.find("voxel 0") != std::string::npos);
    }

    std::string missing = kMinimal;
    missing.replace(missing.find("\"quadrature\""), 12, "\"quadratur\"");
    try {
        (void)parse_config_text(missing, ".");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("quadratur") != std::string::npos);
    }

    std::string typed = kMinimal;
    typed.replace(typed.find("\"order\": 4"), 10, "\"order\": \"4\"");
    CHECK_THROWS_AS(parse_config_text(typed, "."), ConfigError);

    CHECK_THROWS_AS(parse_config_text("{", "."), ConfigError);
    CHECK_THROWS_AS(parse_config(kConfigs / "does_not_exist.json"), ConfigError);
}

TEST_CASE("Moller stopping power through the binding energy fails A4")
{
    CHECK_NOTHROW(parse_config(kConfigs / "water_moller.json"));
    try {
        (void)parse_config(kConfigs / "moller_out_of_range.json");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("A4") != std::string::npos);
    }
}

TEST_CASE("bundled configs load")
{
    for (const char* name : {"reference.json", "verify16.json", "exact_recovery.json"}) {
        CAPTURE(name);
        const RunConfig cfg = parse_config(kConfigs / name);
        CHECK(cfg.assumptions.all_passed());
    }
    const RunConfig ref = parse_config(kConfigs / "reference.json");
    CHECK(ref.grid.cells[0] == 32);
    CHECK(ref.quad.size() == 8);
    CHECK(ref.energy.num_nodes() == 33);
}

TEST_CASE("phantom files")
{
    const Phantom water = parse_phantom("3 2\nwater:N water:N water:N\nwater:N water:N water:N\n");
    CHECK(water.cells[0] == 3);
    CHECK(water.cells[1] == 2);
    for (std::size_t v = 0; v < 6; ++v) {
        CHECK(water.material[v] == "water");
        CHECK(water.region[v] == Region::Normal);
    }

    const Phantom checker = load_phantom(kConfigs / "phantoms" / "checker8.txt");
    CHECK(checker.material.size() == 64);
    // row r of the file is voxel row r, x fastest
    CHECK(checker.material[0] == "bone");
    CHECK(checker.material[2] == "water");
    CHECK(checker.region[6] == Region::Risk);
    CHECK(checker.region[3 * 8 + 3] == Region::Tumor);
    CHECK(checker.region[3 * 8 + 4] == Region::Tumor);
    for (int j = 0; j < 8; ++j) {
        for (int i = 0; i < 8; ++i) {
            const bool bone = ((i / 2) + (j / 2)) % 2 == 0;
            CHECK(checker.material[static_cast<std::size_t>(j * 8 + i)] == (bone ? "bone" : "water"));
        }
    }

    try {
        (void)parse_phantom("2 3\nwater:N water:N\nwater:N water:N\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("expected 3 rows, found 2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_phantom("1 1\nwater:X\n"), ConfigError);
    CHECK_THROWS_AS(parse_phantom("2 1\nwater:N\n"), ConfigError);
}

TEST_CASE("text fields round trip bit-identically")
{
    Gen gen(62);
    const fs::path dir = scratch("fields");
    for (int trial = 0; trial < 5; ++trial) {
        const FieldShape shape{static_cast<std::size_t>(gen.integer(1, 9)), static_cast<std::size_t>(gen.integer(1, 8)),
                               static_cast<std::size_t>(gen.integer(1, 6))};
        Field f = gen.field(shape, -1.0, 1.0);
        f.values()[0] = 1e-310;
        const fs::path path = dir / "psi.txt";
        write_field(path, f, "psi");
        const FieldFile back = read_field(path);
        CHECK(back.label == "psi");
        CHECK(back.field == f);
        // writing the read-back field reproduces the same bytes
        write_field(dir / "again.txt", back.field, "psi");
        CHECK(read_text(path) == read_text(dir / "again.txt"));

        write_field_binary(dir / "psi.bin", shape, f.values());
        CHECK(read_field_binary(dir / "psi.bin") == f);
    }
    CHECK_THROWS_AS(parse_field("# bcsd-field v1\nkind x\nshape 2 1 1\n1\n"), IoError);
    CHECK_THROWS_AS(read_field(dir / "missing.txt"), IoError);
}

TEST_CASE("history files")
{
    const fs::path dir = scratch("history");
    write_history(dir / "empty.txt", {});
    const std::string text = read_text(dir / "empty.txt");
    CHECK(text == "iter objective grad_norm kkt_residual step\n");
    CHECK(read_history(dir / "empty.txt").empty());

    const std::vector<OptRecord> h{{0, 2.5, 1.0, 0.3, 0.0}, {1, 1.0 / 3.0, 0.1, 1e-7, 0.5}};
    write_history(dir / "h.txt", h);
    const auto back = read_history(dir / "h.txt");
    REQUIRE(back.size() == 2);
    CHECK(back[1].iteration == 1);
    CHECK(back[1].objective == 1.0 / 3.0);
    CHECK(back[1].kkt_residual == 1e-7);
    CHECK(back[1].step == 0.5);
}

TEST_CASE("dose files follow the voxel order")
{
    const fs::path dir = scratch("dose");
    const std::vector<double> extent{1.0, 1.0};
    const std::vector<int> cells{3, 2};
    const SpatialGrid g = build_grid(2, extent, cells);
    const DoseMap d{{0.0, 1.0, 2.0, 10.0, 11.0, 12.5}};
    write_dose(dir / "dose.txt", g, d);
    CHECK(read_text(dir / "dose.txt") == "# bcsd-dose v1\ncells 3 2 1\n0 1 2\n10 11 12.5\n");
    CHECK(read_dose(dir / "dose.txt", g).values == d.values);
}

TEST_CASE("unknown subcommand is a usage error")
{
    std::string err;
    CHECK(run({"frobnicate"}, nullptr, &err) == kExitUsage);
    CHECK_FALSE(err.empty());
    CHECK(run({}) == kExitUsage);
    CHECK(run({"forward"}) == kExitUsage);
}

TEST_CASE("bad config through the command line exits with status 2")
{
    std::string err;
    CHECK(run({"forward", "--config", (kConfigs / "moller_out_of_range.json").string()}, nullptr, &err)
          == kExitUsage);
    CHECK(err.find("A4") != std::string::npos);
}

TEST_CASE("forward then report")
{
    const fs::path dir = scratch("forward");
    const std::string cfg = (kConfigs / "water_moller.json").string();
    REQUIRE(run({"forward", "--config", cfg, "--out", dir.string()}) == kExitOk);
    for (const char* f : {"psi.txt", "dose.txt", "dvh.txt", "report.json"}) {
        CHECK(fs::exists(dir / f));
    }
    const std::string dose = read_text(dir / "dose.txt");
    fs::remove(dir / "dose.txt");
    REQUIRE(run({"report", "--config", cfg, "--out", dir.string()}) == kExitOk);
    CHECK(read_text(dir / "dose.txt") == dose);
}

TEST_CASE("optimize on the exact-recovery instance")
{
    const fs::path dir = scratch("optimize");
    REQUIRE(run({"optimize", "--config", (kConfigs / "exact_recovery.json").string(), "--out", dir.string()})
            == kExitOk);
    const auto history = read_history(dir / "history.txt");
    REQUIRE_FALSE(history.empty());
    CHECK(history.back().kkt_residual <= 1e-7);
    for (const char* f : {"q.txt", "psi.txt", "lambda.txt", "dose.txt", "dvh.txt", "report.json"}) {
        CHECK(fs::exists(dir / f));
    }
}

TEST_CASE("verify on the bundled 16x16 config passes")
{
    std::string out;
    CHECK(run({"verify", "--config", (kConfigs / "verify16.json").string()}, &out) == kExitOk);
    CHECK(out.find("all checks passed") != std::string::npos);
}
