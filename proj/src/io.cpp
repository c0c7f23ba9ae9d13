// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#include "bcsd/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bcsd/error.hpp"

namespace bcsd {

namespace {

constexpr std::string_view kFieldMagic = "# bcsd-field v1";
constexpr std::string_view kDoseMagic = "# bcsd-dose v1";
constexpr std::string_view kHistoryHeader = "iter objective grad_norm kkt_residual step";
constexpr std::array<char, 8> kBinaryMagic{'B', 'C', 'S', 'D', 'F', 'L', 'D', '1'};

class LineReader
{
  public:
    LineReader(const std::string& text, std::string origin) : in_(text), origin_(std::move(origin)) {}

    bool next(std::string& line)
    {
        if (!std::getline(in_, line)) {
            return false;
        }
        ++number_;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        return true;
    }

    std::string expect_line(const char* what)
    {
        std::string line;
        if (!next(line)) {
            fail(std::string("unexpected end of file, expected ") + what);
        }
        return line;
    }

    [[noreturn]] void fail(const std::string& msg) const
    {
        throw IoError(origin_, "line " + std::to_string(number_) + ": " + msg);
    }

    const std::string& origin() const { return origin_; }

  private:
    std::istringstream in_;
    std::string origin_;
    std::size_t number_ = 0;
};

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) {
            ++i;
        }
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') {
            ++i;
        }
        if (i > start) {
            out.push_back(line.substr(start, i - start));
        }
    }
    return out;
}

std::uint64_t parse_count(std::string_view token, const LineReader& r)
{
    std::uint64_t n = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), n);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
        r.fail("expected a count, found '" + std::string(token) + "'");
    }
    return n;
}

void append_row(std::string& out, std::span<const double> row)
{
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i > 0) {
            out += ' ';
        }
        out += format_double(row[i]);
    }
    out += '\n';
}

void read_row(LineReader& r, std::span<double> row)
{
    const std::string line = r.expect_line("a data row");
    const auto tokens = split(line);
    if (tokens.size() != row.size()) {
        r.fail("expected " + std::to_string(row.size()) + " values, found "
               + std::to_string(tokens.size()));
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
        row[i] = parse_double(tokens[i], r.origin());
    }
}

void expect_end(LineReader& r)
{
    std::string line;
    while (r.next(line)) {
        if (!split(line).empty()) {
            r.fail("trailing content");
        }
    }
}

void put_u64(std::ostream& os, std::uint64_t x)
{
    std::array<unsigned char, 8> b{};
    for (int i = 0; i < 8; ++i) {
        b[static_cast<std::size_t>(i)] = static_cast<unsigned char>(x >> (8 * i));
    }
    os.write(reinterpret_cast<const char*>(b.data()), 8);
}

std::uint64_t get_u64(std::istream& is, const std::filesystem::path& path)
{
    std::array<unsigned char, 8> b{};
    if (!is.read(reinterpret_cast<char*>(b.data()), 8)) {
        throw IoError(path.string(), "truncated binary field");
    }
    std::uint64_t x = 0;
    for (int i = 7; i >= 0; --i) {
        x = (x << 8) | b[static_cast<std::size_t>(i)];
    }
    return x;
}

}  // namespace

std::string format_double(double x)
{
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    if (ec != std::errc()) {
        throw ContractError("format_double: conversion failed");
    }
    return std::string(buf.data(), ptr);
}

double parse_double(std::string_view token, const std::string& origin)
{
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), x);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw IoError(origin, "not a number: '" + std::string(token) + "'");
    }
    return x;
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(path.string(), "cannot open for reading");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError(path.string(), "cannot open for writing");
    }
    out << text;
    out.flush();
    if (!out) {
        throw IoError(path.string(), "write failed");
    }
}

std::string format_field(const FieldShape& shape, std::span<const double> values,
                         std::string_view label)
{
    if (values.size() != shape.size()) {
        throw ContractError("format_field: value count does not match shape");
    }
    std::string out;
    out += kFieldMagic;
    out += "\nkind ";
    out += label;
    out += "\nshape " + std::to_string(shape.voxels) + ' ' + std::to_string(shape.directions) + ' '
           + std::to_string(shape.energies) + '\n';
    for (std::size_t row = 0; row < shape.energies * shape.directions; ++row) {
        append_row(out, values.subspan(row * shape.voxels, shape.voxels));
    }
    return out;
}

void write_field(const std::filesystem::path& path, const Field& f, std::string_view label)
{
    write_text(path, format_field(f.shape(), f.values(), label));
}

void write_field(const std::filesystem::path& path, const AdjointField& f, std::string_view label)
{
    write_text(path, format_field(f.shape(), f.values(), label));
}

FieldFile parse_field(const std::string& text, const std::string& origin)
{
    LineReader r(text, origin);
    if (r.expect_line("header") != kFieldMagic) {
        r.fail("missing field header");
    }
    FieldFile out;
    {
        const std::string line = r.expect_line("kind");
        const auto t = split(line);
        if (t.size() != 2 || t[0] != "kind") {
            r.fail("expected 'kind <label>'");
        }
        out.label = std::string(t[1]);
    }
    FieldShape shape;
    {
        const std::string line = r.expect_line("shape");
        const auto t = split(line);
        if (t.size() != 4 || t[0] != "shape") {
            r.fail("expected 'shape <voxels> <directions> <energies>'");
        }
        shape = {parse_count(t[1], r), parse_count(t[2], r), parse_count(t[3], r)};
    }
    out.field = Field(shape);
    auto values = out.field.values();
    for (std::size_t row = 0; row < shape.energies * shape.directions; ++row) {
        read_row(r, values.subspan(row * shape.voxels, shape.voxels));
    }
    expect_end(r);
    return out;
}

FieldFile read_field(const std::filesystem::path& path)
{
    return parse_field(read_text(path), path.string());
}

void write_field_binary(const std::filesystem::path& path, const FieldShape& shape,
                        std::span<const double> values)
{
    if (values.size() != shape.size()) {
        throw ContractError("write_field_binary: value count does not match shape");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError(path.string(), "cannot open for writing");
    }
    out.write(kBinaryMagic.data(), kBinaryMagic.size());
    put_u64(out, shape.voxels);
    put_u64(out, shape.directions);
    put_u64(out, shape.energies);
    for (double x : values) {
        put_u64(out, std::bit_cast<std::uint64_t>(x));
    }
    if (!out) {
        throw IoError(path.string(), "write failed");
    }
}

Field read_field_binary(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(path.string(), "cannot open for reading");
    }
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kBinaryMagic) {
        throw IoError(path.string(), "not a binary field file");
    }
    FieldShape shape;
    shape.voxels = get_u64(in, path);
    shape.directions = get_u64(in, path);
    shape.energies = get_u64(in, path);
    Field f(shape);
    for (double& x : f.values()) {
        x = std::bit_cast<double>(get_u64(in, path));
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw IoError(path.string(), "trailing bytes after field data");
    }
    return f;
}

void write_dose(const std::filesystem::path& path, const SpatialGrid& grid, const DoseMap& dose)
{
    if (dose.size() != grid.num_voxels()) {
        throw ContractError("write_dose: dose size does not match grid");
    }
    const auto nx = static_cast<std::size_t>(grid.cells[0]);
    std::string out;
    out += kDoseMagic;
    out += "\ncells " + std::to_string(grid.cells[0]) + ' ' + std::to_string(grid.cells[1]) + ' '
           + std::to_string(grid.cells[2]) + '\n';
    const std::span<const double> all(dose.values);
    for (std::size_t row = 0; row < dose.size() / nx; ++row) {
        append_row(out, all.subspan(row * nx, nx));
    }
    write_text(path, out);
}

DoseMap read_dose(const std::filesystem::path& path, const SpatialGrid& grid)
{
    LineReader r(read_text(path), path.string());
    if (r.expect_line("header") != kDoseMagic) {
        r.fail("missing dose header");
    }
    const std::string line = r.expect_line("cells");
    const auto t = split(line);
    if (t.size() != 4 || t[0] != "cells") {
        r.fail("expected 'cells <nx> <ny> <nz>'");
    }
    for (int a = 0; a < 3; ++a) {
        if (parse_count(t[static_cast<std::size_t>(a) + 1], r)
            != static_cast<std::uint64_t>(grid.cells[static_cast<std::size_t>(a)])) {
            r.fail("dose grid does not match the configured grid");
        }
    }
    DoseMap dose{std::vector<double>(grid.num_voxels())};
    const auto nx = static_cast<std::size_t>(grid.cells[0]);
    const std::span<double> all(dose.values);
    for (std::size_t row = 0; row < dose.size() / nx; ++row) {
        read_row(r, all.subspan(row * nx, nx));
    }
    expect_end(r);
    return dose;
}

void write_history(const std::filesystem::path& path, std::span<const OptRecord> history)
{
    std::string out(kHistoryHeader);
    out += '\n';
    for (const OptRecord& h : history) {
        out += std::to_string(h.iteration) + ' ' + format_double(h.objective) + ' '
               + format_double(h.gradient_norm) + ' ' + format_double(h.kkt_residual) + ' '
               + format_double(h.step) + '\n';
    }
    write_text(path, out);
}

std::vector<OptRecord> read_history(const std::filesystem::path& path)
{
    LineReader r(read_text(path), path.string());
    if (r.expect_line("header") != kHistoryHeader) {
        r.fail("missing history header");
    }
    std::vector<OptRecord> out;
    std::string line;
    while (r.next(line)) {
        const auto t = split(line);
        if (t.empty()) {
            continue;
        }
        if (t.size() != 5) {
            r.fail("expected 5 columns");
        }
        OptRecord h;
        h.iteration = static_cast<int>(parse_count(t[0], r));
        h.objective = parse_double(t[1], r.origin());
        h.gradient_norm = parse_double(t[2], r.origin());
        h.kkt_residual = parse_double(t[3], r.origin());
        h.step = parse_double(t[4], r.origin());
        out.push_back(h);
    }
    return out;
}

void write_dvh(const std::filesystem::path& path, const Dvh& curves)
{
    std::string out = "dose tumor normal risk\n";
    for (std::size_t b = 0; b < curves.edges.size(); ++b) {
        out += format_double(curves.edges[b]);
        for (const DvhCurve& c : curves.curves) {
            out += ' ' + format_double(c.fraction[b]);
        }
        out += '\n';
    }
    write_text(path, out);
}

void write_report(const std::filesystem::path& path, const DoseReport& report,
                  const ReportContext& context)
{
    nlohmann::ordered_json j;
    j["command"] = context.command;
    j["bounds"] = {{"d_min", report.bounds.d_min}, {"d_max", report.bounds.d_max}};
    nlohmann::ordered_json regions = nlohmann::ordered_json::object();
    for (const RegionStats& s : report.regions) {
        nlohmann::ordered_json r;
        r["voxels"] = s.voxels;
        r["min"] = s.min;
        r["mean"] = s.mean;
        r["max"] = s.max;
        r["violation_fraction"] = s.violation_fraction;
        regions[std::string(to_string(s.region))] = r;
    }
    j["regions"] = regions;
    if (context.has_optimizer) {
        j["optimizer"] = {{"iterations", context.iterations},
                          {"objective", context.objective},
                          {"kkt_residual", context.kkt_residual},
                          {"converged", context.converged}};
    }
    write_text(path, j.dump(2) + '\n');
}

}  // namespace bcsd
