// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#include "bcsd/config.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "bcsd/error.hpp"
#include "bcsd/io.hpp"

namespace bcsd {

using nlohmann::json;

namespace {

/// A JSON value together with its dotted key path, for error messages.
class Node
{
  public:
    Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

    const std::string& path() const { return path_; }
    const json& raw() const { return *j_; }

    bool has(const char* key) const { return j_->is_object() && j_->contains(key); }

    Node at(const char* key) const
    {
        require_object();
        if (!j_->contains(key)) {
            throw ConfigError("missing key '" + join(key) + "'");
        }
        return {(*j_)[key], join(key)};
    }

    Node at(std::size_t i) const { return {(*j_)[i], path_ + "[" + std::to_string(i) + "]"}; }

    void require_object() const
    {
        if (!j_->is_object()) {
            throw ConfigError("key '" + path_ + "': expected an object");
        }
    }

    std::size_t array_size() const
    {
        if (!j_->is_array()) {
            throw ConfigError("key '" + path_ + "': expected an array");
        }
        return j_->size();
    }

    void allow_only(std::initializer_list<const char*> keys) const
    {
        require_object();
        for (const auto& item : j_->items()) {
            const bool known = std::any_of(keys.begin(), keys.end(),
                                           [&](const char* k) { return item.key() == k; });
            if (!known) {
                throw ConfigError("unknown key '" + join(item.key().c_str()) + "'");
            }
        }
    }

    double number() const
    {
        if (!j_->is_number()) {
            throw ConfigError("key '" + path_ + "': expected a number");
        }
        return j_->get<double>();
    }

    long long integer() const
    {
        if (!j_->is_number_integer()) {
            throw ConfigError("key '" + path_ + "': expected an integer");
        }
        return j_->get<long long>();
    }

    std::string string() const
    {
        if (!j_->is_string()) {
            throw ConfigError("key '" + path_ + "': expected a string");
        }
        return j_->get<std::string>();
    }

    bool boolean() const
    {
        if (!j_->is_boolean()) {
            throw ConfigError("key '" + path_ + "': expected true or false");
        }
        return j_->get<bool>();
    }

    std::vector<double> numbers() const
    {
        std::vector<double> out(array_size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = at(i).number();
        }
        return out;
    }

    double number_or(const char* key, double fallback) const
    {
        return has(key) ? at(key).number() : fallback;
    }
    long long integer_or(const char* key, long long fallback) const
    {
        return has(key) ? at(key).integer() : fallback;
    }
    bool boolean_or(const char* key, bool fallback) const
    {
        return has(key) ? at(key).boolean() : fallback;
    }

  private:
    std::string join(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* j_;
    std::string path_;
};

std::array<double, 3> point(const Node& n, int dims)
{
    const auto v = n.numbers();
    if (v.size() != static_cast<std::size_t>(dims)) {
        throw ConfigError("key '" + n.path() + "': expected " + std::to_string(dims) + " coordinates");
    }
    std::array<double, 3> p{0.0, 0.0, 0.0};
    std::copy(v.begin(), v.end(), p.begin());
    return p;
}

SourceTerm parse_source_term(const Node& n, const RunConfig& cfg)
{
    n.allow_only({"kind", "value", "lo", "hi", "region", "eps", "cone", "file"});
    SourceTerm t;
    const std::string kind = n.at("kind").string();
    t.eps_hi = cfg.eps_max;
    if (n.has("eps")) {
        const auto e = n.at("eps").numbers();
        if (e.size() != 2 || !(e[0] <= e[1])) {
            throw ConfigError("key '" + n.path() + ".eps': expected [lo, hi] with lo <= hi");
        }
        t.eps_lo = e[0];
        t.eps_hi = e[1];
    }
    if (n.has("cone")) {
        const Node c = n.at("cone");
        c.allow_only({"axis", "min_cos"});
        const auto a = point(c.at("axis"), cfg.grid.dims);
        const double len = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
        if (!(len > 0.0)) {
            throw ConfigError("key '" + c.path() + ".axis': must be non-zero");
        }
        t.cone_axis = Vec3{a[0] / len, a[1] / len, a[2] / len};
        t.cone_min_cos = c.at("min_cos").number();
    }
    if (kind == "file") {
        t.kind = SourceTerm::Kind::File;
        t.file = cfg.base_dir / n.at("file").string();
        return t;
    }
    t.value = n.at("value").number();
    if (kind == "constant") {
        t.kind = SourceTerm::Kind::Constant;
    } else if (kind == "box") {
        t.kind = SourceTerm::Kind::Box;
        t.lo = point(n.at("lo"), cfg.grid.dims);
        t.hi = point(n.at("hi"), cfg.grid.dims);
    } else if (kind == "region") {
        t.kind = SourceTerm::Kind::Region;
        t.region = parse_region(n.at("region").string());
    } else {
        throw ConfigError("key '" + n.path() + ".kind': unknown source kind '" + kind + "'");
    }
    return t;
}

SourceSpec parse_source(const Node& n, const RunConfig& cfg)
{
    SourceSpec s;
    if (n.raw().is_array()) {
        for (std::size_t i = 0; i < n.array_size(); ++i) {
            s.terms.push_back(parse_source_term(n.at(i), cfg));
        }
    } else {
        s.terms.push_back(parse_source_term(n, cfg));
    }
    return s;
}

StoppingPower parse_stopping_power(const Node& n)
{
    const std::string kind = n.at("kind").string();
    if (kind == "constant") {
        n.allow_only({"kind", "value"});
        return StoppingPower::constant(n.at("value").number());
    }
    if (kind == "tabulated") {
        n.allow_only({"kind", "table"});
        const Node table = n.at("table");
        std::vector<double> eps;
        std::vector<double> values;
        for (std::size_t i = 0; i < table.array_size(); ++i) {
            const auto row = table.at(i).numbers();
            if (row.size() != 2) {
                throw ConfigError("key '" + table.at(i).path() + "': expected [eps, S]");
            }
            eps.push_back(row[0]);
            values.push_back(row[1]);
        }
        return StoppingPower::tabulated(std::move(eps), std::move(values));
    }
    if (kind == "moller") {
        n.allow_only({"kind", "density", "binding_energy", "electron_radius", "beam_energy"});
        MollerParameters p;
        p.density = n.number_or("density", p.density);
        p.binding_energy = n.number_or("binding_energy", p.binding_energy);
        p.electron_radius = n.number_or("electron_radius", p.electron_radius);
        p.beam_energy = n.number_or("beam_energy", p.beam_energy);
        return StoppingPower::moller(p);
    }
    throw ConfigError("key '" + n.path() + ".kind': unknown stopping power kind '" + kind + "'");
}

Material parse_material(const Node& n)
{
    n.allow_only({"sigma_t", "sigma_s", "kernel", "g"});
    Material m;
    m.sigma_t = n.at("sigma_t").number();
    m.sigma_s = n.at("sigma_s").number();
    m.kernel = n.has("kernel") ? parse_kernel_kind(n.at("kernel").string()) : KernelKind::Isotropic;
    m.g = n.number_or("g", 0.0);
    return m;
}

std::pair<std::string, Region> split_label(const std::string& token, const std::string& where)
{
    const auto colon = token.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == token.size()) {
        throw ConfigError(where + ": expected 'material:REGION', found '" + token + "'");
    }
    return {token.substr(0, colon), parse_region(token.substr(colon + 1))};
}

Phantom inline_phantom(const Node& n, const SpatialGrid& grid)
{
    n.allow_only({"fill", "boxes"});
    Phantom ph;
    ph.dims = grid.dims;
    ph.cells = grid.cells;
    const auto [fill_mat, fill_region] = split_label(n.at("fill").string(), n.at("fill").path());
    ph.material.assign(grid.num_voxels(), fill_mat);
    ph.region.assign(grid.num_voxels(), fill_region);
    if (!n.has("boxes")) {
        return ph;
    }
    const Node boxes = n.at("boxes");
    for (std::size_t b = 0; b < boxes.array_size(); ++b) {
        const Node box = boxes.at(b);
        box.allow_only({"lo", "hi", "value"});
        const auto lo = point(box.at("lo"), grid.dims);
        const auto hi = point(box.at("hi"), grid.dims);
        const auto [mat, region] = split_label(box.at("value").string(), box.at("value").path());
        for (std::size_t v = 0; v < grid.num_voxels(); ++v) {
            const Vec3 c = grid.center(v);
            bool inside = true;
            for (int a = 0; a < grid.dims; ++a) {
                const auto i = static_cast<std::size_t>(a);
                inside = inside && c[i] >= lo[i] && c[i] <= hi[i];
            }
            if (inside) {
                ph.material[v] = mat;
                ph.region[v] = region;
            }
        }
    }
    return ph;
}

TargetSpec parse_target(const Node& n, const RunConfig& cfg)
{
    TargetSpec t;
    const std::string kind = n.at("kind").string();
    if (kind == "zero") {
        n.allow_only({"kind"});
        t.kind = TargetSpec::Kind::Zero;
    } else if (kind == "region_levels") {
        n.allow_only({"kind", "tumor", "normal", "risk"});
        t.kind = TargetSpec::Kind::RegionLevels;
        t.levels = {n.number_or("tumor", 0.0), n.number_or("normal", 0.0), n.number_or("risk", 0.0)};
    } else if (kind == "forward") {
        n.allow_only({"kind", "source"});
        t.kind = TargetSpec::Kind::Forward;
        t.source = parse_source(n.at("source"), cfg);
    } else if (kind == "file") {
        n.allow_only({"kind", "file"});
        t.kind = TargetSpec::Kind::File;
        t.file = cfg.base_dir / n.at("file").string();
    } else {
        throw ConfigError("key '" + n.path() + ".kind': unknown target kind '" + kind + "'");
    }
    return t;
}

void parse_objective(const Node& n, RunConfig& cfg)
{
    n.allow_only({"kind", "alpha", "alpha2", "target", "q_bar"});
    ObjectiveSpec& o = cfg.objective;
    if (n.has("kind")) {
        o.kind = parse_objective_kind(n.at("kind").string());
    }
    if (n.has("alpha")) {
        const Node a = n.at("alpha");
        a.allow_only({"tumor", "normal", "risk"});
        o.alpha = {a.number_or("tumor", 1.0), a.number_or("normal", 1.0), a.number_or("risk", 1.0)};
    }
    o.alpha2 = n.number_or("alpha2", o.alpha2);
    if (n.has("target")) {
        o.target = parse_target(n.at("target"), cfg);
    }
    if (n.has("q_bar")) {
        o.q_bar = parse_source(n.at("q_bar"), cfg);
    }
}

void parse_optimizer(const Node& n, RunConfig& cfg)
{
    n.allow_only({"tolerance", "max_iterations", "armijo", "shrink", "min_step", "initial"});
    OptimizerSpec& o = cfg.optimizer;
    o.tolerance = n.number_or("tolerance", o.tolerance);
    o.max_iterations = static_cast<int>(n.integer_or("max_iterations", o.max_iterations));
    o.armijo = n.number_or("armijo", o.armijo);
    o.shrink = n.number_or("shrink", o.shrink);
    o.min_step = n.number_or("min_step", o.min_step);
    if (n.has("initial")) {
        o.initial = parse_source(n.at("initial"), cfg);
    }
}

RunConfig parse_document(const json& doc, const std::filesystem::path& base_dir)
{
    const Node root(doc, "");
    root.allow_only({"grid", "quadrature", "energy", "materials", "phantom", "physics", "solver",
                     "source", "objective", "optimizer", "report", "output"});
    RunConfig cfg;
    cfg.base_dir = base_dir;

    {
        const Node g = root.at("grid");
        g.allow_only({"dims", "cells", "extent"});
        const int dims = static_cast<int>(g.at("dims").integer());
        const auto extent = g.at("extent").numbers();
        std::vector<int> cells;
        const Node c = g.at("cells");
        for (std::size_t i = 0; i < c.array_size(); ++i) {
            cells.push_back(static_cast<int>(c.at(i).integer()));
        }
        cfg.grid = build_grid(dims, extent, cells);
    }
    {
        const Node q = root.at("quadrature");
        q.allow_only({"order"});
        cfg.quadrature_order = static_cast<int>(q.at("order").integer());
        cfg.quad = build_quadrature(cfg.grid.dims, cfg.quadrature_order);
    }
    {
        const Node e = root.at("energy");
        e.allow_only({"eps_max", "steps", "stopping_power"});
        cfg.eps_max = e.at("eps_max").number();
        const long long steps = e.at("steps").integer();
        if (!(cfg.eps_max > 0.0) || steps < 1) {
            throw ConfigError("key 'energy': eps_max must be positive and steps >= 1");
        }
        cfg.energy_steps = static_cast<std::size_t>(steps);
        cfg.stopping = parse_stopping_power(e.at("stopping_power"));
    }
    {
        static const json empty = json::object();
        const Node p = root.has("physics") ? root.at("physics") : Node(empty, "physics");
        if (root.has("physics")) {
            p.allow_only({"kernel_bound", "allow_supercritical", "energy_samples"});
        }
        cfg.limits.dims = cfg.grid.dims;
        cfg.limits.eps_lo = 0.0;
        cfg.limits.eps_hi = cfg.eps_max;
        cfg.limits.kernel_bound = p.number_or("kernel_bound", cfg.limits.kernel_bound);
        cfg.limits.allow_supercritical = p.boolean_or("allow_supercritical", false);
        cfg.limits.energy_samples =
            static_cast<std::size_t>(p.integer_or("energy_samples",
                                                  static_cast<long long>(cfg.limits.energy_samples)));
    }
    {
        const Node m = root.at("materials");
        m.require_object();
        for (const auto& item : m.raw().items()) {
            cfg.material_names.push_back(item.key());
            cfg.materials.push_back(parse_material(Node(item.value(), "materials." + item.key())));
        }
        if (cfg.materials.empty()) {
            throw ConfigError("key 'materials': at least one material required");
        }
    }
    {
        const Node ph = root.at("phantom");
        Phantom phantom;
        if (ph.has("file")) {
            ph.allow_only({"file"});
            phantom = load_phantom(base_dir / ph.at("file").string());
            if (phantom.dims != cfg.grid.dims || phantom.cells != cfg.grid.cells) {
                throw ConfigError("phantom '" + ph.at("file").string()
                                  + "' does not match the grid dimensions");
            }
        } else {
            phantom = inline_phantom(ph, cfg.grid);
        }
        cfg.material_of_voxel.resize(phantom.material.size());
        for (std::size_t v = 0; v < phantom.material.size(); ++v) {
            const auto it = std::find(cfg.material_names.begin(), cfg.material_names.end(),
                                      phantom.material[v]);
            if (it == cfg.material_names.end()) {
                throw ConfigError("phantom voxel " + std::to_string(v) + " uses unknown material '"
                                  + phantom.material[v] + "'");
            }
            cfg.material_of_voxel[v] = static_cast<std::size_t>(it - cfg.material_names.begin());
        }
        cfg.regions = RegionMask(phantom.region);
        cfg.xs = CrossSections::from_materials(cfg.materials, cfg.material_of_voxel);
    }

    cfg.assumptions = validate_assumptions(cfg.xs, cfg.stopping, cfg.limits);
    cfg.assumptions.throw_if_failed();
    cfg.energy = build_energy_map(cfg.stopping, cfg.eps_max, cfg.energy_steps);

    if (root.has("solver")) {
        const Node s = root.at("solver");
        s.allow_only({"tolerance", "max_iterations", "threads"});
        cfg.solver.tolerance = s.number_or("tolerance", cfg.solver.tolerance);
        cfg.solver.max_iterations =
            static_cast<int>(s.integer_or("max_iterations", cfg.solver.max_iterations));
        cfg.solver.threads = static_cast<int>(s.integer_or("threads", cfg.solver.threads));
    }
    cfg.solver.validate();

    if (root.has("source")) {
        cfg.source = parse_source(root.at("source"), cfg);
    }
    if (root.has("objective")) {
        parse_objective(root.at("objective"), cfg);
    }
    if (root.has("optimizer")) {
        parse_optimizer(root.at("optimizer"), cfg);
    }
    if (root.has("report")) {
        const Node r = root.at("report");
        r.allow_only({"d_min", "d_max", "dvh_bins"});
        cfg.report.bounds.d_min = r.number_or("d_min", cfg.report.bounds.d_min);
        cfg.report.bounds.d_max = r.number_or("d_max", cfg.report.bounds.d_max);
        const long long bins = r.integer_or("dvh_bins", static_cast<long long>(cfg.report.dvh_bins));
        if (bins < 2) {
            throw ConfigError("key 'report.dvh_bins': at least 2 bins required");
        }
        cfg.report.dvh_bins = static_cast<std::size_t>(bins);
    }
    if (root.has("output")) {
        const Node o = root.at("output");
        o.allow_only({"dir", "binary"});
        if (o.has("dir")) {
            cfg.output_dir = base_dir / o.at("dir").string();
        }
        cfg.binary_fields = o.boolean_or("binary", false);
    } else {
        cfg.output_dir = base_dir / "out";
    }
    return cfg;
}

bool in_window(double eps, const SourceTerm& t)
{
    return eps >= t.eps_lo && eps <= t.eps_hi;
}

bool in_cone(const Vec3& omega, const SourceTerm& t)
{
    if (!t.cone_axis) {
        return true;
    }
    const Vec3& a = *t.cone_axis;
    return omega[0] * a[0] + omega[1] * a[1] + omega[2] * a[2] >= t.cone_min_cos;
}

}  // namespace

Phantom parse_phantom(const std::string& text, const std::string& origin)
{
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream ls(line);
        std::vector<std::string> tokens;
        for (std::string t; ls >> t;) {
            tokens.push_back(t);
        }
        if (!tokens.empty()) {
            rows.push_back(std::move(tokens));
            line_numbers.push_back(number);
        }
    }
    if (rows.empty()) {
        throw ConfigError(origin + ": empty phantom file");
    }
    Phantom ph;
    const auto& header = rows.front();
    if (header.size() != 2 && header.size() != 3) {
        throw ConfigError(origin + ": header must be 'nx ny [nz]'");
    }
    ph.dims = static_cast<int>(header.size());
    for (std::size_t a = 0; a < header.size(); ++a) {
        std::size_t used = 0;
        int n = 0;
        try {
            n = std::stoi(header[a], &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != header[a].size() || n < 1) {
            throw ConfigError(origin + ": invalid dimension '" + header[a] + "' in header");
        }
        ph.cells[a] = n;
    }
    const auto nx = static_cast<std::size_t>(ph.cells[0]);
    const std::size_t expected_rows =
        static_cast<std::size_t>(ph.cells[1]) * static_cast<std::size_t>(ph.cells[2]);
    if (rows.size() - 1 != expected_rows) {
        throw ConfigError(origin + ": expected " + std::to_string(expected_rows) + " rows, found "
                          + std::to_string(rows.size() - 1));
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const std::string where = origin + ":" + std::to_string(line_numbers[r]);
        if (rows[r].size() != nx) {
            throw ConfigError(where + ": expected " + std::to_string(nx) + " entries, found "
                              + std::to_string(rows[r].size()));
        }
        for (const std::string& token : rows[r]) {
            auto [mat, region] = split_label(token, where);
            ph.material.push_back(std::move(mat));
            ph.region.push_back(region);
        }
    }
    return ph;
}

Phantom load_phantom(const std::filesystem::path& path)
{
    return parse_phantom(read_text(path), path.string());
}

RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed configuration: ") + e.what());
    }
    return parse_document(doc, base_dir);
}

RunConfig parse_config(const std::filesystem::path& path)
{
    std::string text;
    try {
        text = read_text(path);
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    RunConfig cfg = parse_config_text(text, path.parent_path());
    cfg.path = path;
    return cfg;
}

Field build_source(const SourceSpec& spec, const RunConfig& cfg)
{
    const TransportProblem p = cfg.problem();
    const FieldShape shape = p.field_shape();
    Field q(shape);
    const auto eps = cfg.energy.eps_nodes();
    for (const SourceTerm& t : spec.terms) {
        if (t.kind == SourceTerm::Kind::File) {
            FieldFile file = read_field(t.file);
            if (file.field.shape() != shape) {
                throw ConfigError(t.file.string() + ": field shape " + to_string(file.field.shape())
                                  + " does not match " + to_string(shape));
            }
            q += file.field;
            continue;
        }
        std::vector<double> spatial(shape.voxels, 0.0);
        for (std::size_t v = 0; v < shape.voxels; ++v) {
            bool inside = true;
            if (t.kind == SourceTerm::Kind::Box) {
                const Vec3 c = cfg.grid.center(v);
                for (int a = 0; a < cfg.grid.dims; ++a) {
                    const auto i = static_cast<std::size_t>(a);
                    inside = inside && c[i] >= t.lo[i] && c[i] <= t.hi[i];
                }
            } else if (t.kind == SourceTerm::Kind::Region) {
                inside = cfg.regions[v] == t.region;
            }
            spatial[v] = inside ? t.value : 0.0;
        }
        for (std::size_t k = 0; k < shape.energies; ++k) {
            if (!in_window(eps[k], t)) {
                continue;
            }
            for (std::size_t m = 0; m < shape.directions; ++m) {
                if (!in_cone(cfg.quad.direction(m), t)) {
                    continue;
                }
                for (std::size_t v = 0; v < shape.voxels; ++v) {
                    q(k, m, v) += spatial[v];
                }
            }
        }
    }
    if (!all_finite(q.values())) {
        throw ConfigError("source is not finite");
    }
    return q;
}

ObjectiveConfig build_objective(const RunConfig& cfg, const TransportSolver& solver)
{
    const TransportProblem& p = solver.problem();
    const ObjectiveSpec& o = cfg.objective;
    ObjectiveConfig out;
    out.kind = o.kind;
    out.alpha1 = alpha_from_regions(cfg.regions, o.alpha[0], o.alpha[1], o.alpha[2]);
    out.alpha2 = o.alpha2;
    out.q_bar = build_source(o.q_bar, cfg);
    switch (o.target.kind) {
    case TargetSpec::Kind::Zero:
        out.psi_bar = Field(p.field_shape());
        break;
    case TargetSpec::Kind::RegionLevels: {
        std::vector<double> mean(cfg.regions.size());
        for (std::size_t v = 0; v < mean.size(); ++v) {
            mean[v] = o.target.levels[static_cast<std::size_t>(cfg.regions[v])];
        }
        out.psi_bar = isotropic_target(p, mean);
        break;
    }
    case TargetSpec::Kind::Forward:
        out.psi_bar = solver.solve_forward(build_source(o.target.source, cfg));
        break;
    case TargetSpec::Kind::File: {
        FieldFile file = read_field(o.target.file);
        if (file.field.shape() != p.field_shape()) {
            throw ConfigError(o.target.file.string() + ": target field shape does not match");
        }
        out.psi_bar = std::move(file.field);
        break;
    }
    }
    out.validate(p.field_shape());
    return out;
}

OptimizerSettings build_optimizer_settings(const RunConfig& cfg)
{
    OptimizerSettings s;
    s.initial = build_source(cfg.optimizer.initial, cfg);
    s.tolerance = cfg.optimizer.tolerance;
    s.max_iterations = cfg.optimizer.max_iterations;
    s.armijo = cfg.optimizer.armijo;
    s.shrink = cfg.optimizer.shrink;
    s.min_step = cfg.optimizer.min_step;
    return s;
}

}  // namespace bcsd
