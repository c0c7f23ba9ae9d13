// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#include "bcsd/physics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "bcsd/error.hpp"
#include "bcsd/quadrature.hpp"

namespace bcsd {

std::string_view to_string(KernelKind k)
{
    return k == KernelKind::Isotropic ? "isotropic" : "henyey_greenstein";
}

KernelKind parse_kernel_kind(std::string_view name)
{
    if (name == "isotropic") {
        return KernelKind::Isotropic;
    }
    if (name == "henyey_greenstein" || name == "hg") {
        return KernelKind::HenyeyGreenstein;
    }
    throw ConfigError("unknown scattering kernel '" + std::string(name) + "'");
}

double kernel_eval(KernelKind kind, double sigma_s, double g, double mu, int dims)
{
    if (!(std::abs(mu) <= 1.0)) {
        throw DomainError("kernel cosine outside [-1, 1]");
    }
    const double measure = sphere_measure(dims);
    if (kind == KernelKind::Isotropic || g == 0.0) {
        return sigma_s / measure;
    }
    if (!(std::abs(g) < 1.0)) {
        throw DomainError("anisotropy parameter g must satisfy |g| < 1");
    }
    const double denom = 1.0 + g * g - 2.0 * g * mu;
    if (dims == 3) {
        return sigma_s * (1.0 - g * g) / (measure * denom * std::sqrt(denom));
    }
    return sigma_s * (1.0 - g * g) / (measure * denom);
}

CrossSections CrossSections::uniform(std::size_t voxels, const Material& m)
{
    CrossSections xs;
    xs.sigma_t.assign(voxels, m.sigma_t);
    xs.sigma_s.assign(voxels, m.sigma_s);
    xs.kernel.assign(voxels, m.kernel);
    xs.g.assign(voxels, m.g);
    return xs;
}

CrossSections CrossSections::from_materials(std::span<const Material> table,
                                            std::span<const std::size_t> material_of_voxel)
{
    CrossSections xs;
    for (std::size_t id : material_of_voxel) {
        if (id >= table.size()) {
            throw ConfigError("material index out of range");
        }
        const Material& m = table[id];
        xs.sigma_t.push_back(m.sigma_t);
        xs.sigma_s.push_back(m.sigma_s);
        xs.kernel.push_back(m.kernel);
        xs.g.push_back(m.g);
    }
    return xs;
}

bool CrossSections::has_scattering() const
{
    return std::any_of(sigma_s.begin(), sigma_s.end(), [](double s) { return s != 0.0; });
}

//---------------------------------------------------------------------------//

double moller_stopping_power(double eps, double density, double binding_energy,
                             double electron_radius)
{
    const double eb = binding_energy;
    if (!(eps > eb)) {
        std::ostringstream os;
        os << "Moller stopping power undefined at energy " << eps << " <= binding energy " << eb;
        throw DomainError(os.str());
    }
    const double ep1 = eps + 1.0;
    const double prefactor = 2.0 * std::numbers::pi * electron_radius * electron_radius * density
                             * ep1 * ep1 / (eps * ep1);
    const double t1 = eps / (eps - eb);
    const double t2 = 2.0 * std::log((eps - eb) / (2.0 * eb * (eps - eb)));
    const double t3 = 1.0 / (2.0 * ep1 * ep1) * ((eps - eb) * (eps - eb) / 4.0 - eb * eb);
    const double t4 = -(2.0 * eps + 1.0) / (ep1 * ep1) * std::numbers::ln2;
    return prefactor * (t1 + t2 + t3 + t4);
}

StoppingPower StoppingPower::constant(double value)
{
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw AssumptionError("A4", "constant stopping power must be positive and finite");
    }
    StoppingPower sp;
    sp.kind_ = Kind::Constant;
    sp.value_ = value;
    return sp;
}

StoppingPower StoppingPower::tabulated(std::vector<double> eps, std::vector<double> values)
{
    if (eps.size() < 2 || eps.size() != values.size()) {
        throw ConfigError("stopping-power table needs at least two (eps, S) pairs");
    }
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (i > 0 && !(eps[i] > eps[i - 1])) {
            throw ConfigError("stopping-power table energies must be strictly increasing");
        }
        if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
            std::ostringstream os;
            os << "tabulated stopping power not strictly positive at eps = " << eps[i];
            throw AssumptionError("A4", os.str());
        }
    }
    StoppingPower sp;
    sp.kind_ = Kind::Tabulated;
    sp.table_eps_ = std::move(eps);
    sp.table_values_ = std::move(values);
    return sp;
}

StoppingPower StoppingPower::moller(const MollerParameters& params)
{
    if (!(params.density > 0.0) || !(params.binding_energy > 0.0)
        || !(params.electron_radius > 0.0)) {
        throw ConfigError("Moller parameters must be positive");
    }
    StoppingPower sp;
    sp.kind_ = Kind::Moller;
    sp.moller_ = params;
    return sp;
}

double StoppingPower::physical_energy(double eps) const
{
    return kind_ == Kind::Moller ? moller_.beam_energy - eps : eps;
}

double StoppingPower::operator()(double eps) const
{
    switch (kind_) {
    case Kind::Constant:
        return value_;
    case Kind::Tabulated: {
        const double lo = table_eps_.front();
        const double hi = table_eps_.back();
        const double slack = 1e-12 * std::max(1.0, std::abs(hi - lo));
        if (eps < lo - slack || eps > hi + slack) {
            std::ostringstream os;
            os << "energy " << eps << " outside stopping-power table [" << lo << ", " << hi << "]";
            throw DomainError(os.str());
        }
        const double x = std::clamp(eps, lo, hi);
        auto it = std::upper_bound(table_eps_.begin(), table_eps_.end(), x);
        std::size_t i = static_cast<std::size_t>(it - table_eps_.begin());
        i = std::clamp<std::size_t>(i, 1, table_eps_.size() - 1);
        const double t = (x - table_eps_[i - 1]) / (table_eps_[i] - table_eps_[i - 1]);
        return (1.0 - t) * table_values_[i - 1] + t * table_values_[i];
    }
    case Kind::Moller:
        return moller_stopping_power(physical_energy(eps), moller_.density,
                                     moller_.binding_energy, moller_.electron_radius);
    }
    return value_;
}

std::vector<double> StoppingPower::breakpoints() const
{
    if (kind_ != Kind::Tabulated || table_eps_.size() <= 2) {
        return {};
    }
    return {table_eps_.begin() + 1, table_eps_.end() - 1};
}

//---------------------------------------------------------------------------//

namespace {

constexpr int kGaussPoints = 8;
constexpr int kSubdivisions = 4;

const GaussRule& energy_rule()
{
    static const GaussRule rule = gauss_legendre(kGaussPoints);
    return rule;
}

[[noreturn]] void throw_a4(double eps, const StoppingPower& sp, const std::string& why)
{
    std::ostringstream os;
    os << "stopping power not strictly positive at eps = " << eps;
    if (sp.kind() == StoppingPower::Kind::Moller) {
        os << " (physical energy " << sp.physical_energy(eps) << ")";
    }
    os << ": " << why;
    throw AssumptionError("A4", os.str());
}

double checked_stopping(const StoppingPower& sp, double eps)
{
    double s = 0.0;
    try {
        s = sp(eps);
    } catch (const DomainError& e) {
        throw_a4(eps, sp, e.what());
    }
    if (!(s > 0.0) || !std::isfinite(s)) {
        std::ostringstream os;
        os << "S = " << s;
        throw_a4(eps, sp, os.str());
    }
    return s;
}

}  // namespace

EnergyMap::EnergyMap(StoppingPower sp, double eps_max, std::size_t steps) : sp_(std::move(sp))
{
    if (steps < 2) {
        throw ConfigError("energy grid needs at least two steps");
    }
    if (!(eps_max > 0.0) || !std::isfinite(eps_max)) {
        throw ConfigError("eps_max must be positive");
    }
    for (double b : sp_.breakpoints()) {
        if (b > 0.0 && b < eps_max) {
            kinks_.push_back(b);
        }
    }
    const double step = eps_max / static_cast<double>(steps);
    eps_.resize(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        eps_[k] = (k == steps) ? eps_max : step * static_cast<double>(k);
    }
    // A4 gate: nodes plus a uniform sampling of each interval.
    constexpr int kSamples = 16;
    for (std::size_t k = 0; k < steps; ++k) {
        for (int i = 0; i < kSamples; ++i) {
            checked_stopping(sp_, eps_[k] + (eps_[k + 1] - eps_[k]) * i / kSamples);
        }
    }
    checked_stopping(sp_, eps_max);

    s_.resize(steps + 1);
    tau_.resize(steps + 1);
    weights_.assign(steps + 1, step);
    weights_.front() = weights_.back() = 0.5 * step;
    tau_[0] = 0.0;
    for (std::size_t k = 0; k <= steps; ++k) {
        s_[k] = checked_stopping(sp_, eps_[k]);
        if (k > 0) {
            tau_[k] = tau_[k - 1] + integrate_inverse_s(eps_[k - 1], eps_[k]);
        }
    }
}

double EnergyMap::integrate_inverse_s(double a, double b) const
{
    if (b <= a) {
        return 0.0;
    }
    // Split at kinks of S so each piece is smooth.
    std::vector<double> cuts{a};
    for (double kink : kinks_) {
        if (kink > a && kink < b) {
            cuts.push_back(kink);
        }
    }
    cuts.push_back(b);
    const GaussRule& rule = energy_rule();
    double total = 0.0;
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
        const double len = (cuts[p + 1] - cuts[p]) / kSubdivisions;
        for (int s = 0; s < kSubdivisions; ++s) {
            const double lo = cuts[p] + s * len;
            const double mid = lo + 0.5 * len;
            double part = 0.0;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                part += rule.weights[i] / checked_stopping(sp_, mid + 0.5 * len * rule.nodes[i]);
            }
            total += 0.5 * len * part;
        }
    }
    return total;
}

double EnergyMap::r(double eps) const
{
    const double slack = 1e-12 * eps_max();
    if (eps < -slack || eps > eps_max() + slack) {
        throw DomainError("energy outside [0, eps_max]");
    }
    eps = std::clamp(eps, 0.0, eps_max());
    auto k = static_cast<std::size_t>(std::floor(eps / eps_step()));
    k = std::min(k, steps() - 1);
    if (eps == eps_[k]) {
        return tau_[k];
    }
    return tau_[k] + integrate_inverse_s(eps_[k], eps);
}

double EnergyMap::r_inverse(double tau) const
{
    const double slack = 1e-12 * std::max(t_r(), 1.0);
    if (tau < -slack || tau > t_r() + slack) {
        throw DomainError("remapped energy outside [0, T_R]");
    }
    tau = std::clamp(tau, 0.0, t_r());
    auto it = std::upper_bound(tau_.begin(), tau_.end(), tau);
    std::size_t k = static_cast<std::size_t>(it - tau_.begin());
    k = std::clamp<std::size_t>(k, 1, steps()) - 1;
    if (tau == tau_[k]) {
        return eps_[k];
    }
    if (tau == tau_[k + 1]) {
        return eps_[k + 1];
    }
    const double lo = eps_[k];
    const double hi = eps_[k + 1];
    const double dt = tau_[k + 1] - tau_[k];
    const double t = (tau - tau_[k]) / dt;
    // Cubic Hermite in tau with slopes d eps / d tau = S.
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
    const double h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t);
    const double h11 = t * t * (t - 1);
    double eps = h00 * lo + h10 * dt * s_[k] + h01 * hi + h11 * dt * s_[k + 1];
    eps = std::clamp(eps, lo, hi);
    for (int iter = 0; iter < 20; ++iter) {
        const double f = tau_[k] + integrate_inverse_s(lo, eps) - tau;
        const double next = std::clamp(eps - f * sp_(eps), lo, hi);
        const double delta = std::abs(next - eps);
        eps = next;
        if (delta <= 4.0 * std::numeric_limits<double>::epsilon() * eps_max()) {
            break;
        }
    }
    return eps;
}

EnergyMap build_energy_map(const StoppingPower& sp, double eps_max, std::size_t steps)
{
    return EnergyMap(sp, eps_max, steps);
}

//---------------------------------------------------------------------------//

bool AssumptionReport::all_passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const AssumptionCheck* AssumptionReport::find(std::string_view id) const
{
    for (const auto& c : checks) {
        if (c.id == id) {
            return &c;
        }
    }
    return nullptr;
}

void AssumptionReport::throw_if_failed() const
{
    for (const auto& c : checks) {
        if (!c.passed) {
            throw AssumptionError(c.id, c.message);
        }
    }
}

AssumptionReport validate_assumptions(const CrossSections& xs, const StoppingPower& sp,
                                      const ValidationLimits& limits)
{
    AssumptionReport report;
    const std::size_t n = xs.size();
    if (xs.sigma_s.size() != n || xs.kernel.size() != n || xs.g.size() != n) {
        throw ContractError("cross-section arrays differ in length");
    }

    AssumptionCheck a1{"A1", true, "sigma_t and sigma_s are non-negative", {}, {}};
    for (std::size_t v = 0; v < n && a1.passed; ++v) {
        if (xs.sigma_t[v] < 0.0 || xs.sigma_s[v] < 0.0) {
            a1.passed = false;
            a1.voxel = v;
            std::ostringstream os;
            os << "negative cross section at voxel " << v << " (sigma_t = " << xs.sigma_t[v]
               << ", sigma_s = " << xs.sigma_s[v] << ")";
            a1.message = os.str();
        }
    }
    report.checks.push_back(a1);

    AssumptionCheck a2{"A2", true, "cross sections and kernels are bounded", {}, {}};
    for (std::size_t v = 0; v < n && a2.passed; ++v) {
        const bool bad_g = xs.kernel[v] == KernelKind::HenyeyGreenstein && !(std::abs(xs.g[v]) < 1.0);
        if (!std::isfinite(xs.sigma_t[v]) || !std::isfinite(xs.sigma_s[v]) || bad_g) {
            a2.passed = false;
            a2.voxel = v;
            a2.message = "unbounded cross section or kernel (|g| >= 1) at voxel " + std::to_string(v);
        }
    }
    report.checks.push_back(a2);

    AssumptionCheck a3{"A3", true, "kernel integral over mu within bound", {}, {}};
    if (a2.passed) {
        const GaussRule rule = gauss_legendre(64);
        for (std::size_t v = 0; v < n && a3.passed; ++v) {
            double integral = 0.0;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                integral += rule.weights[i]
                            * kernel_eval(xs.kernel[v], xs.sigma_s[v], xs.g[v], rule.nodes[i],
                                          limits.dims);
            }
            if (integral > limits.kernel_bound) {
                a3.passed = false;
                a3.voxel = v;
                std::ostringstream os;
                os << "kernel integral " << integral << " exceeds bound " << limits.kernel_bound
                   << " at voxel " << v;
                a3.message = os.str();
            }
        }
    } else {
        a3.passed = false;
        a3.message = "not evaluated: A2 failed";
    }
    report.checks.push_back(a3);

    AssumptionCheck a4{"A4", true, "stopping power strictly positive and continuous", {}, {}};
    const std::size_t samples = std::max<std::size_t>(limits.energy_samples, 2);
    for (std::size_t i = 0; i < samples && a4.passed; ++i) {
        const double eps = limits.eps_lo
                           + (limits.eps_hi - limits.eps_lo) * static_cast<double>(i)
                                 / static_cast<double>(samples - 1);
        try {
            checked_stopping(sp, eps);
        } catch (const AssumptionError& e) {
            a4.passed = false;
            a4.energy = eps;
            a4.message = std::string(e.what()).substr(e.assumption().size() + 2);
        }
    }
    report.checks.push_back(a4);

    AssumptionCheck sub{"subcritical", true, "sigma_s <= sigma_t in every voxel", {}, {}};
    for (std::size_t v = 0; v < n; ++v) {
        if (xs.sigma_s[v] > xs.sigma_t[v]) {
            sub.voxel = v;
            sub.message = "sigma_s exceeds sigma_t at voxel " + std::to_string(v);
            sub.passed = limits.allow_supercritical;
            if (sub.passed) {
                sub.message += " (allowed by configuration)";
            }
            break;
        }
    }
    report.checks.push_back(sub);
    return report;
}

}  // namespace bcsd
