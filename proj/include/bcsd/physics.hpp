// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bcsd {

//---------------------------------------------------------------------------//
// Scattering
//---------------------------------------------------------------------------//

enum class KernelKind
{
    Isotropic,
    HenyeyGreenstein
};

std::string_view to_string(KernelKind k);
KernelKind parse_kernel_kind(std::string_view name);

/*!
 * Scattering kernel sigma_s(mu) per unit solid angle, mu = Omega'.Omega.
 *
 * Both kinds integrate to `sigma_s` over S^{dims-1}. The anisotropic kind is
 * the Henyey-Greenstein form on the sphere (dims = 3) and its wrapped-Cauchy
 * analogue on the circle (dims = 2); g = 0 reduces either one to isotropic.
 */
double kernel_eval(KernelKind kind, double sigma_s, double g, double mu, int dims);

struct Material
{
    double sigma_t = 0.0;
    double sigma_s = 0.0;
    KernelKind kernel = KernelKind::Isotropic;
    double g = 0.0;
};

/// Per-voxel material data. Energy independent.
struct CrossSections
{
    std::vector<double> sigma_t;
    std::vector<double> sigma_s;
    std::vector<KernelKind> kernel;
    std::vector<double> g;

    static CrossSections uniform(std::size_t voxels, const Material& m);
    static CrossSections
    from_materials(std::span<const Material> table, std::span<const std::size_t> material_of_voxel);

    std::size_t size() const { return sigma_t.size(); }
    bool has_scattering() const;
    Material at(std::size_t v) const { return {sigma_t[v], sigma_s[v], kernel[v], g[v]}; }
};

//---------------------------------------------------------------------------//
// Stopping power
//---------------------------------------------------------------------------//

inline constexpr double kClassicalElectronRadius = 2.8179403262e-13;  // cm

/// Water-like defaults, energies in units of the electron rest energy.
struct MollerParameters
{
    double density = 3.3428e23;          // electrons / cm^3
    double binding_energy = 1.468e-4;    // ~75 eV
    double electron_radius = kClassicalElectronRadius;
    double beam_energy = 2.0;            // physical energy at eps' = 0
};

/*!
 * Moller stopping power for kinetic energy `eps` (electron rest energy
 * units), evaluated term by term exactly as the closed form is usually
 * printed, including its logarithm of (eps - eB) / (2 eB (eps - eB)).
 *
 * Throws DomainError for eps <= binding energy. The value is not guaranteed
 * positive; callers gate it through the A4 check.
 */
double moller_stopping_power(double eps, double density, double binding_energy,
                             double electron_radius = kClassicalElectronRadius);

/*!
 * Stopping power S as a function of the marching energy eps' in
 * [0, eps_max], where eps' = 0 is the highest physical energy.
 *
 * The Moller kind converts eps' to physical energy as beam_energy - eps'.
 */
class StoppingPower
{
  public:
    enum class Kind
    {
        Constant,
        Tabulated,
        Moller
    };

    StoppingPower() = default;

    static StoppingPower constant(double value);
    /// Piecewise-linear through (eps_i, S_i); evaluation outside the table throws.
    static StoppingPower tabulated(std::vector<double> eps, std::vector<double> values);
    static StoppingPower moller(const MollerParameters& params);

    double operator()(double eps) const;

    Kind kind() const { return kind_; }
    double physical_energy(double eps) const;
    /// Interior points where S has a kink; quadrature splits there.
    std::vector<double> breakpoints() const;

    const std::vector<double>& table_eps() const { return table_eps_; }
    const std::vector<double>& table_values() const { return table_values_; }
    double constant_value() const { return value_; }
    const MollerParameters& moller_parameters() const { return moller_; }

  private:
    Kind kind_ = Kind::Constant;
    double value_ = 1.0;
    std::vector<double> table_eps_;
    std::vector<double> table_values_;
    MollerParameters moller_;
};

/*!
 * Uniform grid in the marching energy together with the remapped
 * coordinate r, where dr/deps = 1/S and r(0) = 0.
 *
 * Nodes are eps_k = k * eps_max / steps, k = 0..steps, and tau_k = r(eps_k).
 * r between nodes is evaluated by composite Gauss-Legendre quadrature of
 * 1/S; the inverse starts from a cubic Hermite guess (using the exact
 * derivative S) and is polished by safeguarded Newton steps.
 */
class EnergyMap
{
  public:
    EnergyMap() = default;
    EnergyMap(StoppingPower sp, double eps_max, std::size_t steps);

    const StoppingPower& stopping_power() const { return sp_; }
    std::size_t steps() const { return eps_.size() - 1; }
    std::size_t num_nodes() const { return eps_.size(); }
    double eps_max() const { return eps_.back(); }
    double eps_step() const { return eps_max() / static_cast<double>(steps()); }
    double t_r() const { return tau_.back(); }

    std::span<const double> eps_nodes() const { return eps_; }
    std::span<const double> tau_nodes() const { return tau_; }
    std::span<const double> stopping_at_nodes() const { return s_; }
    /// Trapezoid weights on the eps nodes; they sum to eps_max.
    std::span<const double> energy_weights() const { return weights_; }

    double stopping(double eps) const { return sp_(eps); }
    double r(double eps) const;
    double r_inverse(double tau) const;

  private:
    double integrate_inverse_s(double a, double b) const;

    StoppingPower sp_;
    std::vector<double> eps_;
    std::vector<double> tau_;
    std::vector<double> s_;
    std::vector<double> weights_;
    std::vector<double> kinks_;
};

/// Throws AssumptionError("A4", ...) if S is not strictly positive on [0, eps_max].
EnergyMap build_energy_map(const StoppingPower& sp, double eps_max, std::size_t steps);

//---------------------------------------------------------------------------//
// Assumption checks
//---------------------------------------------------------------------------//

struct AssumptionCheck
{
    std::string id;  ///< "A1".."A4" or "subcritical"
    bool passed = true;
    std::string message;
    std::optional<std::size_t> voxel;
    std::optional<double> energy;
};

struct AssumptionReport
{
    std::vector<AssumptionCheck> checks;

    bool all_passed() const;
    const AssumptionCheck* find(std::string_view id) const;
    /// Throws AssumptionError for the first failed check.
    void throw_if_failed() const;
};

struct ValidationLimits
{
    int dims = 2;
    double eps_lo = 0.0;
    double eps_hi = 1.0;
    double kernel_bound = 1e3;  ///< c in the integral bound on sigma_s(x, mu)
    bool allow_supercritical = false;
    std::size_t energy_samples = 4096;
};

AssumptionReport validate_assumptions(const CrossSections& xs, const StoppingPower& sp,
                                      const ValidationLimits& limits);

}  // namespace bcsd
