// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "bcsd/field.hpp"
#include "bcsd/grid.hpp"
#include "bcsd/physics.hpp"
#include "bcsd/quadrature.hpp"
#include "bcsd/transport.hpp"

namespace bcsd::testing {

/// Seeded generator for property tests.
class Gen
{
  public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    Field field(const FieldShape& shape, double lo, double hi)
    {
        Field f(shape);
        for (double& x : f.values()) {
            x = uniform(lo, hi);
        }
        return f;
    }

    std::vector<double> vector(std::size_t n, double lo, double hi)
    {
        std::vector<double> v(n);
        for (double& x : v) {
            x = uniform(lo, hi);
        }
        return v;
    }

    std::mt19937_64& engine() { return rng_; }

  private:
    std::mt19937_64 rng_;
};

inline TransportProblem make_problem(int nx, int ny, int order, std::size_t steps, double sigma_t,
                                     double sigma_s, StoppingPower sp = StoppingPower::constant(1.0),
                                     double eps_max = 1.0)
{
    const std::vector<double> extent{1.0, 1.0};
    const std::vector<int> cells{nx, ny};
    TransportProblem p;
    p.grid = build_grid(2, extent, cells);
    p.quad = build_quadrature(2, order);
    p.xs = CrossSections::uniform(p.grid.num_voxels(), Material{sigma_t, sigma_s, KernelKind::Isotropic, 0.0});
    p.energy = build_energy_map(sp, eps_max, steps);
    return p;
}

/// S(eps) = 1 + eps, exact as a two-point table.
inline StoppingPower linear_stopping(double eps_max = 1.0)
{
    return StoppingPower::tabulated({0.0, eps_max}, {1.0, 1.0 + eps_max});
}

/// Brute-force weighted pairing, written independently of weighted_inner.
inline double brute_inner(const TransportProblem& p, const Field& a, const Field& b)
{
    const auto eps = p.energy.eps_nodes();
    double total = 0.0;
    for (std::size_t k = 0; k < a.shape().energies; ++k) {
        double c = 0.0;
        if (k > 0) {
            c += 0.5 * (eps[k] - eps[k - 1]);
        }
        if (k + 1 < eps.size()) {
            c += 0.5 * (eps[k + 1] - eps[k]);
        }
        for (std::size_t m = 0; m < a.shape().directions; ++m) {
            for (std::size_t v = 0; v < a.shape().voxels; ++v) {
                total += c * p.quad.weight(m) * p.grid.cell_volume() * a(k, m, v) * b(k, m, v);
            }
        }
    }
    return total;
}

inline double max_abs(std::span<const double> v)
{
    double m = 0.0;
    for (double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

}  // namespace bcsd::testing
