// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace bcsd {

using Vec3 = std::array<double, 3>;

/// Surface measure of the unit sphere S^{n-1}: 2*pi for n = 2, 4*pi for n = 3.
double sphere_measure(int dims);

/*!
 * Discrete-ordinates direction set.
 *
 * Directions are stored as 3-vectors; in two dimensions the third component
 * is zero. Construction checks unit length, positive weights, total weight
 * equal to the sphere measure and vanishing first moment, each to 1e-12.
 */
class AngularQuadrature
{
  public:
    AngularQuadrature() = default;

    static AngularQuadrature
    from_points(int dims, std::vector<Vec3> directions, std::vector<double> weights);

    int dims() const { return dims_; }
    std::size_t size() const { return weights_.size(); }
    const Vec3& direction(std::size_t m) const { return directions_[m]; }
    double weight(std::size_t m) const { return weights_[m]; }
    std::span<const Vec3> directions() const { return directions_; }
    std::span<const double> weights() const { return weights_; }

    /// Sum of weights; equals sphere_measure(dims()).
    double measure() const;

  private:
    int dims_ = 0;
    std::vector<Vec3> directions_;
    std::vector<double> weights_;
};

/*!
 * Build the default quadrature of the given order.
 *
 * Two dimensions: `order` equally spaced directions at angles
 * (2m+1)*pi/order with uniform weights 2*pi/order. Three dimensions: a
 * product rule with `order` Gauss-Legendre polar cosines and 2*order
 * equally spaced azimuths. Order must be even and at least 2, which keeps
 * every direction off the coordinate planes.
 */
AngularQuadrature build_quadrature(int dims, int order);

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule
{
    std::vector<double> nodes;
    std::vector<double> weights;
};

GaussRule gauss_legendre(int points);

}  // namespace bcsd
