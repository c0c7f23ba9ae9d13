// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#include "bcsd/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/legendre.hpp>

#include "bcsd/error.hpp"

namespace bcsd {

double sphere_measure(int dims)
{
    switch (dims) {
    case 2:
        return 2.0 * std::numbers::pi;
    case 3:
        return 4.0 * std::numbers::pi;
    default:
        throw ConfigError("dimension must be 2 or 3, got " + std::to_string(dims));
    }
}

AngularQuadrature
AngularQuadrature::from_points(int dims, std::vector<Vec3> directions, std::vector<double> weights)
{
    const double measure = sphere_measure(dims);
    if (directions.empty() || directions.size() != weights.size()) {
        throw ConfigError("quadrature needs matching, non-empty direction and weight lists");
    }
    constexpr double tol = 1e-12;
    double total = 0.0;
    Vec3 moment{0.0, 0.0, 0.0};
    for (std::size_t m = 0; m < directions.size(); ++m) {
        const auto& d = directions[m];
        if (dims == 2 && d[2] != 0.0) {
            throw ConfigError("2D quadrature direction has a z component");
        }
        const double len = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
        if (std::abs(len - 1.0) > tol) {
            throw ConfigError("quadrature direction " + std::to_string(m) + " is not a unit vector");
        }
        if (!(weights[m] > 0.0)) {
            throw ConfigError("quadrature weight " + std::to_string(m) + " is not positive");
        }
        total += weights[m];
        for (int a = 0; a < 3; ++a) {
            moment[a] += weights[m] * d[a];
        }
    }
    if (std::abs(total - measure) > tol * measure) {
        throw ConfigError("quadrature weights do not sum to the sphere measure");
    }
    for (double c : moment) {
        if (std::abs(c) > tol * measure) {
            throw ConfigError("quadrature first moment does not vanish");
        }
    }
    AngularQuadrature q;
    q.dims_ = dims;
    q.directions_ = std::move(directions);
    q.weights_ = std::move(weights);
    return q;
}

double AngularQuadrature::measure() const
{
    double total = 0.0;
    for (double w : weights_) {
        total += w;
    }
    return total;
}

GaussRule gauss_legendre(int points)
{
    if (points < 1) {
        throw ConfigError("Gauss-Legendre rule needs at least one point");
    }
    // Boost returns the non-negative zeros in increasing order.
    const auto zeros = boost::math::legendre_p_zeros<double>(points);
    GaussRule rule;
    auto weight = [points](double x) {
        const double dp = boost::math::legendre_p_prime<double>(points, x);
        return 2.0 / ((1.0 - x * x) * dp * dp);
    };
    for (auto it = zeros.rbegin(); it != zeros.rend(); ++it) {
        if (*it == 0.0) {
            continue;
        }
        rule.nodes.push_back(-*it);
        rule.weights.push_back(weight(*it));
    }
    if (points % 2 == 1) {
        rule.nodes.push_back(0.0);
        rule.weights.push_back(weight(0.0));
    }
    for (double z : zeros) {
        if (z == 0.0) {
            continue;
        }
        rule.nodes.push_back(z);
        rule.weights.push_back(weight(z));
    }
    return rule;
}

AngularQuadrature build_quadrature(int dims, int order)
{
    if (order < 2 || order % 2 != 0) {
        throw ConfigError("quadrature order must be even and >= 2, got " + std::to_string(order));
    }
    std::vector<Vec3> dirs;
    std::vector<double> weights;
    if (dims == 2) {
        const double w = 2.0 * std::numbers::pi / order;
        for (int m = 0; m < order; ++m) {
            const double theta = (2 * m + 1) * std::numbers::pi / order;
            dirs.push_back({std::cos(theta), std::sin(theta), 0.0});
            weights.push_back(w);
        }
    } else if (dims == 3) {
        const GaussRule polar = gauss_legendre(order);
        const int n_azimuth = 2 * order;
        const double dphi = 2.0 * std::numbers::pi / n_azimuth;
        for (std::size_t p = 0; p < polar.nodes.size(); ++p) {
            const double mu = polar.nodes[p];
            const double s = std::sqrt(1.0 - mu * mu);
            for (int a = 0; a < n_azimuth; ++a) {
                const double phi = (a + 0.5) * dphi;
                dirs.push_back({s * std::cos(phi), s * std::sin(phi), mu});
                weights.push_back(polar.weights[p] * dphi);
            }
        }
    } else {
        throw ConfigError("dimension must be 2 or 3, got " + std::to_string(dims));
    }
    // Rescale to remove the last-ulp drift of the summed weights.
    double total = 0.0;
    for (double w : weights) {
        total += w;
    }
    const double scale = sphere_measure(dims) / total;
    for (double& w : weights) {
        w *= scale;
    }
    return AngularQuadrature::from_points(dims, std::move(dirs), std::move(weights));
}

}  // namespace bcsd
