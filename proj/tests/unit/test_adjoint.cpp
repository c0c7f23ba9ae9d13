// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "bcsd/adjoint.hpp"
#include "bcsd/transport.hpp"
#include "helpers.hpp"

using namespace bcsd;
using bcsd::testing::Gen;
using bcsd::testing::make_problem;
using bcsd::testing::max_abs;

namespace {

SolverSettings tight()
{
    SolverSettings s;
    s.tolerance = 1e-14;
    s.max_iterations = 5000;
    return s;
}

TransportProblem single_voxel(double sigma_t, std::size_t steps, double eps_max)
{
    TransportProblem p;
    const std::vector<double> extent{1e9, 1e9};
    const std::vector<int> cells{1, 1};
    p.grid = build_grid(2, extent, cells);
    p.quad = build_quadrature(2, 4);
    p.xs = CrossSections::uniform(1, Material{sigma_t, 0.0, KernelKind::Isotropic, 0.0});
    p.energy = build_energy_map(StoppingPower::constant(1.0), eps_max, steps);
    return p;
}

}  // namespace

TEST_CASE("adjoint of a zero source is zero")
{
    const TransportProblem p = make_problem(4, 4, 4, 4, 1.0, 0.4);
    const TransportSolver solver(p);
    CHECK(max_abs(solve_adjoint(solver, Field(p.field_shape())).values()) == 0.0);
}

TEST_CASE("adjoint terminal slice vanishes")
{
    Gen gen(21);
    const TransportProblem p = make_problem(5, 3, 8, 6, 1.0, 0.3, bcsd::testing::linear_stopping());
    const TransportSolver solver(p);
    const AdjointField lam = solve_adjoint(solver, gen.field(p.field_shape(), 0.0, 1.0));
    CHECK(max_abs(lam.slice(lam.shape().energies - 1)) == 0.0);
    CHECK(max_abs(lam.slice(0)) > 0.0);
}

TEST_CASE("property: adjoint solve is linear")
{
    Gen gen(22);
    const TransportProblem p = make_problem(4, 5, 8, 6, 1.1, 0.35, bcsd::testing::linear_stopping());
    const TransportSolver solver(p, tight());
    for (int trial = 0; trial < 3; ++trial) {
        const Field a = gen.field(p.field_shape(), -1.0, 1.0);
        const Field b = gen.field(p.field_shape(), -1.0, 1.0);
        const double s = gen.uniform(-3.0, 3.0);
        const AdjointField lhs = solve_adjoint(solver, a + s * b);
        const AdjointField rhs = solve_adjoint(solver, a) + s * solve_adjoint(solver, b);
        const AdjointField diff = lhs - rhs;
        CHECK(weighted_norm(p, diff.values()) <= 1e-12 * weighted_norm(p, rhs.values()));
    }
}

TEST_CASE("single-voxel backward absorption matches the closed form")
{
    // -lambda' + sigma lambda = 1, lambda(eps_max) = 0; the eps = 0 node carries
    // half a trapezoid weight, so the transpose doubles it there
    const double sigma = 2.0;
    const double eps_max = 1.0;
    std::vector<double> errors;
    for (std::size_t steps : {16u, 32u, 64u, 128u}) {
        const TransportProblem p = single_voxel(sigma, steps, eps_max);
        const TransportSolver solver(p);
        const AdjointField lam = solve_adjoint(solver, Field(p.field_shape(), 1.0));
        double err = 0.0;
        for (std::size_t k = 1; k < p.energy.num_nodes(); ++k) {
            const double e = p.energy.eps_nodes()[k];
            const double exact = (1.0 - std::exp(-sigma * (eps_max - e))) / sigma;
            for (std::size_t m = 0; m < p.quad.size(); ++m) {
                err = std::max(err, std::abs(lam(k, m, 0) - exact));
            }
        }
        errors.push_back(err);
        const double exact0 = (1.0 - std::exp(-sigma * eps_max)) / sigma;
        CHECK(lam(0, 0, 0) == doctest::Approx(2.0 * exact0).epsilon(0.1));
    }
    MESSAGE("backward absorption errors: " << errors[0] << " " << errors[1] << " " << errors[2] << " "
                                           << errors[3]);
    for (std::size_t i = 1; i < errors.size(); ++i) {
        const double order = std::log2(errors[i - 1] / errors[i]);
        CHECK(order > 0.85);
        CHECK(order < 1.3);
    }
}

TEST_CASE("adjoint identity without scattering")
{
    Gen gen(23);
    for (int trial = 0; trial < 4; ++trial) {
        const TransportProblem p = make_problem(gen.integer(2, 7), gen.integer(2, 7), 4 * gen.integer(1, 3),
                                                static_cast<std::size_t>(gen.integer(2, 9)), gen.uniform(0.0, 3.0),
                                                0.0, bcsd::testing::linear_stopping());
        const TransportSolver solver(p);
        const Field w = gen.field(p.field_shape(), 0.0, 1.0);
        const Field z = gen.field(p.field_shape(), 0.0, 1.0);
        CHECK(adjoint_identity_gap(solver, w, z) <= 1e-12);
    }
}

TEST_CASE("adjoint identity with anisotropic scattering")
{
    Gen gen(24);
    for (int trial = 0; trial < 4; ++trial) {
        TransportProblem p = make_problem(gen.integer(2, 6), gen.integer(2, 6), 8,
                                          static_cast<std::size_t>(gen.integer(3, 8)), 1.0, 0.0,
                                          bcsd::testing::linear_stopping());
        std::vector<Material> table{{1.0, 0.5, KernelKind::HenyeyGreenstein, 0.7},
                                    {2.0, 0.3, KernelKind::Isotropic, 0.0}};
        std::vector<std::size_t> mat(p.grid.num_voxels());
        for (auto& m : mat) {
            m = static_cast<std::size_t>(gen.integer(0, 1));
        }
        p.xs = CrossSections::from_materials(table, mat);
        const TransportSolver solver(p, tight());
        const Field w = gen.field(p.field_shape(), 0.0, 1.0);
        const Field z = gen.field(p.field_shape(), 0.0, 1.0);
        CHECK(adjoint_identity_gap(solver, w, z) <= 1e-10);
    }
}

TEST_CASE("adjoint identity gap detects a perturbed adjoint")
{
    Gen gen(25);
    const TransportProblem p = make_problem(4, 4, 8, 6, 1.0, 0.3, bcsd::testing::linear_stopping());
    const TransportSolver solver(p, tight());
    const Field w = gen.field(p.field_shape(), 0.0, 1.0);
    const Field z = gen.field(p.field_shape(), 0.0, 1.0);
    AdjointField lam = solve_adjoint(solver, z);
    lam.values()[lam.values().size() / 3] += 1e-3;
    const Field xw = solver.solve_forward(w);
    const double lhs = weighted_inner(p, w.values(), lam.values());
    const double rhs = weighted_inner(p, xw.values(), z.values());
    const double gap = std::abs(lhs - rhs) / (weighted_norm(p, w.values()) * weighted_norm(p, z.values()));
    CHECK(gap > 1e-8);
}

TEST_CASE("zero fields give a zero gap")
{
    const TransportProblem p = make_problem(3, 3, 4, 4, 1.0, 0.2);
    const TransportSolver solver(p);
    const Field zero(p.field_shape());
    CHECK(adjoint_identity_gap(solver, zero, Field(p.field_shape(), 1.0)) == 0.0);
}

TEST_CASE("boundary traces")
{
    Gen gen(26);
    const TransportProblem p = make_problem(4, 3, 8, 4, 1.0, 0.0);
    const auto faces = classify_boundary(p.grid, p.quad);
    const TransportSolver solver(p);
    const Field q = gen.field(p.field_shape(), 0.5, 1.0);
    const Field psi = solver.solve_forward(q);
    const AdjointField lam = solve_adjoint(solver, q);
    const std::size_t nv = p.grid.num_voxels();
    for (std::size_t k = 0; k < p.energy.num_nodes(); ++k) {
        const auto fwd = boundary_trace(p.grid, faces, psi.slice(k), SweepMode::Forward);
        const auto adj = boundary_trace(p.grid, faces, lam.slice(k), SweepMode::Adjoint);
        REQUIRE(fwd.size() == faces.size());
        for (std::size_t i = 0; i < faces.size(); ++i) {
            const BoundaryFace& f = faces[i];
            switch (f.orientation) {
            case Orientation::Inflow:
                CHECK(fwd[i] == 0.0);
                CHECK(adj[i] == lam.slice(k)[f.direction * nv + f.voxel]);
                break;
            case Orientation::Outflow:
                CHECK(adj[i] == 0.0);
                CHECK(fwd[i] == psi.slice(k)[f.direction * nv + f.voxel]);
                break;
            case Orientation::Tangential:
                CHECK(fwd[i] == 0.0);
                CHECK(adj[i] == 0.0);
                break;
            }
        }
    }
}

TEST_CASE("adjoint transport flows against the direction of travel")
{
    // a source at the right wall, direction +x: forward fluence stays near the wall,
    // adjoint importance reaches back toward the left
    TransportProblem p;
    const std::vector<double> extent{1.0, 1.0};
    const std::vector<int> cells{8, 1};
    p.grid = build_grid(2, extent, cells);
    p.quad = AngularQuadrature::from_points(2, {{1.0, 0.0, 0.0}, {-1.0, 0.0, 0.0}},
                                            {std::numbers::pi, std::numbers::pi});
    p.xs = CrossSections::uniform(8, Material{0.0, 0.0, KernelKind::Isotropic, 0.0});
    p.energy = build_energy_map(StoppingPower::constant(1.0), 1.0, 16);
    const TransportSolver solver(p);
    Field z(p.field_shape());
    for (std::size_t k = 0; k < p.energy.num_nodes(); ++k) {
        z(k, 0, 7) = 1.0;
    }
    const AdjointField lam = solve_adjoint(solver, z);
    const Field psi = solver.solve_forward(z);
    for (std::size_t v = 0; v < 7; ++v) {
        CHECK(psi(8, 0, v) == 0.0);
        CHECK(lam(0, 0, v) > 0.0);
    }
}
