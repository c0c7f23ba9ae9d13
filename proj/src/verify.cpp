// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#include "bcsd/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bcsd/adjoint.hpp"
#include "bcsd/error.hpp"

namespace bcsd::verify {

namespace {

/// Scattering rows sigma_s(v) w_m' f(Omega_m . Omega_m') built straight from the kernel.
struct DirectScattering
{
    std::vector<std::vector<double>> unit;  // per voxel class, nm x nm
    std::vector<std::size_t> cls;
    std::vector<double> sigma_s;
    std::size_t nm = 0;

    DirectScattering(const AngularQuadrature& quad, const CrossSections& xs) : nm(quad.size())
    {
        std::vector<std::pair<KernelKind, double>> seen;
        sigma_s = xs.sigma_s;
        cls.resize(xs.size());
        for (std::size_t v = 0; v < xs.size(); ++v) {
            const std::pair<KernelKind, double> key{xs.kernel[v], xs.g[v]};
            auto it = std::find(seen.begin(), seen.end(), key);
            if (it == seen.end()) {
                seen.push_back(key);
                std::vector<double> mat(nm * nm);
                for (std::size_t m = 0; m < nm; ++m) {
                    for (std::size_t mp = 0; mp < nm; ++mp) {
                        const Vec3& a = quad.direction(m);
                        const Vec3& b = quad.direction(mp);
                        double mu = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
                        mu = std::max(-1.0, std::min(1.0, mu));
                        mat[m * nm + mp] =
                            quad.weight(mp) * kernel_eval(key.first, 1.0, key.second, mu, quad.dims());
                    }
                }
                unit.push_back(std::move(mat));
                it = seen.end() - 1;
            }
            cls[v] = static_cast<std::size_t>(it - seen.begin());
        }
    }

    double row(std::size_t v, std::size_t m, std::span<const double> psi_v) const
    {
        const double* r = unit[cls[v]].data() + m * nm;
        double acc = 0.0;
        for (std::size_t mp = 0; mp < nm; ++mp) {
            acc += r[mp] * psi_v[mp];
        }
        return sigma_s[v] * acc;
    }
};

/// Upwind solve of (a + sigma_t + Omega.grad) u = s with zero inflow, one direction.
void direct_sweep(const SpatialGrid& grid, const std::vector<double>& sigma_t, const Vec3& om,
                  double a, const std::vector<double>& s, std::vector<double>& u)
{
    const int n[3] = {grid.cells[0], grid.cells[1], grid.cells[2]};
    int step[3];
    int first[3];
    double c[3];
    for (int ax = 0; ax < 3; ++ax) {
        const bool active = ax < grid.dims && om[static_cast<std::size_t>(ax)] != 0.0;
        const double o = om[static_cast<std::size_t>(ax)];
        step[ax] = (!active || o > 0.0) ? 1 : -1;
        first[ax] = step[ax] > 0 ? 0 : n[ax] - 1;
        c[ax] = active ? std::abs(o) / grid.h[static_cast<std::size_t>(ax)] : 0.0;
    }
    for (int tk = 0, k = first[2]; tk < n[2]; ++tk, k += step[2]) {
        for (int tj = 0, j = first[1]; tj < n[1]; ++tj, j += step[1]) {
            for (int ti = 0, i = first[0]; ti < n[0]; ++ti, i += step[0]) {
                const std::size_t v = grid.index(i, j, k);
                double num = s[v];
                double den = a + sigma_t[v] + c[0] + c[1] + c[2];
                if (c[0] > 0.0 && ti > 0) {
                    num += c[0] * u[grid.index(i - step[0], j, k)];
                }
                if (c[1] > 0.0 && tj > 0) {
                    num += c[1] * u[grid.index(i, j - step[1], k)];
                }
                if (c[2] > 0.0 && tk > 0) {
                    num += c[2] * u[grid.index(i, j, k - step[2])];
                }
                u[v] = num / den;
            }
        }
    }
}

Field bump_source(const TransportProblem& p)
{
    Field q(p.field_shape());
    const auto eps = p.energy.eps_nodes();
    const double eps_max = p.energy.eps_max();
    for (std::size_t k = 0; k < q.shape().energies; ++k) {
        const double e = 1.0 - 0.5 * eps[k] / eps_max;
        for (std::size_t m = 0; m < q.shape().directions; ++m) {
            for (std::size_t v = 0; v < q.shape().voxels; ++v) {
                q(k, m, v) = e * bump(p.grid, p.grid.center(v));
            }
        }
    }
    return q;
}

double relative_distance(const TransportProblem& p, const Field& a, const Field& b)
{
    const Field d = a - b;
    return weighted_norm(p, d.values()) / weighted_norm(p, b.values());
}

Ladder finish(Ladder l)
{
    for (std::size_t i = 1; i < l.errors.size(); ++i) {
        l.orders.push_back(std::log2(l.errors[i - 1] / l.errors[i]));
    }
    return l;
}

}  // namespace

Field direct_march(const TransportProblem& p, const Field& q, double tolerance, int max_iterations)
{
    p.validate();
    require_same_shape(q.shape(), p.field_shape(), "direct_march");
    const std::size_t nv = p.grid.num_voxels();
    const std::size_t nm = p.quad.size();
    const std::size_t ne = p.energy.num_nodes();
    const auto eps = p.energy.eps_nodes();
    const DirectScattering scat(p.quad, p.xs);
    const bool scatters =
        std::any_of(p.xs.sigma_s.begin(), p.xs.sigma_s.end(), [](double s) { return s != 0.0; });

    Field psi(p.field_shape());
    std::vector<double> fixed(nv);
    std::vector<double> src(nv);
    std::vector<double> u(nv);
    std::vector<double> old(nm * nv);
    std::vector<double> per_voxel(nm);
    for (std::size_t k = 1; k < ne; ++k) {
        const double de = eps[k] - eps[k - 1];
        const double s_now = p.energy.stopping(eps[k]);
        const double s_prev = p.energy.stopping(eps[k - 1]);
        const double a = s_now / de;
        for (std::size_t i = 0; i < nm * nv; ++i) {
            psi.slice(k)[i] = psi.slice(k - 1)[i] * s_prev / s_now;
        }
        for (int it = 0;; ++it) {
            auto cur = psi.slice(k);
            std::copy(cur.begin(), cur.end(), old.begin());
            double change = 0.0;
            double size = 0.0;
            for (std::size_t m = 0; m < nm; ++m) {
                for (std::size_t v = 0; v < nv; ++v) {
                    double sc = 0.0;
                    if (scatters) {
                        for (std::size_t mp = 0; mp < nm; ++mp) {
                            per_voxel[mp] = old[mp * nv + v];
                        }
                        sc = scat.row(v, m, per_voxel);
                    }
                    src[v] = s_prev * psi(k - 1, m, v) / de + q(k, m, v) + sc;
                    u[v] = 0.0;
                }
                direct_sweep(p.grid, p.xs.sigma_t, p.quad.direction(m), a, src, u);
                for (std::size_t v = 0; v < nv; ++v) {
                    change = std::max(change, std::abs(u[v] - old[m * nv + v]));
                    size = std::max(size, std::abs(u[v]));
                    psi(k, m, v) = u[v];
                }
            }
            if (!scatters || change <= tolerance * size) {
                break;
            }
            if (it + 1 >= max_iterations) {
                throw SolverError("direct_march: source iteration did not converge", change, it + 1);
            }
        }
    }
    return psi;
}

TransportProblem refine(const TransportProblem& base, int factor)
{
    if (factor < 1) {
        throw ContractError("refine: factor must be positive");
    }
    const SpatialGrid& g = base.grid;
    std::vector<double> extent(g.extent.begin(), g.extent.begin() + g.dims);
    std::vector<int> cells;
    for (int a = 0; a < g.dims; ++a) {
        cells.push_back(g.cells[static_cast<std::size_t>(a)] * factor);
    }
    TransportProblem out;
    out.grid = build_grid(g.dims, extent, cells);
    out.quad = base.quad;
    const std::size_t nv = out.grid.num_voxels();
    out.xs.sigma_t.resize(nv);
    out.xs.sigma_s.resize(nv);
    out.xs.kernel.resize(nv);
    out.xs.g.resize(nv);
    for (std::size_t v = 0; v < nv; ++v) {
        const auto c = out.grid.coords(v);
        const std::size_t parent = g.index(c[0] / factor, g.dims > 1 ? c[1] / factor : 0,
                                           g.dims > 2 ? c[2] / factor : 0);
        out.xs.sigma_t[v] = base.xs.sigma_t[parent];
        out.xs.sigma_s[v] = base.xs.sigma_s[parent];
        out.xs.kernel[v] = base.xs.kernel[parent];
        out.xs.g[v] = base.xs.g[parent];
    }
    out.energy = build_energy_map(base.energy.stopping_power(), base.energy.eps_max(),
                                  base.energy.steps() * static_cast<std::size_t>(factor));
    return out;
}

TransportProblem collisionless(const TransportProblem& p)
{
    TransportProblem out = p;
    std::fill(out.xs.sigma_t.begin(), out.xs.sigma_t.end(), 0.0);
    std::fill(out.xs.sigma_s.begin(), out.xs.sigma_s.end(), 0.0);
    return out;
}

Field random_field(const FieldShape& shape, std::mt19937_64& rng, double lo, double hi)
{
    std::uniform_real_distribution<double> dist(lo, hi);
    Field f(shape);
    for (double& x : f.values()) {
        x = dist(rng);
    }
    return f;
}

GradientCheck gradient_check(const TransportSolver& solver, const ObjectiveConfig& cfg,
                             const Field& q, const Field& dq, std::span<const double> steps)
{
    const TransportProblem& p = solver.problem();
    const GradientResult g = gradient(solver, q, cfg);
    const double exact = weighted_inner(p, g.gradient.values(), dq.values());
    GradientCheck out;
    out.min_error = std::numeric_limits<double>::infinity();
    for (double h : steps) {
        Field qp = q;
        qp.axpy(h, dq);
        Field qm = q;
        qm.axpy(-h, dq);
        const double jp = objective(p, solver.solve_forward(qp), qp, cfg);
        const double jm = objective(p, solver.solve_forward(qm), qm, cfg);
        const double fd = (jp - jm) / (2.0 * h);
        const double err = std::abs(fd - exact) / std::max(std::abs(exact), 1e-300);
        out.steps.push_back(h);
        out.errors.push_back(err);
        out.min_error = std::min(out.min_error, err);
    }
    return out;
}

double Ladder::min_order() const
{
    if (orders.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return *std::min_element(orders.begin(), orders.end());
}

double bump(const SpatialGrid& grid, const Vec3& x)
{
    double radius = std::numeric_limits<double>::infinity();
    double d2 = 0.0;
    for (int a = 0; a < grid.dims; ++a) {
        const auto i = static_cast<std::size_t>(a);
        radius = std::min(radius, 0.45 * grid.extent[i]);
        const double t = x[i] - 0.5 * grid.extent[i];
        d2 += t * t;
    }
    const double d = std::sqrt(d2);
    if (d >= radius) {
        return 0.0;
    }
    const double c = std::cos(0.5 * M_PI * d / radius);
    return c * c;
}

Ladder transformation_equivalence(const TransportProblem& base, const SolverSettings& settings,
                                  int levels)
{
    Ladder out;
    for (int l = 0; l < levels; ++l) {
        const TransportProblem p = refine(base, 1 << l);
        SolverSettings s = settings;
        s.tolerance = std::min(settings.tolerance, 1e-13);
        s.max_iterations = std::max(settings.max_iterations, 2000);
        const TransportSolver solver(p, s);
        const Field q = bump_source(p);
        const Field remapped = solver.solve_forward(q);
        const Field direct = direct_march(p, q);
        out.cells.push_back(p.grid.cells[0]);
        out.errors.push_back(relative_distance(p, remapped, direct));
    }
    return finish(std::move(out));
}

Ladder collisionless_convergence(const TransportProblem& base, int levels)
{
    const GaussRule rule = gauss_legendre(8);
    constexpr int kPanels = 4;
    Ladder out;
    for (int l = 0; l < levels; ++l) {
        const TransportProblem p = collisionless(refine(base, 1 << l));
        const TransportSolver solver(p);
        const Field q = bump_source(p);
        const Field psi = solver.solve_forward(q);

        Field oracle(p.field_shape());
        const auto eps = p.energy.eps_nodes();
        const double eps_max = p.energy.eps_max();
        const DirectionalFunction eta = [&](const Vec3& x, std::size_t) { return bump(p.grid, x); };
        for (std::size_t k = 1; k < eps.size(); ++k) {
            auto slice = oracle.slice(k);
            const double width = eps[k] / kPanels;
            for (int panel = 0; panel < kPanels; ++panel) {
                const double a = width * panel;
                for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                    const double s = a + 0.5 * width * (rule.nodes[i] + 1.0);
                    const double w = 0.5 * width * rule.weights[i] * (1.0 - 0.5 * s / eps_max);
                    const auto shifted = free_streaming_oracle(eta, eps[k], s, p.energy, p.grid, p.quad);
                    for (std::size_t j = 0; j < slice.size(); ++j) {
                        slice[j] += w * shifted[j];
                    }
                }
            }
            const double inv_s = 1.0 / p.energy.stopping_at_nodes()[k];
            for (double& x : slice) {
                x *= inv_s;
            }
        }
        out.cells.push_back(p.grid.cells[0]);
        out.errors.push_back(relative_distance(p, psi, oracle));
    }
    return finish(std::move(out));
}

double positivity_ratio(const Field& psi)
{
    const auto v = psi.values();
    if (v.empty()) {
        return 1.0;
    }
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    if (*hi == 0.0 && *lo == 0.0) {
        return 1.0;
    }
    return *lo / std::abs(*hi);
}

GronwallResult gronwall_check(const TransportSolver& solver, std::span<const double> initial)
{
    const TransportProblem& p = solver.problem();
    const auto tau = p.energy.tau_nodes();
    const FieldShape shape = p.field_shape();
    TransformedField zero{BasicField<RemappedTag>(shape), std::vector<double>(tau.begin(), tau.end())};
    const TransformedField phi = solver.march(zero, initial);

    GronwallResult out;
    const double sigma_max = p.xs.sigma_s.empty()
                                 ? 0.0
                                 : *std::max_element(p.xs.sigma_s.begin(), p.xs.sigma_s.end());
    out.k_norm = sigma_max * p.quad.measure();
    double max_dt = 0.0;
    for (std::size_t k = 1; k < tau.size(); ++k) {
        max_dt = std::max(max_dt, tau[k] - tau[k - 1]);
    }
    out.delta = 2.0 * out.k_norm * max_dt;

    auto norm2 = [&](std::span<const double> slice) {
        double total = 0.0;
        for (std::size_t m = 0; m < shape.directions; ++m) {
            double acc = 0.0;
            for (std::size_t v = 0; v < shape.voxels; ++v) {
                const double x = slice[m * shape.voxels + v];
                acc += x * x;
            }
            total += p.quad.weight(m) * acc;
        }
        return total * p.grid.cell_volume();
    };
    const double n0 = norm2(phi.values.slice(0));
    if (!(n0 > 0.0)) {
        throw ContractError("gronwall_check: initial slice must be non-zero");
    }
    out.worst_margin = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < tau.size(); ++k) {
        const double growth = norm2(phi.values.slice(k)) / n0;
        const double margin = std::log(growth) - (2.0 * out.k_norm * tau[k] + out.delta);
        out.worst_margin = std::max(out.worst_margin, margin);
    }
    return out;
}

std::vector<Check> run_property_suite(const TransportProblem& problem, const SolverSettings& settings,
                                      std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    SolverSettings tight = settings;
    tight.tolerance = std::min(settings.tolerance, 1e-13);
    tight.max_iterations = std::max(settings.max_iterations, 2000);
    const TransportSolver solver(problem, tight);
    const FieldShape shape = problem.field_shape();
    std::vector<Check> checks;

    {
        double worst = 0.0;
        for (int i = 0; i < 3; ++i) {
            const Field w = random_field(shape, rng, 0.0, 1.0);
            const Field z = random_field(shape, rng, 0.0, 1.0);
            worst = std::max(worst, adjoint_identity_gap(solver, w, z));
        }
        const double tol = solver.scattering().empty() ? 1e-12 : 1e-10;
        checks.push_back({"adjoint identity gap", worst <= tol, worst, tol, "3 random pairs"});
    }
    {
        ObjectiveConfig cfg;
        cfg.alpha1.assign(shape.voxels, 1.0);
        cfg.alpha2 = 1.0;
        cfg.psi_bar = random_field(shape, rng, 0.0, 1.0);
        cfg.q_bar = random_field(shape, rng, 0.0, 1.0);
        const std::vector<double> steps{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9};
        double worst = 0.0;
        for (int i = 0; i < 2; ++i) {
            const Field q = random_field(shape, rng, 0.0, 1.0);
            const Field dq = random_field(shape, rng, -1.0, 1.0);
            worst = std::max(worst, gradient_check(solver, cfg, q, dq, steps).min_error);
        }
        checks.push_back({"gradient check", worst <= 1e-6, worst, 1e-6,
                          "central differences, 2 random directions"});
    }
    {
        double worst = 1.0;
        for (int i = 0; i < 3; ++i) {
            const Field q = random_field(shape, rng, 0.0, 1.0);
            worst = std::min(worst, positivity_ratio(solver.solve_forward(q)));
        }
        checks.push_back({"positivity", worst >= -1e-13, worst, -1e-13, "min psi / max psi"});
    }
    {
        const Ladder l = transformation_equivalence(problem, tight);
        std::ostringstream os;
        os << "cells";
        for (int c : l.cells) {
            os << ' ' << c;
        }
        checks.push_back({"transformation equivalence", l.min_order() >= 0.9, l.min_order(), 0.9,
                          os.str()});
    }
    {
        const Ladder l = collisionless_convergence(problem);
        std::ostringstream os;
        os << "cells";
        for (int c : l.cells) {
            os << ' ' << c;
        }
        checks.push_back({"collisionless convergence", l.min_order() >= 0.9, l.min_order(), 0.9,
                          os.str()});
    }
    return checks;
}

std::string format_table(std::span<const Check> checks)
{
    std::ostringstream os;
    os << std::left;
    for (const Check& c : checks) {
        os << (c.passed ? "PASS  " : "FAIL  ");
        os.width(28);
        os << c.name;
        os << " value=" << c.value << " threshold=" << c.threshold;
        if (!c.detail.empty()) {
            os << "  (" << c.detail << ")";
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace bcsd::verify
