// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#include "bcsd/transport.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bcsd/error.hpp"
#include "parallel.hpp"

namespace bcsd {

std::string to_string(const FieldShape& s)
{
    std::ostringstream os;
    os << "[" << s.voxels << " voxels x " << s.directions << " directions x " << s.energies
       << " energies]";
    return os.str();
}

bool all_finite(std::span<const double> values)
{
    return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

void SolverSettings::validate() const
{
    if (!(tolerance > 0.0)) {
        throw ConfigError("solver tolerance must be positive");
    }
    if (max_iterations < 1) {
        throw ConfigError("solver max_iterations must be at least 1");
    }
    if (threads < 1) {
        throw ConfigError("thread count must be at least 1");
    }
}

void TransportProblem::validate() const
{
    if (quad.dims() != grid.dims) {
        throw ContractError("quadrature and grid dimensions differ");
    }
    if (xs.size() != grid.num_voxels() || xs.sigma_s.size() != grid.num_voxels()) {
        throw ContractError("cross sections do not cover the grid");
    }
    if (energy.num_nodes() < 3) {
        throw ContractError("energy map is not initialised");
    }
}

double weighted_inner(const TransportProblem& p, std::span<const double> a,
                      std::span<const double> b)
{
    const FieldShape shape = p.field_shape();
    if (a.size() != shape.size() || b.size() != shape.size()) {
        throw ContractError("weighted_inner: field size does not match problem " + to_string(shape));
    }
    const auto c = p.energy.energy_weights();
    double total = 0.0;
    std::size_t i = 0;
    for (std::size_t k = 0; k < shape.energies; ++k) {
        double per_energy = 0.0;
        for (std::size_t m = 0; m < shape.directions; ++m) {
            double per_direction = 0.0;
            for (std::size_t v = 0; v < shape.voxels; ++v, ++i) {
                per_direction += a[i] * b[i];
            }
            per_energy += p.quad.weight(m) * per_direction;
        }
        total += c[k] * per_energy;
    }
    return total * p.grid.cell_volume();
}

double weighted_norm(const TransportProblem& p, std::span<const double> a)
{
    return std::sqrt(weighted_inner(p, a, a));
}

//---------------------------------------------------------------------------//
// Sweeps
//---------------------------------------------------------------------------//

namespace {

struct SweepGeometry
{
    std::array<double, 3> coef{0.0, 0.0, 0.0};  // |Omega_a| / h_a
    std::array<int, 3> upstream{0, 0, 0};       // -1: neighbour at lower index, +1: higher
    std::array<std::ptrdiff_t, 3> stride{1, 1, 1};
};

SweepGeometry sweep_geometry(const SpatialGrid& grid, const Vec3& omega, SweepMode mode)
{
    SweepGeometry g;
    g.stride = {1, grid.cells[0], static_cast<std::ptrdiff_t>(grid.cells[0]) * grid.cells[1]};
    const double sign = mode == SweepMode::Forward ? 1.0 : -1.0;
    for (int a = 0; a < grid.dims; ++a) {
        const double w = sign * omega[a];
        g.coef[a] = std::abs(w) / grid.h[a];
        g.upstream[a] = w > 0.0 ? -1 : (w < 0.0 ? +1 : 0);
    }
    return g;
}

}  // namespace

void sweep_one_direction(const SpatialGrid& grid, std::span<const double> sigma_t,
                         const Vec3& omega, std::span<const double> source, double inv_dt,
                         std::span<double> out, SweepMode mode, const InflowFunction& inflow)
{
    const std::size_t nv = grid.num_voxels();
    if (sigma_t.size() != nv || source.size() != nv || out.size() != nv) {
        throw ContractError("sweep_one_direction: array sizes do not match the grid");
    }
    const SweepGeometry g = sweep_geometry(grid, omega, mode);
    const int nx = grid.cells[0];
    const int ny = grid.cells[1];
    const int nz = grid.cells[2];
    // Upstream-first traversal: increasing index when the upstream neighbour is below.
    auto ordered = [](int n, int upstream, int t) { return upstream > 0 ? n - 1 - t : t; };
    for (int tk = 0; tk < nz; ++tk) {
        const int k = ordered(nz, g.upstream[2], tk);
        for (int tj = 0; tj < ny; ++tj) {
            const int j = ordered(ny, g.upstream[1], tj);
            for (int ti = 0; ti < nx; ++ti) {
                const int i = ordered(nx, g.upstream[0], ti);
                const std::array<int, 3> c{i, j, k};
                const std::size_t v = grid.index(i, j, k);
                double diag = inv_dt + sigma_t[v];
                double rhs = source[v];
                for (int a = 0; a < grid.dims; ++a) {
                    if (g.upstream[a] == 0) {
                        continue;
                    }
                    diag += g.coef[a];
                    const int nb = c[a] + g.upstream[a];
                    if (nb >= 0 && nb < grid.cells[a]) {
                        rhs += g.coef[a] * out[v + g.upstream[a] * g.stride[a]];
                    } else if (inflow) {
                        rhs += g.coef[a] * inflow(v, a);
                    }
                }
                out[v] = rhs / diag;
            }
        }
    }
}

std::vector<double> sweep_one_direction(const SpatialGrid& grid, std::span<const double> sigma_t,
                                        const Vec3& omega, std::span<const double> source,
                                        double inv_dt, const InflowFunction& inflow)
{
    std::vector<double> out(grid.num_voxels(), 0.0);
    sweep_one_direction(grid, sigma_t, omega, source, inv_dt, out, SweepMode::Forward, inflow);
    return out;
}

void apply_streaming(const SpatialGrid& grid, std::span<const double> sigma_t, const Vec3& omega,
                     std::span<const double> u, std::span<double> out, SweepMode mode)
{
    const std::size_t nv = grid.num_voxels();
    if (sigma_t.size() != nv || u.size() != nv || out.size() != nv) {
        throw ContractError("apply_streaming: array sizes do not match the grid");
    }
    const SweepGeometry g = sweep_geometry(grid, omega, mode);
    for (std::size_t v = 0; v < nv; ++v) {
        const auto c = grid.coords(v);
        double acc = sigma_t[v] * u[v];
        for (int a = 0; a < grid.dims; ++a) {
            if (g.upstream[a] == 0) {
                continue;
            }
            const int nb = c[a] + g.upstream[a];
            const double up = (nb >= 0 && nb < grid.cells[a]) ? u[v + g.upstream[a] * g.stride[a]]
                                                              : 0.0;
            acc += g.coef[a] * (u[v] - up);
        }
        out[v] = acc;
    }
}

//---------------------------------------------------------------------------//
// Scattering
//---------------------------------------------------------------------------//

ScatteringOperator::ScatteringOperator(const AngularQuadrature& quad, const CrossSections& xs)
    : nm_(quad.size()), nv_(xs.size()), empty_(!xs.has_scattering()), sigma_s_(xs.sigma_s)
{
    std::vector<std::pair<KernelKind, double>> keys;
    kernel_of_voxel_.resize(nv_);
    for (std::size_t v = 0; v < nv_; ++v) {
        std::pair<KernelKind, double> key{xs.kernel[v], xs.g[v]};
        if (key.first == KernelKind::Isotropic || key.second == 0.0) {
            key = {KernelKind::Isotropic, 0.0};
        }
        auto it = std::find(keys.begin(), keys.end(), key);
        if (it == keys.end()) {
            keys.push_back(key);
            it = keys.end() - 1;
        }
        kernel_of_voxel_[v] = static_cast<std::size_t>(it - keys.begin());
    }
    for (const auto& [kind, g] : keys) {
        std::vector<double> mat(nm_ * nm_);
        for (std::size_t m = 0; m < nm_; ++m) {
            const Vec3& a = quad.direction(m);
            for (std::size_t mp = 0; mp < nm_; ++mp) {
                const Vec3& b = quad.direction(mp);
                const double mu = std::clamp(a[0] * b[0] + a[1] * b[1] + a[2] * b[2], -1.0, 1.0);
                mat[m * nm_ + mp] = quad.weight(mp) * kernel_eval(kind, 1.0, g, mu, quad.dims());
            }
        }
        kernels_.push_back(std::move(mat));
    }
}

double ScatteringOperator::entry(std::size_t v, std::size_t m, std::size_t m_prime) const
{
    return sigma_s_[v] * kernels_[kernel_of_voxel_[v]][m * nm_ + m_prime];
}

void ScatteringOperator::apply(std::span<const double> slice, std::span<double> out) const
{
    if (slice.size() != nm_ * nv_ || out.size() != nm_ * nv_) {
        throw ContractError("scattering: slice size mismatch");
    }
    std::fill(out.begin(), out.end(), 0.0);
    if (empty_) {
        return;
    }
    if (kernels_.size() == 1) {
        const auto& mat = kernels_.front();
        for (std::size_t m = 0; m < nm_; ++m) {
            double* o = out.data() + m * nv_;
            for (std::size_t mp = 0; mp < nm_; ++mp) {
                const double c = mat[m * nm_ + mp];
                const double* in = slice.data() + mp * nv_;
                for (std::size_t v = 0; v < nv_; ++v) {
                    o[v] += c * in[v];
                }
            }
            for (std::size_t v = 0; v < nv_; ++v) {
                o[v] *= sigma_s_[v];
            }
        }
        return;
    }
    for (std::size_t m = 0; m < nm_; ++m) {
        double* o = out.data() + m * nv_;
        for (std::size_t mp = 0; mp < nm_; ++mp) {
            const double* in = slice.data() + mp * nv_;
            for (std::size_t v = 0; v < nv_; ++v) {
                o[v] += kernels_[kernel_of_voxel_[v]][m * nm_ + mp] * in[v];
            }
        }
        for (std::size_t v = 0; v < nv_; ++v) {
            o[v] *= sigma_s_[v];
        }
    }
}

std::vector<double> apply_scattering(std::span<const double> slice, const AngularQuadrature& quad,
                                     const CrossSections& xs)
{
    std::vector<double> out(slice.size());
    ScatteringOperator(quad, xs).apply(slice, out);
    return out;
}

//---------------------------------------------------------------------------//
// Solver
//---------------------------------------------------------------------------//

TransportSolver::TransportSolver(TransportProblem problem, SolverSettings settings)
    : problem_(std::move(problem)), settings_(settings)
{
    problem_.validate();
    settings_.validate();
    scattering_ = ScatteringOperator(problem_.quad, problem_.xs);
}

StepStats TransportSolver::solve_slice(std::span<const double> rhs, double inv_dt,
                                       std::span<double> out, SweepMode mode) const
{
    const std::size_t nv = problem_.grid.num_voxels();
    const std::size_t nm = problem_.quad.size();
    if (rhs.size() != nv * nm || out.size() != nv * nm) {
        throw ContractError("solve_slice: slice size mismatch");
    }
    const auto& grid = problem_.grid;
    const std::span<const double> sigma_t = problem_.xs.sigma_t;
    auto sweep_all = [&](std::span<const double> src, std::span<double> dst) {
        detail::parallel_for(nm, settings_.threads, [&](std::size_t m) {
            sweep_one_direction(grid, sigma_t, problem_.quad.direction(m), src.subspan(m * nv, nv),
                                inv_dt, dst.subspan(m * nv, nv), mode);
        });
    };
    if (scattering_.empty()) {
        sweep_all(rhs, out);
        return {1, 0.0};
    }
    std::vector<double> total(nv * nm);
    std::vector<double> next(nv * nm);
    double rel = 0.0;
    for (int it = 1; it <= settings_.max_iterations; ++it) {
        scattering_.apply(out, total);
        for (std::size_t i = 0; i < total.size(); ++i) {
            total[i] += rhs[i];
        }
        sweep_all(total, next);
        double diff2 = 0.0;
        double norm2 = 0.0;
        for (std::size_t m = 0; m < nm; ++m) {
            double d = 0.0;
            double n = 0.0;
            for (std::size_t v = 0; v < nv; ++v) {
                const std::size_t i = m * nv + v;
                const double delta = next[i] - out[i];
                d += delta * delta;
                n += next[i] * next[i];
            }
            diff2 += problem_.quad.weight(m) * d;
            norm2 += problem_.quad.weight(m) * n;
        }
        std::copy(next.begin(), next.end(), out.begin());
        if (norm2 == 0.0) {
            return {it, 0.0};
        }
        rel = std::sqrt(diff2 / norm2);
        if (!std::isfinite(rel)) {
            throw SolverError("source iteration produced non-finite values", rel, it);
        }
        if (rel <= settings_.tolerance) {
            return {it, rel};
        }
    }
    std::ostringstream os;
    os << "source iteration did not converge in " << settings_.max_iterations
       << " iterations (relative change " << rel << ")";
    throw SolverError(os.str(), rel, settings_.max_iterations);
}

std::vector<double> TransportSolver::step_energy(std::span<const double> phi_prev,
                                                 std::span<const double> source, double dt) const
{
    if (!(dt > 0.0)) {
        throw ContractError("step_energy: dt must be positive");
    }
    if (phi_prev.size() != source.size()) {
        throw ContractError("step_energy: slice size mismatch");
    }
    std::vector<double> rhs(phi_prev.size());
    for (std::size_t i = 0; i < rhs.size(); ++i) {
        rhs[i] = phi_prev[i] / dt + source[i];
    }
    std::vector<double> out(phi_prev.begin(), phi_prev.end());
    solve_slice(rhs, 1.0 / dt, out);
    return out;
}

TransformedField TransportSolver::march(const TransformedField& source,
                                        std::span<const double> initial) const
{
    const auto& tau = source.tau_nodes;
    const FieldShape shape{problem_.grid.num_voxels(), problem_.quad.size(), tau.size()};
    require_same_shape(source.values.shape(), shape, "march");
    if (tau.size() < 2) {
        throw ContractError("march: need at least two tau nodes");
    }
    TransformedField phi{BasicField<RemappedTag>(shape), tau};
    if (!initial.empty()) {
        if (initial.size() != shape.slice_size()) {
            throw ContractError("march: initial slice size mismatch");
        }
        std::copy(initial.begin(), initial.end(), phi.values.slice(0).begin());
    }
    std::vector<double> rhs(shape.slice_size());
    for (std::size_t k = 1; k < tau.size(); ++k) {
        const double dt = tau[k] - tau[k - 1];
        if (!(dt > 0.0)) {
            throw ContractError("march: tau nodes must be strictly increasing");
        }
        const auto prev = phi.values.slice(k - 1);
        const auto src = source.values.slice(k - 1);
        for (std::size_t i = 0; i < rhs.size(); ++i) {
            rhs[i] = prev[i] / dt + src[i];
        }
        auto cur = phi.values.slice(k);
        std::copy(prev.begin(), prev.end(), cur.begin());
        solve_slice(rhs, 1.0 / dt, cur);
    }
    return phi;
}

Field TransportSolver::solve_forward(const Field& q) const
{
    require_same_shape(q.shape(), shape(), "solve_forward");
    const TransformedField q_tilde = transform_source(q, problem_.energy);
    const TransformedField phi = march(q_tilde, {});
    return untransform_state(phi, problem_.energy);
}

Field solve_forward(const TransportSolver& solver, const Field& q)
{
    return solver.solve_forward(q);
}

//---------------------------------------------------------------------------//
// Energy transformation
//---------------------------------------------------------------------------//

TransformedField transform_source(const Field& q, const EnergyMap& map)
{
    const FieldShape shape = q.shape();
    if (shape.energies != map.num_nodes()) {
        throw ContractError("transform_source: energy axis does not match the map");
    }
    const auto tau = map.tau_nodes();
    TransformedField out{BasicField<RemappedTag>(shape), {tau.begin(), tau.end()}};
    const auto s = map.stopping_at_nodes();
    for (std::size_t k = 0; k < shape.energies; ++k) {
        const auto in = q.slice(k);
        auto dst = out.values.slice(k);
        for (std::size_t i = 0; i < in.size(); ++i) {
            dst[i] = s[k] * in[i];
        }
    }
    return out;
}

TransformedField transform_source(const Field& q, const EnergyMap& map,
                                  std::span<const double> tau_nodes)
{
    if (q.shape().energies != map.num_nodes()) {
        throw ContractError("transform_source: energy axis does not match the map");
    }
    FieldShape shape = q.shape();
    shape.energies = tau_nodes.size();
    TransformedField out{BasicField<RemappedTag>(shape), {tau_nodes.begin(), tau_nodes.end()}};
    const double de = map.eps_step();
    for (std::size_t j = 0; j < tau_nodes.size(); ++j) {
        const double eps = map.r_inverse(tau_nodes[j]);
        const double s = map.stopping(eps);
        auto k = static_cast<std::size_t>(std::floor(eps / de));
        k = std::min(k, map.steps() - 1);
        const double t = std::clamp((eps - map.eps_nodes()[k]) / de, 0.0, 1.0);
        const auto lo = q.slice(k);
        const auto hi = q.slice(k + 1);
        auto dst = out.values.slice(j);
        for (std::size_t i = 0; i < dst.size(); ++i) {
            dst[i] = s * ((1.0 - t) * lo[i] + t * hi[i]);
        }
    }
    return out;
}

Field untransform_state(const TransformedField& phi, const EnergyMap& map)
{
    FieldShape shape = phi.values.shape();
    const auto& tau = phi.tau_nodes;
    if (tau.size() != shape.energies || tau.size() < 2) {
        throw ContractError("untransform_state: tau nodes do not match the field");
    }
    shape.energies = map.num_nodes();
    Field psi(shape);
    const auto s = map.stopping_at_nodes();
    const auto map_tau = map.tau_nodes();
    const bool same_nodes = std::equal(tau.begin(), tau.end(), map_tau.begin(), map_tau.end());
    for (std::size_t k = 0; k < map.num_nodes(); ++k) {
        auto dst = psi.slice(k);
        if (same_nodes) {
            const auto src = phi.values.slice(k);
            for (std::size_t i = 0; i < dst.size(); ++i) {
                dst[i] = src[i] / s[k];
            }
            continue;
        }
        const double t_k = map_tau[k];
        const double slack = 1e-12 * std::max(1.0, tau.back());
        if (t_k < tau.front() - slack || t_k > tau.back() + slack) {
            throw DomainError("untransform_state: tau nodes do not cover [0, T_R]");
        }
        auto it = std::upper_bound(tau.begin(), tau.end(), t_k);
        std::size_t j = static_cast<std::size_t>(it - tau.begin());
        j = std::clamp<std::size_t>(j, 1, tau.size() - 1);
        const double t = std::clamp((t_k - tau[j - 1]) / (tau[j] - tau[j - 1]), 0.0, 1.0);
        const auto lo = phi.values.slice(j - 1);
        const auto hi = phi.values.slice(j);
        for (std::size_t i = 0; i < dst.size(); ++i) {
            dst[i] = ((1.0 - t) * lo[i] + t * hi[i]) / s[k];
        }
    }
    return psi;
}

//---------------------------------------------------------------------------//

std::vector<double> free_streaming_oracle(const DirectionalFunction& eta, double eps, double s,
                                          const EnergyMap& map, const SpatialGrid& grid,
                                          const AngularQuadrature& quad)
{
    const double path = map.r(eps) - map.r(s);
    const std::size_t nv = grid.num_voxels();
    std::vector<double> out(nv * quad.size(), 0.0);
    for (std::size_t m = 0; m < quad.size(); ++m) {
        const Vec3& om = quad.direction(m);
        for (std::size_t v = 0; v < nv; ++v) {
            const Vec3 c = grid.center(v);
            const Vec3 x{c[0] - om[0] * path, c[1] - om[1] * path, c[2] - om[2] * path};
            out[m * nv + v] = grid.contains(x) ? eta(x, m) : 0.0;
        }
    }
    return out;
}

double pde_residual(const TransportSolver& solver, const Field& psi, const Field& q)
{
    const TransportProblem& p = solver.problem();
    require_same_shape(psi.shape(), p.field_shape(), "pde_residual");
    require_same_shape(q.shape(), p.field_shape(), "pde_residual");
    const std::size_t nv = p.grid.num_voxels();
    const std::size_t nm = p.quad.size();
    const auto s = p.energy.stopping_at_nodes();
    const auto tau = p.energy.tau_nodes();
    Field res(p.field_shape());
    {
        const auto first = psi.slice(0);
        std::copy(first.begin(), first.end(), res.slice(0).begin());
    }
    std::vector<double> phi(nv * nm);
    std::vector<double> scat(nv * nm);
    std::vector<double> stream(nv);
    for (std::size_t k = 1; k < p.energy.num_nodes(); ++k) {
        const double dt = tau[k] - tau[k - 1];
        const auto cur = psi.slice(k);
        const auto prev = psi.slice(k - 1);
        const auto src = q.slice(k - 1);
        for (std::size_t i = 0; i < phi.size(); ++i) {
            phi[i] = s[k] * cur[i];
        }
        solver.scattering().apply(phi, scat);
        auto out = res.slice(k);
        for (std::size_t m = 0; m < nm; ++m) {
            apply_streaming(p.grid, p.xs.sigma_t, p.quad.direction(m),
                            std::span<const double>(phi).subspan(m * nv, nv), stream);
            for (std::size_t v = 0; v < nv; ++v) {
                const std::size_t i = m * nv + v;
                const double ddt = (phi[i] - s[k - 1] * prev[i]) / dt;
                out[i] = (ddt + stream[v] - scat[i] - s[k - 1] * src[i]) / s[k];
            }
        }
    }
    return weighted_norm(p, res.values());
}

}  // namespace bcsd
