// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#include "bcsd/dose.hpp"

#include <algorithm>
#include <limits>

#include "bcsd/error.hpp"

namespace bcsd {

DoseMap compute_dose(const AngularQuadrature& quad, const EnergyMap& energy, const Field& psi)
{
    const FieldShape& shape = psi.shape();
    if (shape.directions != quad.size() || shape.energies != energy.num_nodes()) {
        throw ContractError("compute_dose: field shape " + to_string(shape)
                            + " does not match quadrature/energy grid");
    }
    const auto c = energy.energy_weights();
    const auto s = energy.stopping_at_nodes();
    DoseMap dose{std::vector<double>(shape.voxels, 0.0)};
    for (std::size_t k = 0; k < shape.energies; ++k) {
        for (std::size_t m = 0; m < shape.directions; ++m) {
            const double w = c[k] * quad.weight(m) * s[k];
            for (std::size_t v = 0; v < shape.voxels; ++v) {
                dose.values[v] += w * psi(k, m, v);
            }
        }
    }
    return dose;
}

DoseMap compute_dose(const TransportProblem& p, const Field& psi)
{
    require_same_shape(psi.shape(), p.field_shape(), "compute_dose");
    return compute_dose(p.quad, p.energy, psi);
}

DoseReport region_stats(const DoseMap& dose, const RegionMask& mask, const DoseBounds& bounds)
{
    if (dose.size() != mask.size()) {
        throw ContractError("region_stats: dose and mask sizes differ");
    }
    DoseReport report;
    report.bounds = bounds;
    for (Region r : kAllRegions) {
        RegionStats& st = report.regions[static_cast<std::size_t>(r)];
        st.region = r;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        double sum = 0.0;
        std::size_t violations = 0;
        for (std::size_t v = 0; v < dose.size(); ++v) {
            if (mask[v] != r) {
                continue;
            }
            const double d = dose[v];
            ++st.voxels;
            lo = std::min(lo, d);
            hi = std::max(hi, d);
            sum += d;
            if ((r == Region::Tumor && d < bounds.d_min) || (r == Region::Risk && d > bounds.d_max)) {
                ++violations;
            }
        }
        if (st.voxels > 0) {
            const auto n = static_cast<double>(st.voxels);
            st.min = lo;
            st.max = hi;
            st.mean = sum / n;
            st.violation_fraction = static_cast<double>(violations) / n;
        }
    }
    return report;
}

Dvh dvh(const DoseMap& dose, const RegionMask& mask, std::size_t bins)
{
    if (bins < 2) {
        throw ContractError("dvh: at least two bins required");
    }
    if (dose.size() != mask.size()) {
        throw ContractError("dvh: dose and mask sizes differ");
    }
    const double top = dose.values.empty() ? 0.0
                                           : *std::max_element(dose.values.begin(), dose.values.end());
    const double delta = (top > 0.0 ? top : 1.0) / static_cast<double>(bins - 1);
    Dvh out;
    out.edges.resize(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        out.edges[b] = delta * static_cast<double>(b);
    }
    for (Region r : kAllRegions) {
        DvhCurve& curve = out.curves[static_cast<std::size_t>(r)];
        curve.region = r;
        curve.fraction.assign(bins, 0.0);
        std::vector<double> values;
        for (std::size_t v = 0; v < dose.size(); ++v) {
            if (mask[v] == r) {
                values.push_back(dose[v]);
            }
        }
        curve.empty = values.empty();
        if (curve.empty) {
            continue;
        }
        std::sort(values.begin(), values.end());
        const auto n = static_cast<double>(values.size());
        for (std::size_t b = 0; b < bins; ++b) {
            const auto first = std::lower_bound(values.begin(), values.end(), out.edges[b]);
            curve.fraction[b] = static_cast<double>(values.end() - first) / n;
        }
    }
    return out;
}

double dose_tracking_discrepancy(const DoseMap& dose, std::span<const double> target,
                                 std::span<const double> alpha, double cell_volume)
{
    if (target.size() != dose.size() || alpha.size() != dose.size()) {
        throw ContractError("dose_tracking_discrepancy: size mismatch");
    }
    double total = 0.0;
    for (std::size_t v = 0; v < dose.size(); ++v) {
        const double r = dose[v] - target[v];
        total += alpha[v] * r * r;
    }
    return 0.5 * cell_volume * total;
}

}  // namespace bcsd
