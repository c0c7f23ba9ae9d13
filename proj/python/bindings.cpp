// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <sstream>

#include "bcsd/adjoint.hpp"
#include "bcsd/cli.hpp"
#include "bcsd/config.hpp"
#include "bcsd/dose.hpp"
#include "bcsd/error.hpp"
#include "bcsd/optimize.hpp"
#include "bcsd/transport.hpp"
#include "bcsd/verify.hpp"

namespace py = pybind11;
using namespace bcsd;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

template<class Tag>
Array to_numpy(const BasicField<Tag>& f)
{
    const FieldShape& s = f.shape();
    Array out({s.energies, s.directions, s.voxels});
    std::copy(f.values().begin(), f.values().end(), out.mutable_data());
    return out;
}

Field from_numpy(const Array& a, const FieldShape& shape)
{
    if (a.ndim() != 3 || static_cast<std::size_t>(a.shape(0)) != shape.energies
        || static_cast<std::size_t>(a.shape(1)) != shape.directions
        || static_cast<std::size_t>(a.shape(2)) != shape.voxels) {
        throw ContractError("array shape must be (energies, directions, voxels) = " + to_string(shape));
    }
    Field f(shape);
    std::copy(a.data(), a.data() + a.size(), f.values().begin());
    return f;
}

Array vector_to_numpy(const std::vector<double>& v)
{
    Array out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

/// Parsed configuration with its solver kept alive alongside.
class Problem
{
  public:
    explicit Problem(RunConfig cfg) : cfg_(std::move(cfg)), solver_(cfg_.problem(), cfg_.solver) {}

    const RunConfig& config() const { return cfg_; }
    const TransportSolver& solver() const { return solver_; }
    FieldShape shape() const { return solver_.problem().field_shape(); }

  private:
    RunConfig cfg_;
    TransportSolver solver_;
};

py::dict history_dict(const std::vector<OptRecord>& h)
{
    py::list rows;
    for (const OptRecord& r : h) {
        py::dict d;
        d["iteration"] = r.iteration;
        d["objective"] = r.objective;
        d["gradient_norm"] = r.gradient_norm;
        d["kkt_residual"] = r.kkt_residual;
        d["step"] = r.step;
        rows.append(d);
    }
    py::dict out;
    out["history"] = rows;
    return out;
}

}  // namespace

PYBIND11_MODULE(_bcsd, m)
{
    m.doc() = "Boltzmann continuous slowing down transport: forward, adjoint and optimal control";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
    py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::class_<Problem>(m, "Problem")
        .def_static("from_config", [](const std::filesystem::path& p) { return Problem(parse_config(p)); },
                    py::arg("path"))
        .def_static("from_json",
                    [](const std::string& text, const std::filesystem::path& base) {
                        return Problem(parse_config_text(text, base));
                    },
                    py::arg("text"), py::arg("base_dir") = ".")
        .def_property_readonly("shape",
                               [](const Problem& p) {
                                   const FieldShape s = p.shape();
                                   return py::make_tuple(s.energies, s.directions, s.voxels);
                               })
        .def_property_readonly("cells",
                               [](const Problem& p) {
                                   const auto& c = p.config().grid.cells;
                                   return py::make_tuple(c[0], c[1], c[2]);
                               })
        .def_property_readonly("eps_nodes",
                               [](const Problem& p) {
                                   const auto e = p.config().energy.eps_nodes();
                                   return vector_to_numpy({e.begin(), e.end()});
                               })
        .def_property_readonly("weights",
                               [](const Problem& p) {
                                   std::vector<double> w;
                                   for (std::size_t i = 0; i < p.config().quad.size(); ++i) {
                                       w.push_back(p.config().quad.weight(i));
                                   }
                                   return vector_to_numpy(w);
                               })
        .def("source", [](const Problem& p) { return to_numpy(build_source(p.config().source, p.config())); })
        .def(
            "forward",
            [](const Problem& p, const std::optional<Array>& q) {
                const Field src = q ? from_numpy(*q, p.shape()) : build_source(p.config().source, p.config());
                Field psi;
                {
                    py::gil_scoped_release release;
                    psi = p.solver().solve_forward(src);
                }
                return to_numpy(psi);
            },
            py::arg("q") = py::none())
        .def("adjoint",
             [](const Problem& p, const Array& z) {
                 const Field src = from_numpy(z, p.shape());
                 AdjointField lam;
                 {
                     py::gil_scoped_release release;
                     lam = solve_adjoint(p.solver(), src);
                 }
                 return to_numpy(lam);
             })
        .def("adjoint_identity_gap",
             [](const Problem& p, const Array& w, const Array& z) {
                 return adjoint_identity_gap(p.solver(), from_numpy(w, p.shape()), from_numpy(z, p.shape()));
             })
        .def("dose",
             [](const Problem& p, const Array& psi) {
                 return vector_to_numpy(compute_dose(p.solver().problem(), from_numpy(psi, p.shape())).values);
             })
        .def("objective",
             [](const Problem& p, const Array& q) {
                 const ObjectiveConfig obj = build_objective(p.config(), p.solver());
                 const Field control = from_numpy(q, p.shape());
                 return objective(p.solver().problem(), p.solver().solve_forward(control), control, obj);
             })
        .def("gradient",
             [](const Problem& p, const Array& q) {
                 const ObjectiveConfig obj = build_objective(p.config(), p.solver());
                 return to_numpy(gradient(p.solver(), from_numpy(q, p.shape()), obj).gradient);
             })
        .def("optimize",
             [](const Problem& p) {
                 const ObjectiveConfig obj = build_objective(p.config(), p.solver());
                 const OptimizerSettings opt = build_optimizer_settings(p.config());
                 OptResult r;
                 {
                     py::gil_scoped_release release;
                     r = optimize_projected_gradient(p.solver(), obj, opt);
                 }
                 py::dict out = history_dict(r.history);
                 out["q"] = to_numpy(r.state.q);
                 out["psi"] = to_numpy(r.state.psi);
                 out["lambda"] = to_numpy(r.state.lambda);
                 out["objective"] = r.state.objective;
                 out["kkt_residual"] = r.state.kkt_residual;
                 out["converged"] = r.converged;
                 return out;
             })
        .def("verify", [](const Problem& p) {
            const auto checks = verify::run_property_suite(p.solver().problem(), p.config().solver);
            py::list out;
            for (const auto& c : checks) {
                py::dict d;
                d["name"] = c.name;
                d["passed"] = c.passed;
                d["value"] = c.value;
                d["threshold"] = c.threshold;
                d["detail"] = c.detail;
                out.append(d);
            }
            return out;
        });

    m.def(
        "run",
        [](const std::vector<std::string>& args) {
            std::ostringstream out;
            std::ostringstream err;
            const int code = run_command(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run a command-line subcommand; returns (exit_code, stdout, stderr).");
}
