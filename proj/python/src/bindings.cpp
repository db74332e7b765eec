/* Copyright 2026 The spinbus Authors. All Rights Reserved.
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at
    http://www.apache.org/licenses/LICENSE-2.0
Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "spinbus/errors.hpp"
#include "spinbus/experiments.hpp"
#include "spinbus/fidelity.hpp"
#include "spinbus/hamiltonian.hpp"
#include "spinbus/landscape.hpp"
#include "spinbus/optimizer.hpp"
#include "spinbus/pulse.hpp"

namespace py = pybind11;
using namespace spinbus;

namespace {

std::vector<double> copy(std::span<const double> s) { return {s.begin(), s.end()}; }

// Experiment output as JSON text; the Python layer parses it.
py::dict output_dict(const ExperimentOutput& out) {
  py::dict d;
  d["summary"] = out.summary.dump();
  py::list records;
  for (const ResultRecord& r : out.records) records.append(r.to_json().dump());
  d["records"] = records;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "spinbus native core";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<RangeError>(m, "RangeError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());

  py::class_<SimParams>(m, "SimParams")
      .def(py::init<>())
      .def_readwrite("B_z", &SimParams::B_z)
      .def_readwrite("db_perp", &SimParams::db_perp)
      .def_readwrite("db_par", &SimParams::db_par)
      .def_readwrite("Q", &SimParams::Q)
      .def_readwrite("q_linked", &SimParams::q_linked)
      .def_readwrite("kappa_z", &SimParams::kappa_z)
      .def_readwrite("T1_v", &SimParams::T1_v)
      .def_readwrite("T2_s", &SimParams::T2_s)
      .def_readwrite("dx_rms", &SimParams::dx_rms)
      .def_readwrite("dt", &SimParams::dt)
      .def("validate", &SimParams::validate);

  m.def("larmor_frequency", &larmor_frequency, "bare Zeeman frequency, GHz");
  m.def("frame_frequency", &frame_frequency, "rotating-frame frequency including 2κ_z, GHz");
  m.def("analytical_gate_time", &analytical_gate_time, py::arg("p"), py::arg("x0"));
  m.def("analytical_amplitude", &analytical_amplitude, py::arg("p"), py::arg("Tg"));
  m.def("t2_star", &t2_star, "charge-noise T2 from the longitudinal gradient, ns");

  py::class_<LandscapeProfile>(m, "LandscapeProfile")
      .def(py::init([](double x_start, double spacing, std::vector<double> re, std::vector<double> im) {
             return LandscapeProfile(x_start, spacing, std::move(re), std::move(im));
           }),
           py::arg("x_start"), py::arg("spacing"), py::arg("delta_real"), py::arg("delta_imag"))
      .def_property_readonly("x_start", &LandscapeProfile::x_start)
      .def_property_readonly("x_end", &LandscapeProfile::x_end)
      .def_property_readonly("spacing", &LandscapeProfile::spacing)
      .def_property_readonly("delta_real", [](const LandscapeProfile& l) { return copy(l.delta_real()); })
      .def_property_readonly("delta_imag", [](const LandscapeProfile& l) { return copy(l.delta_imag()); })
      .def_property_readonly("seed", &LandscapeProfile::seed)
      .def("splitting", [](const LandscapeProfile& l, double x) { return valley_splitting_at(l, x); },
           "E_V at x, meV")
      .def("__len__", &LandscapeProfile::size);

  m.def(
      "generate_landscape",
      [](const std::string& model, std::uint64_t seed) {
        LandscapeModelSpec spec;
        spec.model = valley_model_from_string(model);
        return generate(spec, seed);
      },
      py::arg("model") = "ge-diffusion", py::arg("seed") = 1);
  m.def("load_landscape", &load_landscape);

  py::class_<Device>(m, "Device")
      .def(py::init([](const LandscapeProfile& l, double origin) { return make_device(l, origin); }),
           py::arg("landscape"), py::arg("origin") = 0.0)
      .def_readonly("origin", &Device::origin)
      .def_property_readonly("landscape", [](const Device& d) { return *d.landscape; });

  py::class_<TrajectorySpec>(m, "TrajectorySpec")
      .def(py::init([](double x0, double omega, double Tg, double phi, double t_r) {
             return TrajectorySpec{x0, omega, phi, Tg, t_r};
           }),
           py::arg("x0") = 10.0, py::arg("omega") = 0.56, py::arg("Tg") = 18.0, py::arg("phi") = 0.0,
           py::arg("t_r") = 1.0)
      .def_readwrite("x0", &TrajectorySpec::x0)
      .def_readwrite("omega", &TrajectorySpec::omega)
      .def_readwrite("phi", &TrajectorySpec::phi)
      .def_readwrite("Tg", &TrajectorySpec::Tg)
      .def_readwrite("t_r", &TrajectorySpec::t_r)
      .def("position", &TrajectorySpec::position);

  py::class_<ControlVector>(m, "ControlVector")
      .def(py::init<>())
      .def_readwrite("knots", &ControlVector::knots)
      .def_readwrite("Tg", &ControlVector::Tg)
      .def_readwrite("knot_rate", &ControlVector::knot_rate)
      .def("validate", &ControlVector::validate, py::arg("bound") = kDefaultControlBound);
  m.def("zero_controls", &zero_controls, py::arg("Tg"), py::arg("knot_rate") = kDefaultKnotRate);
  m.def("sinusoid_controls", &sinusoid_controls, py::arg("spec"), py::arg("knot_rate") = kDefaultKnotRate);
  m.def("save_pulse", &save_pulse);
  m.def("load_pulse", &load_pulse);

  py::class_<FidelityReport>(m, "FidelityReport")
      .def_readonly("F_ent", &FidelityReport::F_ent)
      .def_readonly("F_avg", &FidelityReport::F_avg)
      .def_readonly("infidelity", &FidelityReport::infidelity)
      .def_readonly("valley_excitation_max", &FidelityReport::valley_excitation_max);

  m.def("evaluate_sinusoid",
        [](const TrajectorySpec& s, const Device& d, const SimParams& p) { return evaluate_sinusoid(s, d, p); });
  m.def("evaluate_trajectory",
        [](const ControlVector& c, const Device& d, const SimParams& p) { return evaluate_trajectory(c, d, p); });
  m.def(
      "infidelity_and_gradient",
      [](const ControlVector& c, const Device& d, const SimParams& p) {
        const ObjectiveValue v = infidelity_and_gradient(c, d, p);
        return py::make_tuple(v.infidelity, v.gradient);
      },
      "(infidelity, d infidelity / d knot)");

  py::class_<OptimizationConfig>(m, "OptimizationConfig")
      .def(py::init<>())
      .def_readwrite("max_iterations", &OptimizationConfig::max_iterations)
      .def_readwrite("control_bound", &OptimizationConfig::control_bound)
      .def_readwrite("convergence_tol", &OptimizationConfig::convergence_tol)
      .def_readwrite("target_infidelity", &OptimizationConfig::target_infidelity)
      .def_readwrite("boundary_pinning", &OptimizationConfig::boundary_pinning);

  py::class_<OptimizationTrace>(m, "OptimizationTrace")
      .def_readonly("best", &OptimizationTrace::best)
      .def_readonly("best_infidelity", &OptimizationTrace::best_infidelity)
      .def_readonly("initial_infidelity", &OptimizationTrace::initial_infidelity)
      .def_readonly("evaluations", &OptimizationTrace::evaluations)
      .def_readonly("termination", &OptimizationTrace::termination)
      .def_property_readonly("history", [](const OptimizationTrace& t) {
        std::vector<double> h;
        for (const IterationRecord& r : t.history) h.push_back(r.infidelity);
        return h;
      });
  m.def("optimize_trajectory",
        [](const ControlVector& c, const Device& d, const SimParams& p, const OptimizationConfig& cfg) {
          py::gil_scoped_release release;
          return optimize_trajectory(c, d, p, cfg);
        },
        py::arg("initial"), py::arg("device"), py::arg("params"), py::arg("config") = OptimizationConfig{});

  m.def(
      "run_config",
      [](const std::filesystem::path& path, const std::string& overrides, std::optional<unsigned> workers,
         bool write) {
        ExperimentConfig cfg = load_config(path, nlohmann::json::parse(overrides));
        if (workers) cfg.workers = *workers;
        ExperimentOutput out;
        {
          py::gil_scoped_release release;
          out = run_experiment(cfg);
          if (write) write_output(out, cfg);
        }
        return output_dict(out);
      },
      py::arg("path"), py::arg("overrides") = "{}", py::arg("workers") = py::none(), py::arg("write") = false);
}
