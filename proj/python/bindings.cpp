#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "loadid/error.hpp"
#include "loadid/experiment.hpp"
#include "loadid/io.hpp"
#include "loadid/metrics.hpp"
#include "loadid/model.hpp"
#include "loadid/nets.hpp"
#include "loadid/parallel.hpp"
#include "loadid/pipeline.hpp"
#include "loadid/rkf.hpp"
#include "loadid/simulate.hpp"

namespace py = pybind11;
using namespace loadid;

namespace {

// DOF lists cross the boundary 1-based, as in configs and reports.
std::vector<std::size_t> to_one_based(const std::vector<std::size_t>& dofs) {
  std::vector<std::size_t> out;
  for (auto d : dofs) out.push_back(d + 1);
  return out;
}

py::dict sequence_dict(const Sequence& s) {
  py::dict d;
  d["time"] = s.measurements.time;
  d["measured_dofs"] = to_one_based(s.measurements.measured_dofs);
  d["clean_accel"] = s.measurements.clean_accel;
  d["noisy_accel"] = s.measurements.noisy_accel;
  d["pseudo_disp"] = s.measurements.pseudo_disp;
  d["pseudo_vel"] = s.measurements.pseudo_vel;
  d["forces"] = s.load.forces;
  d["nsr"] = s.measurements.nsr;
  return d;
}

}  // namespace

PYBIND11_MODULE(_loadid, m) {
  m.doc() = "Dynamic load identification: shear-building simulation, residual Kalman filter, sequence networks";
  m.attr("__version__") = pipeline::kVersion;

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result([&] { return py::exception<Error>(m, "LoadidError", PyExc_RuntimeError); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object& type = error_type.get_stored();
      py::object exc = type(e.what());
      exc.attr("kind") = to_string(e.kind());
      PyErr_SetObject(type.ptr(), exc.ptr());
    }
  });

  m.def(
      "shear_matrices",
      [](std::vector<double> masses, std::vector<double> stiffnesses, std::vector<double> dampings) {
        const auto s = build_shear_matrices({std::move(masses), std::move(stiffnesses), std::move(dampings)});
        return py::make_tuple(s.M, s.C, s.K);
      },
      py::arg("masses"), py::arg("stiffnesses"), py::arg("dampings"), "Returns (M, C, K) of a shear chain.");

  m.def(
      "six_story_matrices",
      [] {
        const auto s = build_shear_matrices(ShearBuildingSpec::six_story());
        return py::make_tuple(s.M, s.C, s.K);
      },
      "(M, C, K) of the reference six-story building.");

  m.def("preset", &preset_document, py::arg("name"), "Preset document text: 'desk' or 'paper'.");
  m.def("schema", &config_schema, "The experiment configuration JSON schema.");
  m.def(
      "resolve_config", [](const std::string& document) { return config_json(apply_config(document)); },
      py::arg("document"), "Validates a config document and returns its canonical JSON form.");

  m.def(
      "generate_sequence",
      [](const std::string& document, std::uint64_t seed, std::size_t index) {
        const auto cfg = apply_config(document);
        return sequence_dict(generate_sequence(cfg.scenario, seed, index));
      },
      py::arg("document") = "{}", py::arg("seed") = 0, py::arg("index") = 0,
      "Simulates one sequence of the configured scenario.");

  m.def(
      "filter_sequence",
      [](const std::string& document, std::uint64_t seed, std::size_t index) {
        const auto cfg = apply_config(document);
        const Sequence s = generate_sequence(cfg.scenario, seed, index);
        const EstimateTrace tr = run_rkf(s.measurements, cfg.filter_config(), cfg.scenario.building);
        py::dict d = sequence_dict(s);
        d["u_est"] = tr.u_est;
        d["theta"] = tr.theta;
        d["z"] = tr.z;
        return d;
      },
      py::arg("document") = "{}", py::arg("seed") = 0, py::arg("index") = 0,
      "Simulates one sequence and runs the filter on it.");

  m.def(
      "accumulated_error",
      [](const Eigen::VectorXd& pred, const Eigen::VectorXd& truth, double eps_rel) {
        const auto c = accumulated_error(pred, truth, eps_rel);
        return py::make_tuple(c.E, c.retained);
      },
      py::arg("pred"), py::arg("truth"), py::arg("eps_rel") = 1e-3,
      "Running sum of relative errors over retained samples; returns (E, retained).");

  m.def("mse", &mse, py::arg("pred"), py::arg("truth"));
  m.def("sha256_hex", &io::sha256_hex, py::arg("data"));

  m.def(
      "compare",
      [](const std::string& document, const std::string& out_dir) {
        ExperimentConfig cfg = apply_config(document);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        py::gil_scoped_release release;
        const auto cmp = pipeline::compare(cfg, default_threads());
        std::vector<std::pair<double, std::string>> out;
        for (const auto& [nsr, table] : cmp.levels) out.emplace_back(nsr, table.to_csv());
        return out;
      },
      py::arg("document"), py::arg("out_dir") = "",
      "Runs the full comparison; returns (nsr, summary CSV) per noise level.");

  m.def(
      "predict_load",
      [](const std::string& model_path, const Eigen::MatrixXd& accel) {
        nets::TrainedModel model = nets::load_model(model_path);
        // Python callers pass samples x channels; the engine is channels x samples.
        return Eigen::MatrixXd(nets::predict_load(model, accel.transpose()).transpose());
      },
      py::arg("model_path"), py::arg("accel"), "Loads a model file and predicts the load (samples x outputs).");
}
