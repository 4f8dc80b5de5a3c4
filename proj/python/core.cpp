// Python bindings: _core module of the oscfalsify package.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "oscf/experiment.hpp"

namespace py = pybind11;
using namespace oscf;

namespace {

ExperimentConfig config_from(const std::string& preset_or_json) {
  if (!preset_or_json.empty() && preset_or_json.front() == '{') {
    return ExperimentConfig::from_json(nlohmann::json::parse(preset_or_json));
  }
  return load_config(preset_or_json);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Oscillation-property falsification core";

  // Translators run newest first, so the subclass goes last.
  py::register_exception<Error>(m, "OscfError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("preset_names", &preset_names);
  m.def(
      "preset", [](const std::string& name) { return preset(name).to_json().dump(); }, py::arg("name"),
      "Preset configuration as a JSON string.");
  m.def(
      "run_experiment",
      [](const std::string& config, std::int64_t seed, std::int64_t points) {
        ExperimentConfig c = config_from(config);
        if (seed >= 0) c.seed = static_cast<std::uint64_t>(seed);
        if (points > 0) c.points = static_cast<std::size_t>(points);
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(c);
        }
        return py::make_tuple(r.report_json.dump(), r.trace_csv, r.report.wall_seconds);
      },
      py::arg("config"), py::arg("seed") = -1, py::arg("points") = -1,
      "Runs one exploration; returns (report JSON, trace CSV, seconds).");
  m.def(
      "emit_matrix", [](const std::string& config) { return emit_matrix(config_from(config)); }, py::arg("config"));
  m.def(
      "edge_list", [](const std::string& config) { return build_experiment(config_from(config)).system.edge_list(); },
      py::arg("config"));
  m.def(
      "laub_loomis_dynamics", [](const std::vector<double>& x, const std::vector<double>& k) {
        return laub_loomis_dynamics(x, k);
      },
      py::arg("x"), py::arg("k"));
  m.def("nominal_parameters", &nominal_parameters);
  m.def(
      "mh_matrix",
      [](std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges, const std::vector<double>& pi) {
        AbstractTransitionSystem d;
        for (std::size_t i = 0; i < n; ++i) {
          AbstractState s;
          s.name = "s" + std::to_string(i);
          d.states.push_back(std::move(s));
        }
        for (auto [a, b] : edges) {
          if (a >= n || b >= n) throw ConfigError("edge endpoint out of range");
          d.edges.push_back({a, b, AbstractEdge::Kind::Discrete, std::nullopt});
        }
        return mh_matrix(d, target_distribution(d, pi));
      },
      py::arg("n"), py::arg("edges"), py::arg("pi"),
      "Metropolis-Hastings matrix of a loop-free directed graph; pi is normalized.");
}
