#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "oscf/abstraction.hpp"
#include "oscf/guided_explorer.hpp"
#include "oscf/models.hpp"
#include "oscf/property_library.hpp"

namespace oscf {

struct VariedParameter {
  std::string name;  // e.g. "k1"
  Interval box;
  Interval input;
};

struct ExperimentConfig {
  std::string plant = "laub_loomis";
  std::vector<double> initial_state;  // empty: plant default
  std::vector<VariedParameter> varied;

  double T_i = 7.3781;
  double delta = 0.05;
  double epsilon = 0.2;
  std::vector<std::string> monitored{"x1"};
  double steady_patience = 0.0;
  int confirm_cycles = 1;
  std::string form = "z";  // "z" or "xp"

  std::string lambda = "oscillation";  // "oscillation" or "trivial"
  double default_target = 0.1;
  std::map<std::string, double> target;  // abstract state name -> weight
  std::size_t abstraction_budget = 10000;

  std::size_t points = 30000;
  double h = 0.05;
  std::uint64_t seed = 0;
  std::string input_mode = "uniform";
  std::size_t n_inputs = 5;
  std::size_t grid_resolution = 3;
  std::map<std::string, double> distance;  // coordinate name -> weight
  double penalty = -1.0;
  std::size_t walk_steps = 1;
  std::map<std::string, Interval> bounds;  // overrides of the default sampling box

  std::string out_dir = "out";
  bool log_goals = false;

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  bool operator==(const ExperimentConfig& o) const { return to_json() == o.to_json(); }
};

// Presets: exp1, exp2, exp3 (u1 envelopes 0.01, 0.1, 1.0).
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

// Preset name or path to a JSON file.
ExperimentConfig load_config(const std::string& preset_or_path);

struct Experiment {
  ExperimentConfig config;
  PlantDefinition plant;
  PropertyAutomaton property;
  PredicateMap lambda;
  AbstractTransitionSystem raw;  // before self-loop elimination
  AbstractTransitionSystem system;
  std::vector<double> pi;
  Matrix matrix;
  ExplorerConfig explorer;
};

Experiment build_experiment(const ExperimentConfig& cfg);

// The case-study lambda: four predicates on z of the first
// monitored coordinate in q_OSC, T elsewhere.
PredicateMap oscillation_predicates(const PropertyLayout& layout);

struct RunResult {
  FalsificationReport report;
  nlohmann::json report_json;  // deterministic; no timing
  std::string trace_csv;
};

RunResult run_experiment(const ExperimentConfig& cfg);
RunResult run_experiment(const Experiment& exp);

nlohmann::json report_to_json(const Experiment& exp, const FalsificationReport& rep);
std::string trace_to_csv(const Experiment& exp, const Trace& trace);
std::string trace_csv_header(const Experiment& exp);

// Writes trace_<seed>.csv, report_<seed>.json and timing_<seed>.json.
void write_run(const std::string& dir, const RunResult& r);

struct BatchEntry {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::string verdict;
  double exit_value = 0.0;
  double max_abs_z = 0.0;
  double max_abs_z_learned = 0.0;
  double seconds = 0.0;
  RunResult result;
};

struct BatchSummary {
  std::vector<BatchEntry> runs;
  std::size_t falsified = 0;
  double falsification_rate = 0.0;
  double p50_seconds = 0.0, p90_seconds = 0.0, max_seconds = 0.0;

  nlohmann::json to_json() const;
};

BatchSummary batch(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds, unsigned threads = 0);

std::string emit_matrix(const ExperimentConfig& cfg);

}  // namespace oscf
