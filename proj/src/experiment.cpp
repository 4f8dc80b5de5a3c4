#include "oscf/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

namespace oscf {

using nlohmann::json;

namespace {

json interval_json(const Interval& i) { return json::array({i.lo, i.hi}); }

Interval interval_from(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(path + ": expected [lo, hi]");
  }
  const Interval i = Interval::closed(j[0].get<double>(), j[1].get<double>());
  if (i.empty()) throw ConfigError(path + ": empty interval");
  return i;
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& path) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path + "." + key + ": " + e.what());
  }
}

const json& section(const json& j, const char* key, const std::string& path) {
  static const json empty = json::object();
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_object()) throw ConfigError(path + "." + key + ": expected an object");
  return j.at(key);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t param_index(const ParametricModel& m, const std::string& name) {
  for (std::size_t i = 0; i < m.param_names.size(); ++i) {
    if (m.param_names[i] == name) return i;
  }
  throw ConfigError("varied: unknown parameter " + name + " for plant " + m.name);
}

std::size_t state_index(const ParametricModel& m, const std::string& name) {
  for (std::size_t i = 0; i < m.state_names.size(); ++i) {
    if (m.state_names[i] == name) return i;
  }
  throw ConfigError("property.monitored: unknown state " + name);
}

}  // namespace

json ExperimentConfig::to_json() const {
  json j;
  j["plant"] = plant;
  j["initial_state"] = initial_state;
  j["varied"] = json::array();
  for (const VariedParameter& v : varied) {
    j["varied"].push_back({{"name", v.name}, {"box", interval_json(v.box)}, {"input", interval_json(v.input)}});
  }
  j["property"] = {{"T_i", T_i},
                   {"delta", delta},
                   {"epsilon", epsilon},
                   {"monitored", monitored},
                   {"steady_patience", steady_patience},
                   {"confirm_cycles", confirm_cycles},
                   {"form", form}};
  json tgt = json::object();
  for (const auto& [k, v] : target) tgt[k] = v;
  j["abstraction"] = {
      {"lambda", lambda}, {"default_target", default_target}, {"target", tgt}, {"budget", abstraction_budget}};
  json dist = json::object();
  for (const auto& [k, v] : distance) dist[k] = v;
  json bnd = json::object();
  for (const auto& [k, v] : bounds) bnd[k] = interval_json(v);
  j["explorer"] = {{"points", points},
                   {"h", h},
                   {"seed", seed},
                   {"input_mode", input_mode},
                   {"n_inputs", n_inputs},
                   {"grid_resolution", grid_resolution},
                   {"distance", dist},
                   {"penalty", penalty},
                   {"walk_steps", walk_steps},
                   {"bounds", bnd}};
  j["output"] = {{"dir", out_dir}, {"log_goals", log_goals}};
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected an object");
  static const std::vector<std::string> known = {"plant",    "initial_state", "varied", "property",
                                                 "abstraction", "explorer",   "output"};
  for (const auto& [k, v] : j.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError("config." + k + ": unknown field");
  }
  ExperimentConfig c;
  read(j, "plant", c.plant, "config");
  read(j, "initial_state", c.initial_state, "config");
  if (j.contains("varied")) {
    if (!j["varied"].is_array()) throw ConfigError("config.varied: expected an array");
    for (std::size_t i = 0; i < j["varied"].size(); ++i) {
      const json& v = j["varied"][i];
      const std::string path = "config.varied[" + std::to_string(i) + "]";
      VariedParameter p;
      read(v, "name", p.name, path);
      if (!v.contains("box") || !v.contains("input")) throw ConfigError(path + ": box and input are required");
      p.box = interval_from(v["box"], path + ".box");
      p.input = interval_from(v["input"], path + ".input");
      c.varied.push_back(p);
    }
  }
  const json& pr = section(j, "property", "config");
  read(pr, "T_i", c.T_i, "config.property");
  read(pr, "delta", c.delta, "config.property");
  read(pr, "epsilon", c.epsilon, "config.property");
  read(pr, "monitored", c.monitored, "config.property");
  read(pr, "steady_patience", c.steady_patience, "config.property");
  read(pr, "confirm_cycles", c.confirm_cycles, "config.property");
  read(pr, "form", c.form, "config.property");
  const json& ab = section(j, "abstraction", "config");
  read(ab, "lambda", c.lambda, "config.abstraction");
  read(ab, "default_target", c.default_target, "config.abstraction");
  read(ab, "target", c.target, "config.abstraction");
  read(ab, "budget", c.abstraction_budget, "config.abstraction");
  const json& ex = section(j, "explorer", "config");
  read(ex, "points", c.points, "config.explorer");
  read(ex, "h", c.h, "config.explorer");
  read(ex, "seed", c.seed, "config.explorer");
  read(ex, "input_mode", c.input_mode, "config.explorer");
  read(ex, "n_inputs", c.n_inputs, "config.explorer");
  read(ex, "grid_resolution", c.grid_resolution, "config.explorer");
  read(ex, "distance", c.distance, "config.explorer");
  read(ex, "penalty", c.penalty, "config.explorer");
  read(ex, "walk_steps", c.walk_steps, "config.explorer");
  if (ex.contains("bounds")) {
    if (!ex["bounds"].is_object()) throw ConfigError("config.explorer.bounds: expected an object");
    for (const auto& [k, v] : ex["bounds"].items()) c.bounds[k] = interval_from(v, "config.explorer.bounds." + k);
  }
  const json& out = section(j, "output", "config");
  read(out, "dir", c.out_dir, "config.output");
  read(out, "log_goals", c.log_goals, "config.output");

  if (c.form != "z" && c.form != "xp") throw ConfigError("config.property.form: expected \"z\" or \"xp\"");
  if (c.lambda != "oscillation" && c.lambda != "trivial") {
    throw ConfigError("config.abstraction.lambda: expected \"oscillation\" or \"trivial\"");
  }
  if (c.input_mode != "uniform" && c.input_mode != "grid") {
    throw ConfigError("config.explorer.input_mode: expected \"uniform\" or \"grid\"");
  }
  return c;
}

std::vector<std::string> preset_names() { return {"exp1", "exp2", "exp3"}; }

ExperimentConfig preset(const std::string& name) {
  double amp = 0.0;
  if (name == "exp1") {
    amp = 0.01;
  } else if (name == "exp2") {
    amp = 0.1;
  } else if (name == "exp3") {
    amp = 1.0;
  } else {
    throw ConfigError("unknown preset " + name);
  }
  ExperimentConfig c;
  c.plant = "laub_loomis";
  c.varied = {{"k1", Interval::closed(1.8, 2.2), Interval::closed(-amp, amp)}};
  c.T_i = 7.3781;
  c.delta = 0.05;
  c.epsilon = 0.2;
  c.monitored = {"x1"};
  c.target = {{"s_OSC[1010]", 0.25}, {"s_OSC[0101]", 0.25}};
  c.default_target = 0.1;
  c.points = 30000;
  c.h = 0.05;
  c.seed = 0;
  c.distance = {{"x1", 2.0}, {"z1", 1.0}, {"k1", 1.0}, {"c", 1.0}};
  c.out_dir = "out/" + name;
  return c;
}

ExperimentConfig load_config(const std::string& preset_or_path) {
  for (const std::string& p : preset_names()) {
    if (p == preset_or_path) return preset(p);
  }
  std::ifstream in(preset_or_path);
  if (!in) throw ConfigError("cannot open config " + preset_or_path + " (and it is not a preset)");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(preset_or_path + ": " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

PredicateMap oscillation_predicates(const PropertyLayout& L) {
  PredicateMap m;
  m.per_location.assign(4, {});
  const std::size_t z = L.z_index(L.spec.monitored.front());
  const double eps = L.spec.epsilon;
  std::vector<Predicate>& osc = m.per_location[L.q_osc];
  if (L.z_form) {
    // z >= eps, eps > z, z > -eps, -eps >= z
    osc.push_back(Predicate::affine({{z, 1.0}}, -eps, Relation::Ge));
    osc.push_back(Predicate::affine({{z, -1.0}}, eps, Relation::Gt));
    osc.push_back(Predicate::affine({{z, 1.0}}, eps, Relation::Gt));
    osc.push_back(Predicate::affine({{z, -1.0}}, -eps, Relation::Ge));
  } else {
    const std::size_t x = L.spec.monitored.front();
    osc.push_back(Predicate::affine({{x, 1.0}, {z, -1.0}}, -eps, Relation::Ge));
    osc.push_back(Predicate::affine({{x, -1.0}, {z, 1.0}}, eps, Relation::Gt));
    osc.push_back(Predicate::affine({{x, 1.0}, {z, -1.0}}, eps, Relation::Gt));
    osc.push_back(Predicate::affine({{x, -1.0}, {z, 1.0}}, -eps, Relation::Ge));
  }
  return m;
}

Experiment build_experiment(const ExperimentConfig& cfg) {
  Experiment e;
  e.config = cfg;
  ParametricModel model = plant_by_name(cfg.plant);
  if (!cfg.initial_state.empty()) {
    if (cfg.initial_state.size() != model.n) throw ConfigError("config.initial_state: wrong length");
    model.default_state = cfg.initial_state;
  }
  std::vector<std::size_t> varied;
  Box pbox, ubox;
  for (const VariedParameter& v : cfg.varied) {
    varied.push_back(param_index(model, v.name));
    pbox.push_back(v.box);
    ubox.push_back(v.input);
  }
  e.plant = augment_with_parameters(model, varied, pbox, ubox);

  OscillationSpec spec;
  spec.T_i = cfg.T_i;
  spec.delta = cfg.delta;
  spec.epsilon = cfg.epsilon;
  spec.monitored.clear();
  for (const std::string& m : cfg.monitored) spec.monitored.push_back(state_index(model, m));
  spec.plant_dim = model.n;
  spec.param_dim = varied.size();
  spec.steady_patience = cfg.steady_patience;
  spec.confirm_cycles = cfg.confirm_cycles;
  if (spec.delta < cfg.h) throw ConfigError("config.property.delta: must be at least the step h");
  e.property = cfg.form == "z" ? build_oscillation_automaton_z(spec, e.plant)
                               : build_oscillation_automaton(spec, e.plant);
  const HybridAutomaton& a = e.property.automaton;
  const PropertyLayout& L = e.property.layout;

  // Default sampling box, then overrides by coordinate name.
  Box bounds(a.dim);
  for (std::size_t i = 0; i < e.plant.dim; ++i) bounds[i] = e.plant.bounding_box[i];
  const double horizon = 1.1 * std::max(spec.T_i, spec.patience());
  bounds[L.c] = Interval::closed(0.0, horizon);
  bounds[L.p] = Interval::closed(0.0, horizon);
  for (std::size_t i = 0; i < L.n; ++i) {
    const double span = bounds[i].hi - bounds[i].lo;
    bounds[L.w + i] = L.z_form ? Interval::closed(-span, span) : bounds[i];
  }
  bounds[L.s] = Interval::closed(-1.0, 1.0);
  bounds[L.d] = Interval::closed(0.0, 1.0);
  for (const auto& [name, iv] : cfg.bounds) {
    try {
      bounds[a.coordinate_index(name)] = iv;
    } catch (const ConfigError&) {
      throw ConfigError("config.explorer.bounds." + name + ": unknown coordinate");
    }
  }

  e.lambda = cfg.lambda == "oscillation" ? oscillation_predicates(L) : PredicateMap::trivial(a);
  AbstractionOptions ao;
  ao.bounds = bounds;
  ao.budget = cfg.abstraction_budget;
  ao.seed = cfg.seed;
  e.raw = build_abstraction(a, e.lambda, ao);
  e.system = eliminate_self_loops(e.raw);
  std::vector<double> w(e.system.states.size(), cfg.default_target);
  for (const auto& [name, v] : cfg.target) {
    std::size_t idx = 0;
    try {
      idx = e.system.index_of(name);
    } catch (const ConfigError&) {
      throw ConfigError("config.abstraction.target." + name + ": unknown abstract state");
    }
    w[idx] = v;
  }
  // Copies inherit the weight of their original unless named explicitly.
  for (std::size_t i = 0; i < e.system.states.size(); ++i) {
    const AbstractState& s = e.system.states[i];
    if (s.duplicate_of && !cfg.target.count(s.name)) w[i] = w[*s.duplicate_of];
  }
  e.pi = target_distribution(e.system, w);
  e.matrix = mh_matrix(e.system, e.pi);

  ExplorerConfig& x = e.explorer;
  x.points = cfg.points;
  x.h = cfg.h;
  x.seed = cfg.seed;
  x.input_mode = cfg.input_mode == "grid" ? ExplorerConfig::InputMode::Grid : ExplorerConfig::InputMode::Uniform;
  x.n_inputs = cfg.n_inputs;
  x.grid_resolution = cfg.grid_resolution;
  if (cfg.distance.empty()) {
    for (std::size_t m : spec.monitored) {
      x.distance.push_back({m, 1.0});
      x.distance.push_back({L.z_index(m), 1.0});
    }
    for (std::size_t j = 0; j < L.mv; ++j) x.distance.push_back({L.n + j, 1.0});
    x.distance.push_back({L.c, 1.0});
  } else {
    for (const auto& [name, wgt] : cfg.distance) {
      try {
        x.distance.push_back({a.coordinate_index(name), wgt});
      } catch (const ConfigError&) {
        throw ConfigError("config.explorer.distance." + name + ": unknown coordinate");
      }
    }
    std::sort(x.distance.begin(), x.distance.end(),
              [](const DistanceTerm& p, const DistanceTerm& q) { return p.index < q.index; });
  }
  x.penalty = cfg.penalty;
  x.walk_steps = cfg.walk_steps;
  x.bounds = bounds;
  x.log_goals = cfg.log_goals;
  x.validate(a.dim);
  return e;
}

std::string trace_csv_header(const Experiment& exp) {
  const PropertyLayout& L = exp.property.layout;
  const HybridAutomaton& a = exp.property.automaton;
  std::string h = "seq,t,location,event";
  for (std::size_t i = 0; i < L.n; ++i) h += "," + a.coordinate_names[i];
  for (std::size_t m : L.spec.monitored) h += ",z" + a.coordinate_names[m].substr(1);
  for (std::size_t j = 0; j < L.mv; ++j) h += "," + a.coordinate_names[L.n + j];
  h += ",c,p";
  for (std::size_t j = 0; j < L.mv; ++j) h += ",u" + std::to_string(j + 1);
  return h + "\n";
}

std::string trace_to_csv(const Experiment& exp, const Trace& trace) {
  const PropertyLayout& L = exp.property.layout;
  const HybridAutomaton& a = exp.property.automaton;
  std::string out = trace_csv_header(exp);
  for (std::size_t r = 0; r < trace.size(); ++r) {
    const TraceEntry& e = trace[r];
    const Vec& x = e.state.x;
    std::string ev = "start";
    if (e.event.kind == TraceEvent::Kind::Flow) ev = "flow";
    if (e.event.kind == TraceEvent::Kind::Jump) ev = "jump:" + a.transitions[e.event.transition].name;
    out += std::to_string(r) + "," + fmt(e.state.t) + "," + a.locations[e.state.location].name + "," + ev;
    for (std::size_t i = 0; i < L.n; ++i) out += "," + fmt(x[i]);
    for (std::size_t m : L.spec.monitored) out += "," + fmt(L.z(x, m));
    for (std::size_t j = 0; j < L.mv; ++j) out += "," + fmt(x[L.n + j]);
    out += "," + fmt(x[L.c]) + "," + fmt(x[L.p]);
    for (std::size_t j = 0; j < L.mv; ++j) {
      const bool flow = e.event.kind == TraceEvent::Kind::Flow && j < e.event.u.size();
      out += "," + (flow ? fmt(e.event.u[j]) : std::string());
    }
    out += "\n";
  }
  return out;
}

json report_to_json(const Experiment& exp, const FalsificationReport& rep) {
  const HybridAutomaton& a = exp.property.automaton;
  json j;
  const Verdict& v = rep.verdict;
  j["verdict"] = {{"kind", verdict_name(v.kind)},
                  {"period", v.period},
                  {"osc_cycles", v.osc_cycles},
                  {"std_cycles", v.std_cycles},
                  {"max_abs_z_at_check", v.max_abs_z},
                  {"max_abs_z_learned", v.max_abs_z_learned}};
  if (v.kind == Verdict::Kind::Falsified) {
    j["verdict"]["witness_time"] = v.witness_time;
    j["verdict"]["exit_value"] = v.exit_value;
    j["verdict"]["exit_row"] = v.exit_entry;
  }
  json inputs = json::array(), jumps = json::array();
  std::int64_t step = 0;
  for (const Action& act : rep.witness) {
    if (act.kind == Action::Kind::Input) {
      inputs.push_back(act.u);
      ++step;
    } else if (act.kind == Action::Kind::Jump) {
      jumps.push_back({{"after_step", step}, {"transition", a.transitions[act.transition].name}});
    }
  }
  j["witness"] = {{"h", exp.explorer.h}, {"inputs", inputs}, {"jumps", jumps}};
  j["tree_size"] = rep.tree_size;
  j["iterations"] = rep.iterations;
  j["exhausted"] = rep.exhausted;
  json cov = json::object(), goals = json::object();
  for (std::size_t i = 0; i < exp.system.states.size(); ++i) {
    cov[exp.system.states[i].name] = rep.coverage.counts[i];
    goals[exp.system.states[i].name] = rep.goal_counts[i];
  }
  j["coverage"] = {{"counts", cov}, {"fraction", rep.coverage.fraction}};
  j["goals"] = {{"counts", goals}, {"fallbacks", rep.goal_fallbacks}};
  j["seed"] = rep.seed;
  j["config"] = exp.config.to_json();
  return j;
}

RunResult run_experiment(const Experiment& exp) {
  RunResult r;
  r.report = falsify(exp.property, exp.system, exp.matrix, exp.lambda, exp.explorer);
  r.report_json = report_to_json(exp, r.report);
  r.trace_csv = trace_to_csv(exp, r.report.witness_trace);
  return r;
}

RunResult run_experiment(const ExperimentConfig& cfg) { return run_experiment(build_experiment(cfg)); }

void write_run(const std::string& dir, const RunResult& r) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string seed = std::to_string(r.report.seed);
  {
    std::ofstream f(fs::path(dir) / ("trace_" + seed + ".csv"), std::ios::binary);
    f << r.trace_csv;
  }
  {
    std::ofstream f(fs::path(dir) / ("report_" + seed + ".json"), std::ios::binary);
    f << r.report_json.dump(2) << "\n";
  }
  {
    std::ofstream f(fs::path(dir) / ("timing_" + seed + ".json"), std::ios::binary);
    f << json{{"seed", r.report.seed}, {"wall_seconds", r.report.wall_seconds}}.dump(2) << "\n";
  }
  if (!r.report.goal_log.empty()) {
    std::ofstream f(fs::path(dir) / ("goals_" + seed + ".csv"), std::ios::binary);
    f << "iteration,state";
    for (std::size_t i = 0; i < r.report.goal_log.front().x.size(); ++i) f << ",g" << i;
    f << "\n";
    for (const GoalLogEntry& g : r.report.goal_log) {
      f << g.iteration << "," << g.state;
      for (double v : g.x) f << "," << fmt(v);
      f << "\n";
    }
  }
}

json BatchSummary::to_json() const {
  json runs_j = json::array();
  for (const BatchEntry& e : runs) {
    json r = {{"seed", e.seed}, {"ok", e.ok}};
    if (e.ok) {
      r["verdict"] = e.verdict;
      r["exit_value"] = e.exit_value;
      r["max_abs_z_at_check"] = e.max_abs_z;
      r["max_abs_z_learned"] = e.max_abs_z_learned;
      r["seconds"] = e.seconds;
    } else {
      r["error"] = e.error;
    }
    runs_j.push_back(r);
  }
  return {{"runs", runs_j},
          {"falsified", falsified},
          {"falsification_rate", falsification_rate},
          {"seconds", {{"p50", p50_seconds}, {"p90", p90_seconds}, {"max", max_seconds}}}};
}

BatchSummary batch(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds, unsigned threads) {
  if (seeds.empty()) throw ConfigError("batch: at least one seed is required");
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  BatchSummary s;
  s.runs.resize(seeds.size());
  auto one = [&cfg](std::uint64_t seed) {
    BatchEntry e;
    e.seed = seed;
    try {
      ExperimentConfig c = cfg;
      c.seed = seed;
      e.result = run_experiment(c);
      e.ok = true;
      e.verdict = verdict_name(e.result.report.verdict.kind);
      e.exit_value = e.result.report.verdict.exit_value;
      e.max_abs_z = e.result.report.verdict.max_abs_z;
      e.max_abs_z_learned = e.result.report.verdict.max_abs_z_learned;
      e.seconds = e.result.report.wall_seconds;
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
    return e;
  };
  for (std::size_t start = 0; start < seeds.size(); start += threads) {
    std::vector<std::future<BatchEntry>> fs;
    const std::size_t end = std::min(seeds.size(), start + threads);
    for (std::size_t i = start; i < end; ++i) fs.push_back(std::async(std::launch::async, one, seeds[i]));
    for (std::size_t i = start; i < end; ++i) s.runs[i] = fs[i - start].get();
  }
  std::vector<double> secs;
  std::size_t ok = 0;
  for (const BatchEntry& e : s.runs) {
    if (!e.ok) continue;
    ++ok;
    if (e.verdict == "Falsified") ++s.falsified;
    secs.push_back(e.seconds);
  }
  s.falsification_rate = ok ? static_cast<double>(s.falsified) / static_cast<double>(ok) : 0.0;
  if (!secs.empty()) {
    std::sort(secs.begin(), secs.end());
    auto pct = [&secs](double q) {
      const std::size_t i = static_cast<std::size_t>(std::ceil(q * static_cast<double>(secs.size()))) - 1;
      return secs[std::min(i, secs.size() - 1)];
    };
    s.p50_seconds = pct(0.5);
    s.p90_seconds = pct(0.9);
    s.max_seconds = secs.back();
  }
  return s;
}

std::string emit_matrix(const ExperimentConfig& cfg) {
  const Experiment e = build_experiment(cfg);
  return matrix_csv(e.system, e.matrix);
}

}  // namespace oscf
