#include "oscf/property_library.hpp"

#include <algorithm>
#include <cmath>

namespace oscf {

void OscillationSpec::validate() const {
  if (!(T_i > 0.0)) throw ConfigError("T_i must be positive");
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (monitored.empty()) throw ConfigError("at least one monitored coordinate is required");
  for (std::size_t i : monitored) {
    if (i >= plant_dim) throw ConfigError("monitored coordinate " + std::to_string(i) + " outside the plant");
  }
  if (confirm_cycles < 1) throw ConfigError("confirm_cycles must be at least 1");
}

namespace {

PropertyAutomaton build(const OscillationSpec& spec, const PlantDefinition& plant, bool z_form) {
  spec.validate();
  if (spec.plant_dim != plant.model.n || spec.param_dim != plant.varied.size()) {
    throw DimensionError("oscillation spec dimensions do not match the plant");
  }
  PropertyLayout L;
  L.spec = spec;
  L.z_form = z_form;
  L.n = plant.model.n;
  L.mv = plant.varied.size();
  L.c = L.n + L.mv;
  L.p = L.c + 1;
  L.w = L.p + 1;
  L.s = L.w + L.n;
  L.d = L.s + 1;
  const std::size_t dim = L.d + 1;
  const std::size_t base = L.n + L.mv;
  const double eps = spec.epsilon;

  HybridAutomaton a;
  a.dim = dim;
  a.input_dim = L.mv;
  a.coordinate_names = plant.names;
  a.coordinate_names.push_back("c");
  a.coordinate_names.push_back("p");
  for (std::size_t i = 0; i < L.n; ++i) {
    a.coordinate_names.push_back((z_form ? "z" : "xp") + plant.model.state_names[i].substr(1));
  }
  a.coordinate_names.push_back("s");
  a.coordinate_names.push_back("d");

  const VectorField plant_f = plant.dynamics;
  const std::vector<std::size_t> mon = spec.monitored;
  auto field = [plant_f, L, base, z_form, mon, eps](bool learning) -> VectorField {
    return [plant_f, L, base, z_form, mon, eps, learning](std::span<const double> y, std::span<const double> u,
                                                          std::span<double> dy) {
      plant_f(y.subspan(0, base), u, dy.subspan(0, base));
      dy[L.c] = 1.0;
      dy[L.p] = 0.0;
      for (std::size_t i = 0; i < L.n; ++i) dy[L.w + i] = z_form ? dy[i] : 0.0;
      dy[L.s] = 0.0;
      double excess = 0.0;
      if (learning) {
        double m = 0.0;
        for (std::size_t i : mon) m = std::max(m, std::fabs(z_form ? y[L.w + i] : y[i] - y[L.w + i]));
        excess = std::max(0.0, m - eps);
      }
      dy[L.d] = excess;
    };
  };

  for (const char* name : {"q_INIT", "q_LRN", "q_STD", "q_OSC"}) {
    Location loc;
    loc.name = name;
    loc.dynamics = field(std::string(name) == "q_LRN");
    loc.invariant = plant.invariant;
    loc.input_box = plant.input_box;
    a.locations.push_back(std::move(loc));
  }

  // |z| <= eps and |z| > eps over the monitored coordinates.
  Predicate near, far;
  if (z_form) {
    std::vector<std::size_t> zi;
    for (std::size_t i : mon) zi.push_back(L.w + i);
    near = Predicate::max_abs(zi, -1.0, eps, Relation::Ge);
    far = Predicate::max_abs(zi, 1.0, -eps, Relation::Gt);
  } else {
    std::vector<std::size_t> deps;
    for (std::size_t i : mon) {
      deps.push_back(i);
      deps.push_back(L.w + i);
    }
    auto dev = [L, mon](std::span<const double> y) {
      double m = 0.0;
      for (std::size_t i : mon) m = std::max(m, std::fabs(y[i] - y[L.w + i]));
      return m;
    };
    near = Predicate::named("|x - x_p| <= eps", [dev, eps](std::span<const double> y) { return eps - dev(y); }, deps,
                            Relation::Ge);
    far = Predicate::named("|x - x_p| > eps", [dev, eps](std::span<const double> y) { return dev(y) - eps; }, deps,
                           Relation::Gt);
  }
  const std::size_t m0 = mon.front();
  std::vector<std::size_t> ret_deps = z_form ? std::vector<std::size_t>{L.s, L.w + m0}
                                             : std::vector<std::size_t>{L.s, m0, L.w + m0};
  const Predicate returned = Predicate::named(
      "s*z >= 0",
      [L, m0, z_form](std::span<const double> y) {
        return y[L.s] * (z_form ? y[L.w + m0] : y[m0] - y[L.w + m0]);
      },
      ret_deps, Relation::Ge, Edge::Rising);
  const Predicate period_due = Predicate::affine({{L.c, 1.0}, {L.p, -1.0}}, 0.0, Relation::Ge);
  const Predicate transient_over = Predicate::affine({{L.c, 1.0}}, -spec.T_i, Relation::Ge);
  const Predicate beyond_delta = Predicate::affine({{L.c, 1.0}}, -spec.delta, Relation::Gt);
  const Predicate patience_over = Predicate::affine({{L.c, 1.0}}, -spec.patience(), Relation::Ge);
  const Predicate left_ball = Predicate::affine({{L.d, 1.0}}, 0.0, Relation::Gt);
  const Predicate stayed = Predicate::affine({{L.d, -1.0}}, 0.0, Relation::Ge);

  std::vector<Assignment> store_point;
  for (std::size_t i = 0; i < L.n; ++i) {
    store_point.push_back({L.w + i, z_form ? Expression::constant(0.0) : Expression::copy(i)});
  }
  auto with_point = [&store_point](std::vector<Assignment> extra) {
    extra.insert(extra.end(), store_point.begin(), store_point.end());
    return ResetMap{std::move(extra)};
  };
  const Expression clock_zero = Expression::constant(0.0);

  std::vector<std::size_t> sign_deps;
  for (std::size_t i = 0; i < base; ++i) sign_deps.push_back(i);
  const Expression departure = Expression::function(
      "sign(f)",
      [plant_f, base, m0, mv = L.mv](std::span<const double> y) {
        thread_local Vec dy;
        dy.assign(base, 0.0);
        const Vec u0(mv, 0.0);
        plant_f(y.subspan(0, base), u0, dy);
        return dy[m0] >= 0.0 ? 1.0 : -1.0;
      },
      sign_deps);

  auto add = [&a](std::string name, std::size_t from, std::size_t to, std::vector<Predicate> guard, ResetMap reset) {
    Transition t;
    t.name = std::move(name);
    t.source = from;
    t.target = to;
    t.guard.all = std::move(guard);
    t.reset = std::move(reset);
    t.urgency = Urgency::Eager;
    a.transitions.push_back(std::move(t));
    return a.transitions.size() - 1;
  };

  L.init_lrn = add("INIT->LRN", L.q_init, L.q_lrn, {transient_over},
                   with_point({{L.c, clock_zero}, {L.s, departure}, {L.d, Expression::constant(0.0)}}));
  L.lrn_std = add("LRN->STD", L.q_lrn, L.q_std, {stayed, patience_over, near},
                  with_point({{L.p, Expression::constant(spec.delta)}, {L.c, clock_zero}}));
  L.lrn_osc = add("LRN->OSC", L.q_lrn, L.q_osc, {left_ball, returned, near, beyond_delta},
                  with_point({{L.p, Expression::copy(L.c)}, {L.c, clock_zero}}));
  L.osc_osc = add("OSC->OSC", L.q_osc, L.q_osc, {near, period_due}, with_point({{L.c, clock_zero}}));
  L.osc_init = add("OSC->INIT", L.q_osc, L.q_init, {far, period_due}, ResetMap{{{L.c, clock_zero}}});
  L.std_std = add("STD->STD", L.q_std, L.q_std, {near, period_due}, ResetMap{{{L.c, clock_zero}}});
  L.std_init = add("STD->INIT", L.q_std, L.q_init, {far, period_due}, ResetMap{{{L.c, clock_zero}}});

  a.initial_location = L.q_init;
  a.initial_x.assign(dim, 0.0);
  std::copy(plant.default_state.begin(), plant.default_state.end(), a.initial_x.begin());
  if (!z_form) {
    for (std::size_t i = 0; i < L.n; ++i) a.initial_x[L.w + i] = a.initial_x[i];
  }
  a.initial_x[L.s] = 1.0;
  a.clocks = {L.c};
  a.validate();
  return {std::move(a), L};
}

}  // namespace

PropertyAutomaton build_oscillation_automaton(const OscillationSpec& spec, const PlantDefinition& plant) {
  return build(spec, plant, false);
}

PropertyAutomaton build_oscillation_automaton_z(const OscillationSpec& spec, const PlantDefinition& plant) {
  return build(spec, plant, true);
}

OvershootAutomaton build_overshoot_automaton(const OvershootSpec& spec, const PlantDefinition& plant) {
  if (!(spec.delta > 0.0)) throw ConfigError("delta must be positive");
  if (spec.output >= plant.model.n) throw DimensionError("overshoot output outside the plant");
  if (spec.reference_output >= spec.reference_initial.size()) throw DimensionError("reference output out of range");
  if (!spec.reference) throw ConfigError("reference dynamics missing");
  OvershootLayout L;
  L.n = plant.model.n;
  L.mv = plant.varied.size();
  const std::size_t base = L.n + L.mv;
  const std::size_t r = spec.reference_initial.size();
  L.ref = base;
  L.c = base + r;
  L.omega = L.c + 1;

  HybridAutomaton a;
  a.dim = L.omega + 1;
  a.input_dim = L.mv;
  a.coordinate_names = plant.names;
  for (std::size_t i = 0; i < r; ++i) a.coordinate_names.push_back("ref" + std::to_string(i + 1));
  a.coordinate_names.push_back("c");
  a.coordinate_names.push_back("omega");

  const VectorField plant_f = plant.dynamics;
  const ParametricField ref_f = spec.reference;
  Location loc;
  loc.name = "q_OS";
  loc.dynamics = [plant_f, ref_f, L, base, r](std::span<const double> y, std::span<const double> u,
                                              std::span<double> dy) {
    plant_f(y.subspan(0, base), u, dy.subspan(0, base));
    ref_f(y.subspan(L.ref, r), {}, dy.subspan(L.ref, r));
    dy[L.c] = 1.0;
    dy[L.omega] = 0.0;
  };
  loc.invariant = plant.invariant;
  loc.input_box = plant.input_box;
  a.locations.push_back(std::move(loc));

  const std::size_t xo = spec.output;
  const std::size_t ro = L.ref + spec.reference_output;
  Transition t;
  t.name = "OS->OS";
  t.guard.all = {Predicate::affine({{L.c, 1.0}}, -spec.delta, Relation::Ge)};
  t.reset.assignments = {
      {L.c, Expression::constant(0.0)},
      {L.omega, Expression::function(
                    "peak",
                    [xo, ro, L](std::span<const double> y) {
                      const double gap = y[xo] - y[ro];
                      return (gap > 0.0 && y[L.omega] < gap) ? gap : y[L.omega];
                    },
                    {xo, ro, L.omega})}};
  a.transitions.push_back(std::move(t));

  a.initial_x.assign(a.dim, 0.0);
  std::copy(plant.default_state.begin(), plant.default_state.end(), a.initial_x.begin());
  std::copy(spec.reference_initial.begin(), spec.reference_initial.end(), a.initial_x.begin() + L.ref);
  a.clocks = {L.c};
  a.validate();
  return {std::move(a), L};
}

std::string verdict_name(Verdict::Kind k) {
  switch (k) {
    case Verdict::Kind::Oscillating:
      return "Oscillating";
    case Verdict::Kind::Steady:
      return "Steady";
    case Verdict::Kind::Falsified:
      return "Falsified";
    case Verdict::Kind::Inconclusive:
      return "Inconclusive";
  }
  return "?";
}

Verdict classify_trace(const Trace& trace, const PropertyLayout& L) {
  if (trace.empty()) throw ClassificationError("empty trace");
  const std::size_t dim = L.d + 1;
  const std::size_t m0 = L.spec.monitored.front();
  Verdict v;
  bool learned = false;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const TraceEntry& e = trace[i];
    if (e.state.location > 3 || e.state.x.size() != dim) {
      throw ClassificationError("trace entry " + std::to_string(i) + " is not a property-automaton state");
    }
    if (learned) v.max_abs_z_learned = std::max(v.max_abs_z_learned, std::fabs(L.z(e.state.x, m0)));
    if (e.event.kind != TraceEvent::Kind::Jump) continue;
    if (i == 0) throw ClassificationError("trace starts with a jump");
    const std::size_t id = e.event.transition;
    const Vec& pre = trace[i - 1].state.x;
    const bool check = id == L.osc_osc || id == L.osc_init || id == L.std_std || id == L.std_init;
    if (check && learned) v.max_abs_z = std::max(v.max_abs_z, std::fabs(L.z(pre, m0)));
    if (id == L.lrn_osc || id == L.lrn_std) {
      learned = true;
    } else if (id == L.osc_osc) {
      ++v.osc_cycles;
    } else if (id == L.std_std) {
      ++v.std_cycles;
    } else if ((id == L.osc_init || id == L.std_init) && learned) {
      v.kind = Verdict::Kind::Falsified;
      v.period = pre[L.p];
      v.witness_time = e.state.t;
      v.exit_value = L.z(pre, m0);
      v.exit_entry = i;
      return v;
    }
  }
  const Vec& last = trace.back().state.x;
  if (v.osc_cycles >= L.spec.confirm_cycles) {
    v.kind = Verdict::Kind::Oscillating;
    v.period = last[L.p];
  } else if (v.std_cycles >= L.spec.confirm_cycles) {
    v.kind = Verdict::Kind::Steady;
    v.period = last[L.p];
  }
  return v;
}

}  // namespace oscf
