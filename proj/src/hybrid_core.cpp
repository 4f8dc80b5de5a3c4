#include "oscf/hybrid_core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace oscf {

namespace {

std::string coord_name(std::size_t i, const std::vector<std::string>& names) {
  if (i < names.size()) return names[i];
  return "x[" + std::to_string(i) + "]";
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double d) { return std::isfinite(d); });
}

}  // namespace

Predicate Predicate::always() { return affine({}, 0.0, Relation::Ge); }

Predicate Predicate::affine(std::vector<AffineTerm> terms, double offset, Relation rel) {
  Predicate p;
  p.form = Form::Affine;
  p.terms = std::move(terms);
  p.offset = offset;
  p.relation = rel;
  return p;
}

Predicate Predicate::max_abs(std::vector<std::size_t> indices, double scale, double offset, Relation rel) {
  Predicate p;
  p.form = Form::MaxAbs;
  for (std::size_t i : indices) p.terms.push_back({i, scale});
  p.offset = offset;
  p.relation = rel;
  return p;
}

Predicate Predicate::named(std::string name, ScalarFn fn, std::vector<std::size_t> deps, Relation rel, Edge edge) {
  Predicate p;
  p.form = Form::Named;
  p.name = std::move(name);
  p.fn = std::move(fn);
  p.deps = std::move(deps);
  p.relation = rel;
  p.edge = edge;
  return p;
}

double Predicate::g(std::span<const double> x) const {
  switch (form) {
    case Form::Affine: {
      double s = offset;
      for (const AffineTerm& t : terms) s += t.coeff * x[t.index];
      return s;
    }
    case Form::MaxAbs: {
      double m = 0.0;
      for (const AffineTerm& t : terms) m = std::max(m, std::fabs(x[t.index]));
      const double scale = terms.empty() ? 0.0 : terms.front().coeff;
      return scale * m + offset;
    }
    case Form::Named:
      return fn(x);
  }
  return 0.0;
}

bool Predicate::holds_at(std::span<const double> x) const {
  const double v = g(x);
  return relation == Relation::Ge ? v >= 0.0 : v > 0.0;
}

bool Predicate::holds(std::span<const double> x, std::span<const double> prev) const {
  if (edge == Edge::Level) return holds_at(x);
  if (prev.empty()) return false;
  return holds_at(x) && !holds_at(prev);
}

std::vector<std::size_t> Predicate::coordinates() const {
  std::vector<std::size_t> out;
  if (form == Form::Named) {
    out = deps;
  } else {
    for (const AffineTerm& t : terms) out.push_back(t.index);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::optional<std::pair<std::size_t, IntervalSet>> Predicate::satisfying_set() const {
  if (form == Form::Named || edge != Edge::Level) return std::nullopt;
  const std::vector<std::size_t> coords = coordinates();
  if (coords.size() != 1) return std::nullopt;
  const std::size_t i = coords.front();
  const bool strict = relation == Relation::Gt;
  if (form == Form::Affine) {
    double a = 0.0;
    for (const AffineTerm& t : terms) a += t.coeff;
    if (a == 0.0) {
      const bool ok = strict ? offset > 0.0 : offset >= 0.0;
      return std::make_pair(i, ok ? IntervalSet::all() : IntervalSet::none());
    }
    // a*v + b ~ 0
    const double root = -offset / a;
    if (a > 0.0) return std::make_pair(i, IntervalSet(Interval{root, kInf, !strict, false}));
    return std::make_pair(i, IntervalSet(Interval{-kInf, root, false, !strict}));
  }
  // scale*|v| + b ~ 0
  const double scale = terms.front().coeff;
  if (scale == 0.0) {
    const bool ok = strict ? offset > 0.0 : offset >= 0.0;
    return std::make_pair(i, ok ? IntervalSet::all() : IntervalSet::none());
  }
  const double r = -offset / scale;
  if (scale > 0.0) {
    // |v| >= r (or > r)
    if (r < 0.0 || (r == 0.0 && !strict)) return std::make_pair(i, IntervalSet::all());
    return std::make_pair(i, IntervalSet(std::vector<Interval>{Interval{-kInf, -r, false, !strict},
                                                               Interval{r, kInf, !strict, false}}));
  }
  // |v| <= r (or < r)
  if (r < 0.0 || (r == 0.0 && strict)) return std::make_pair(i, IntervalSet::none());
  return std::make_pair(i, IntervalSet(Interval{-r, r, !strict, !strict}));
}

std::string Predicate::describe(const std::vector<std::string>& names) const {
  std::ostringstream os;
  if (form == Form::Named) {
    os << name;
  } else if (form == Form::MaxAbs) {
    os << (terms.empty() ? 0.0 : terms.front().coeff) << "*max|";
    for (std::size_t k = 0; k < terms.size(); ++k) os << (k ? "," : "") << coord_name(terms[k].index, names);
    os << "| + " << offset;
  } else {
    if (terms.empty()) os << offset;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      os << (k ? " + " : "") << terms[k].coeff << "*" << coord_name(terms[k].index, names);
    }
    if (!terms.empty()) os << " + " << offset;
  }
  os << (relation == Relation::Ge ? " >= 0" : " > 0");
  if (edge == Edge::Rising) os << " (rising)";
  return os.str();
}

bool Guard::holds(std::span<const double> x, std::span<const double> prev) const {
  return std::all_of(all.begin(), all.end(), [&](const Predicate& p) { return p.holds(x, prev); });
}

std::string Guard::describe(const std::vector<std::string>& names) const {
  if (all.empty()) return "true";
  std::string s;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (i) s += " and ";
    s += all[i].describe(names);
  }
  return s;
}

Expression Expression::constant(double v) {
  Expression e;
  e.kind = Kind::Constant;
  e.value = v;
  return e;
}

Expression Expression::copy(std::size_t j) {
  Expression e;
  e.kind = Kind::Copy;
  e.source = j;
  return e;
}

Expression Expression::affine(std::vector<AffineTerm> terms, double offset) {
  Expression e;
  e.kind = Kind::Affine;
  e.terms = std::move(terms);
  e.value = offset;
  return e;
}

Expression Expression::function(std::string name, ScalarFn fn, std::vector<std::size_t> deps) {
  Expression e;
  e.kind = Kind::Function;
  e.name = std::move(name);
  e.fn = std::move(fn);
  e.deps = std::move(deps);
  return e;
}

double Expression::eval(std::span<const double> x) const {
  switch (kind) {
    case Kind::Constant:
      return value;
    case Kind::Copy:
      return x[source];
    case Kind::Affine: {
      double s = value;
      for (const AffineTerm& t : terms) s += t.coeff * x[t.index];
      return s;
    }
    case Kind::Function:
      return fn(x);
  }
  return 0.0;
}

Vec ResetMap::apply(std::span<const double> x) const {
  Vec out(x.begin(), x.end());
  for (const Assignment& a : assignments) out[a.index] = a.expr.eval(x);
  return out;
}

bool ResetMap::assigns(std::size_t index) const { return find(index) != nullptr; }

const Expression* ResetMap::find(std::size_t index) const {
  for (const Assignment& a : assignments) {
    if (a.index == index) return &a.expr;
  }
  return nullptr;
}

void HybridAutomaton::validate() const {
  auto fail = [](const std::string& m) { throw ConstructionError(m); };
  if (dim == 0) fail("automaton dimension is zero");
  if (locations.empty()) fail("automaton has no locations");
  if (!coordinate_names.empty() && coordinate_names.size() != dim) fail("coordinate name count does not match dimension");
  if (initial_location >= locations.size()) fail("initial location out of range");
  if (initial_x.size() != dim) fail("initial state has wrong dimension");
  auto check_pred = [&](const Predicate& p, const std::string& where) {
    for (std::size_t i : p.coordinates()) {
      if (i >= dim) fail(where + ": predicate references coordinate " + std::to_string(i));
    }
    if (p.form == Predicate::Form::Named && !p.fn) fail(where + ": named predicate without function");
  };
  std::set<std::string> names;
  for (const Location& l : locations) {
    if (!names.insert(l.name).second) fail("duplicate location name " + l.name);
    if (!l.dynamics) fail("location " + l.name + " has no dynamics");
    if (!l.input_box.empty() && l.input_box.size() != input_dim) fail("location " + l.name + " input box dimension");
    for (const Predicate& p : l.invariant.all) {
      check_pred(p, "invariant of " + l.name);
      if (p.edge != Edge::Level) fail("invariant of " + l.name + " uses an edge predicate");
    }
  }
  std::set<std::size_t> clock_set(clocks.begin(), clocks.end());
  for (std::size_t c : clocks) {
    if (c >= dim) fail("clock index out of range");
    if (initial_x[c] != 0.0) fail("clock " + std::to_string(c) + " must start at 0");
  }
  std::set<std::string> tnames;
  for (const Transition& t : transitions) {
    if (!tnames.insert(t.name).second) fail("duplicate transition name " + t.name);
    if (t.source >= locations.size() || t.target >= locations.size()) {
      fail("transition " + t.name + " references a missing location");
    }
    for (const Predicate& p : t.guard.all) check_pred(p, "guard of " + t.name);
    std::set<std::size_t> assigned;
    for (const Assignment& a : t.reset.assignments) {
      if (a.index >= dim) fail("reset of " + t.name + " assigns coordinate out of range");
      if (!assigned.insert(a.index).second) fail("reset of " + t.name + " assigns a coordinate twice");
      if (clock_set.count(a.index) &&
          !(a.expr.kind == Expression::Kind::Constant && a.expr.value == 0.0)) {
        fail("reset of " + t.name + " sets a clock to a value other than 0");
      }
      if (a.expr.kind == Expression::Kind::Copy && a.expr.source >= dim) fail("reset copy source out of range");
      if (a.expr.kind == Expression::Kind::Function && !a.expr.fn) fail("reset function missing");
      for (const AffineTerm& term : a.expr.terms) {
        if (term.index >= dim) fail("reset term out of range");
      }
    }
  }
  if (!locations[initial_location].invariant.holds(initial_x)) fail("initial state violates the initial invariant");
}

std::size_t HybridAutomaton::location_index(const std::string& name) const {
  for (std::size_t i = 0; i < locations.size(); ++i) {
    if (locations[i].name == name) return i;
  }
  throw ConfigError("unknown location " + name);
}

std::size_t HybridAutomaton::transition_index(const std::string& name) const {
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    if (transitions[i].name == name) return i;
  }
  throw ConfigError("unknown transition " + name);
}

std::size_t HybridAutomaton::coordinate_index(const std::string& name) const {
  for (std::size_t i = 0; i < coordinate_names.size(); ++i) {
    if (coordinate_names[i] == name) return i;
  }
  throw ConfigError("unknown coordinate " + name);
}

HybridState initial_state(const HybridAutomaton& a) {
  HybridState s;
  s.location = a.initial_location;
  s.x = a.initial_x;
  s.clock_ticks.assign(a.clocks.size(), 0);
  return s;
}

Vec rk4_step(const VectorField& f, std::span<const double> x, std::span<const double> u, double h) {
  const std::size_t n = x.size();
  Vec k1(n), k2(n), k3(n), k4(n), tmp(n), out(n);
  f(x, u, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
  f(tmp, u, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
  f(tmp, u, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
  f(tmp, u, k4);
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  if (!all_finite(out)) throw IntegrationDiverged("RK4 step produced a non-finite state");
  return out;
}

StepOutcome continuous_step(const HybridAutomaton& a, const HybridState& s, std::span<const double> u, double h) {
  if (!(h > 0.0)) throw ConfigError("step size must be positive");
  const Location& loc = a.locations[s.location];
  Vec uu(a.input_dim, 0.0);
  if (!loc.input_box.empty()) {
    if (u.size() != a.input_dim) throw DimensionError("input has wrong dimension");
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (!loc.input_box[i].contains(u[i])) {
        throw InputError("input " + std::to_string(i) + " = " + std::to_string(u[i]) + " outside " +
                         loc.input_box[i].str() + " in " + loc.name);
      }
      uu[i] = u[i];
    }
  }
  StepOutcome out;
  HybridState& n = out.state;
  n.location = s.location;
  n.x = rk4_step(loc.dynamics, s.x, uu, h);
  n.steps = s.steps + 1;
  n.t = static_cast<double>(n.steps) * h;
  n.clock_ticks = s.clock_ticks;
  for (std::size_t j = 0; j < a.clocks.size(); ++j) {
    n.clock_ticks[j] += 1;
    n.x[a.clocks[j]] = static_cast<double>(n.clock_ticks[j]) * h;
  }
  n.prev_x = s.x;
  out.invariant_exit = !loc.invariant.holds(n.x);
  return out;
}

std::vector<std::size_t> enabled_transitions(const HybridAutomaton& a, const HybridState& s) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < a.transitions.size(); ++i) {
    const Transition& t = a.transitions[i];
    if (t.source == s.location && t.guard.holds(s.x, s.prev_x)) out.push_back(i);
  }
  return out;
}

HybridState take_transition(const HybridAutomaton& a, const HybridState& s, std::size_t transition) {
  if (transition >= a.transitions.size()) throw ConfigError("transition index out of range");
  const Transition& t = a.transitions[transition];
  if (t.source != s.location) throw ConfigError("transition " + t.name + " does not leave the current location");
  HybridState n;
  n.location = t.target;
  n.x = t.reset.apply(s.x);
  n.steps = s.steps;
  n.t = s.t;
  n.clock_ticks = s.clock_ticks;
  for (std::size_t j = 0; j < a.clocks.size(); ++j) {
    if (t.reset.assigns(a.clocks[j])) n.clock_ticks[j] = 0;
  }
  if (!all_finite(n.x)) throw ResetContractError("reset of " + t.name + " produced a non-finite state");
  if (!a.locations[t.target].invariant.holds(n.x)) {
    throw ResetContractError("reset of " + t.name + " violates the invariant of " + a.locations[t.target].name);
  }
  return n;
}

PolicyChoice policy_never(const HybridState&, const std::vector<std::size_t>&) { return {}; }

PolicyChoice policy_first_enabled(const HybridState&, const std::vector<std::size_t>& enabled) {
  if (enabled.empty()) return {};
  return {PolicyChoice::Kind::Take, enabled.front()};
}

void settle_eager(const HybridAutomaton& a, Trace& trace, std::size_t max_jumps) {
  for (std::size_t k = 0; k < max_jumps; ++k) {
    const HybridState& s = trace.back().state;
    std::optional<std::size_t> fire;
    for (std::size_t id : enabled_transitions(a, s)) {
      if (a.transitions[id].urgency == Urgency::Eager) {
        fire = id;
        break;
      }
    }
    if (!fire) return;
    HybridState n = take_transition(a, s, *fire);
    TraceEvent ev;
    ev.kind = TraceEvent::Kind::Jump;
    ev.transition = *fire;
    trace.push_back({std::move(n), ev});
  }
  throw SimulationError("more than " + std::to_string(max_jumps) + " jumps at one instant", trace);
}

namespace {

// Offers controllable transitions to the policy; returns false on Stop.
bool apply_policy(const HybridAutomaton& a, const TransitionPolicy& policy, Trace& trace) {
  for (int guard = 0; guard < 64; ++guard) {
    std::vector<std::size_t> offered;
    for (std::size_t id : enabled_transitions(a, trace.back().state)) {
      if (a.transitions[id].urgency == Urgency::Controllable) offered.push_back(id);
    }
    const PolicyChoice c = policy(trace.back().state, offered);
    if (c.kind == PolicyChoice::Kind::Stop) return false;
    if (c.kind == PolicyChoice::Kind::Continue) return true;
    if (std::find(offered.begin(), offered.end(), c.transition) == offered.end()) {
      throw SimulationError("policy chose a transition that is not enabled", trace);
    }
    TraceEvent ev;
    ev.kind = TraceEvent::Kind::Jump;
    ev.transition = c.transition;
    trace.push_back({take_transition(a, trace.back().state, c.transition), ev});
    settle_eager(a, trace);
  }
  throw SimulationError("policy did not let time advance", trace);
}

}  // namespace

Trace simulate_from(const HybridAutomaton& a, const HybridState& start, const InputSchedule& inputs,
                    const TransitionPolicy& policy, std::int64_t n_steps, double h) {
  if (n_steps < 0) throw ConfigError("n_steps must be nonnegative");
  Trace trace;
  trace.push_back({start, TraceEvent{}});
  try {
    if (n_steps == 0) return trace;
    settle_eager(a, trace);
    for (std::int64_t i = 0; i < n_steps; ++i) {
      if (!apply_policy(a, policy, trace)) return trace;
      const HybridState& s = trace.back().state;
      Vec u = inputs ? inputs(i, s) : Vec(a.input_dim, 0.0);
      StepOutcome o = continuous_step(a, s, u, h);
      TraceEvent ev;
      ev.kind = TraceEvent::Kind::Flow;
      ev.u = std::move(u);
      ev.h = h;
      const bool exited = o.invariant_exit;
      trace.push_back({std::move(o.state), std::move(ev)});
      if (exited) {
        throw SimulationError("invariant of " + a.locations[trace.back().state.location].name + " violated at t = " +
                                  std::to_string(trace.back().state.t),
                              trace);
      }
      settle_eager(a, trace);
    }
  } catch (const SimulationError&) {
    throw;
  } catch (const Error& e) {
    throw SimulationError(e.what(), trace);
  }
  return trace;
}

Trace simulate(const HybridAutomaton& a, const InputSchedule& inputs, const TransitionPolicy& policy,
               std::int64_t n_steps, double h) {
  return simulate_from(a, initial_state(a), inputs, policy, n_steps, h);
}

}  // namespace oscf
