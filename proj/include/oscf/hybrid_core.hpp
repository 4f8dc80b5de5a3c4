#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oscf/error.hpp"
#include "oscf/interval.hpp"

namespace oscf {

using Vec = std::vector<double>;
using ScalarFn = std::function<double(std::span<const double>)>;
// f(x, u) -> dx, all spans sized by the automaton.
using VectorField = std::function<void(std::span<const double>, std::span<const double>, std::span<double>)>;

enum class Relation { Ge, Gt };

// Level predicates look at the current point only. Rising predicates also
// need the previous sample and hold when g crosses into the satisfied set.
enum class Edge { Level, Rising };

struct AffineTerm {
  std::size_t index = 0;
  double coeff = 0.0;
};

// g(x) ~ 0 with g affine, a scaled max-abs over a coordinate set, or a named
// nonlinear function.
struct Predicate {
  enum class Form { Affine, MaxAbs, Named };

  Form form = Form::Affine;
  std::vector<AffineTerm> terms;  // Affine: sum of coeff*x_i. MaxAbs: coeff is the scale, all equal.
  double offset = 0.0;
  Relation relation = Relation::Ge;
  Edge edge = Edge::Level;
  std::string name;
  ScalarFn fn;
  std::vector<std::size_t> deps;

  static Predicate always();
  static Predicate affine(std::vector<AffineTerm> terms, double offset, Relation rel);
  // scale * max_{i in indices} |x_i| + offset ~ 0
  static Predicate max_abs(std::vector<std::size_t> indices, double scale, double offset, Relation rel);
  static Predicate named(std::string name, ScalarFn fn, std::vector<std::size_t> deps, Relation rel,
                         Edge edge = Edge::Level);

  double g(std::span<const double> x) const;
  bool holds_at(std::span<const double> x) const;
  // prev may be empty; a rising predicate never holds without a previous sample.
  bool holds(std::span<const double> x, std::span<const double> prev) const;

  bool is_true() const { return form == Form::Affine && terms.empty() && holds_at({}); }
  std::vector<std::size_t> coordinates() const;
  // Satisfying set on a single coordinate, when the predicate is a level
  // predicate over one coordinate and not named.
  std::optional<std::pair<std::size_t, IntervalSet>> satisfying_set() const;
  std::string describe(const std::vector<std::string>& names = {}) const;
};

// Conjunction; also used for invariants. Empty means true.
struct Guard {
  std::vector<Predicate> all;

  bool holds(std::span<const double> x, std::span<const double> prev = {}) const;
  std::string describe(const std::vector<std::string>& names = {}) const;
};

struct Expression {
  enum class Kind { Constant, Copy, Affine, Function };

  Kind kind = Kind::Constant;
  double value = 0.0;       // Constant value, Affine offset
  std::size_t source = 0;   // Copy
  std::vector<AffineTerm> terms;
  std::string name;
  ScalarFn fn;
  std::vector<std::size_t> deps;

  static Expression constant(double v);
  static Expression copy(std::size_t j);
  static Expression affine(std::vector<AffineTerm> terms, double offset);
  static Expression function(std::string name, ScalarFn fn, std::vector<std::size_t> deps);

  double eval(std::span<const double> x) const;
};

struct Assignment {
  std::size_t index = 0;
  Expression expr;
};

// Deterministic reset, evaluated simultaneously on the pre-jump state.
struct ResetMap {
  std::vector<Assignment> assignments;

  Vec apply(std::span<const double> x) const;
  bool assigns(std::size_t index) const;
  const Expression* find(std::size_t index) const;
};

struct Location {
  std::string name;
  VectorField dynamics;
  Guard invariant;
  Box input_box;  // empty: autonomous
};

enum class Urgency { Eager, Controllable };

struct Transition {
  std::string name;
  std::size_t source = 0;
  std::size_t target = 0;
  Guard guard;
  ResetMap reset;
  Urgency urgency = Urgency::Eager;
};

struct HybridAutomaton {
  std::size_t dim = 0;
  std::size_t input_dim = 0;
  std::vector<std::string> coordinate_names;
  std::vector<Location> locations;
  std::vector<Transition> transitions;
  std::size_t initial_location = 0;
  Vec initial_x;
  // Coordinates advanced as tick_count * h; only resettable to 0.
  std::vector<std::size_t> clocks;

  // Throws ConstructionError on any structural inconsistency.
  void validate() const;
  std::size_t location_index(const std::string& name) const;
  std::size_t transition_index(const std::string& name) const;
  std::size_t coordinate_index(const std::string& name) const;
};

struct HybridState {
  std::size_t location = 0;
  Vec x;
  std::int64_t steps = 0;
  double t = 0.0;
  std::vector<std::int64_t> clock_ticks;
  Vec prev_x;  // state before the last continuous step; cleared by jumps
};

HybridState initial_state(const HybridAutomaton& a);

Vec rk4_step(const VectorField& f, std::span<const double> x, std::span<const double> u, double h);

struct StepOutcome {
  HybridState state;
  bool invariant_exit = false;
};

StepOutcome continuous_step(const HybridAutomaton& a, const HybridState& s, std::span<const double> u, double h);

std::vector<std::size_t> enabled_transitions(const HybridAutomaton& a, const HybridState& s);

HybridState take_transition(const HybridAutomaton& a, const HybridState& s, std::size_t transition);

struct TraceEvent {
  enum class Kind { Start, Flow, Jump };
  Kind kind = Kind::Start;
  Vec u;
  double h = 0.0;
  std::size_t transition = 0;
};

struct TraceEntry {
  HybridState state;
  TraceEvent event;
};

using Trace = std::vector<TraceEntry>;

// Piecewise-constant input: u for step i.
using InputSchedule = std::function<Vec(std::int64_t step, const HybridState&)>;

struct PolicyChoice {
  enum class Kind { Continue, Take, Stop };
  Kind kind = Kind::Continue;
  std::size_t transition = 0;
};

// Offered the enabled controllable transitions at each instant.
using TransitionPolicy = std::function<PolicyChoice(const HybridState&, const std::vector<std::size_t>&)>;

PolicyChoice policy_never(const HybridState&, const std::vector<std::size_t>&);
PolicyChoice policy_first_enabled(const HybridState&, const std::vector<std::size_t>&);

// Fires enabled eager transitions (first declared first) until none is
// enabled, appending a Jump entry for each.
void settle_eager(const HybridAutomaton& a, Trace& trace, std::size_t max_jumps = 64);

class SimulationError : public Error {
 public:
  SimulationError(const std::string& what, Trace partial) : Error(what), partial_(std::move(partial)) {}
  const Trace& partial() const { return partial_; }

 private:
  Trace partial_;
};

Trace simulate(const HybridAutomaton& a, const InputSchedule& inputs, const TransitionPolicy& policy,
               std::int64_t n_steps, double h);

Trace simulate_from(const HybridAutomaton& a, const HybridState& start, const InputSchedule& inputs,
                    const TransitionPolicy& policy, std::int64_t n_steps, double h);

}  // namespace oscf
