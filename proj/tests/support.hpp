#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "oscf/experiment.hpp"
#include "oscf/hybrid_core.hpp"
#include "oscf/property_library.hpp"
#include "oscf/rng.hpp"

namespace oscf::testing {

inline PlantDefinition ll_plant(double amplitude) {
  return augment_with_parameters(laub_loomis(), {0}, {Interval::closed(1.8, 2.2)},
                                 {Interval::closed(-amplitude, amplitude)});
}

inline OscillationSpec ll_spec() {
  OscillationSpec s;
  s.plant_dim = 7;
  s.param_dim = 1;
  return s;
}

// Piecewise-constant random k1 drift, held for `hold` steps and zeroed when
// it would leave the parameter box.
inline InputSchedule random_drift(std::uint64_t seed, double amplitude, std::size_t k_index, std::int64_t hold = 20) {
  auto rng = std::make_shared<Rng>(seed);
  auto current = std::make_shared<double>(0.0);
  return [=](std::int64_t step, const HybridState& s) {
    if (step % hold == 0) *current = rng->uniform(-amplitude, amplitude);
    const double next = s.x[k_index] + *current * 0.05;
    return Vec{(next < 1.8 + 1e-9 || next > 2.2 - 1e-9) ? 0.0 : *current};
  };
}

using JumpSequence = std::vector<std::pair<std::size_t, std::size_t>>;  // (transition, step)

inline JumpSequence jumps(const Trace& tr) {
  JumpSequence out;
  for (const TraceEntry& e : tr) {
    if (e.event.kind == TraceEvent::Kind::Jump) out.emplace_back(e.event.transition, e.state.steps);
  }
  return out;
}

struct CoSimResult {
  std::size_t schedules = 0;
  std::size_t identical = 0;
  std::size_t total_jumps = 0;
  std::string first_mismatch;
};

// Simulates the z form and the x_p form under the same random schedules and
// compares their jump sequences.
inline CoSimResult co_simulate(std::size_t n, std::int64_t steps, std::uint64_t seed0 = 100) {
  const PlantDefinition plant = ll_plant(1.0);
  const PropertyAutomaton z = build_oscillation_automaton_z(ll_spec(), plant);
  const PropertyAutomaton p = build_oscillation_automaton(ll_spec(), plant);
  CoSimResult r;
  for (std::size_t i = 0; i < n; ++i) {
    const double amp = 0.02 + 0.98 * static_cast<double>(i) / static_cast<double>(n);
    const Trace tz = simulate(z.automaton, random_drift(seed0 + i, amp, 7), policy_never, steps, 0.05);
    const Trace tp = simulate(p.automaton, random_drift(seed0 + i, amp, 7), policy_never, steps, 0.05);
    const JumpSequence jz = jumps(tz), jp = jumps(tp);
    ++r.schedules;
    r.total_jumps += jz.size();
    if (jz == jp) {
      ++r.identical;
    } else if (r.first_mismatch.empty()) {
      r.first_mismatch = "schedule " + std::to_string(i) + ": " + std::to_string(jz.size()) + " vs " +
                         std::to_string(jp.size()) + " jumps";
    }
  }
  return r;
}

// Abstract path of a trace under lambda, repeats collapsed. Returns the
// first consecutive pair missing from the relation, or an empty string.
inline std::string check_soundness(const Trace& tr, const AbstractTransitionSystem& d, const PredicateMap& lambda) {
  std::vector<std::size_t> path;
  for (const TraceEntry& e : tr) {
    const auto s = d.locate(lambda, e.state.location, e.state.x);
    if (!s) return "state at t=" + std::to_string(e.state.t) + " has no abstract cell";
    if (path.empty() || path.back() != *s) path.push_back(*s);
  }
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (!d.has_edge(path[i - 1], path[i])) return d.states[path[i - 1]].name + " -> " + d.states[path[i]].name;
  }
  return {};
}

}  // namespace oscf::testing
