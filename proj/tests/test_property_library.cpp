#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oscf/property_library.hpp"
#include "support.hpp"

using namespace oscf;
using oscf::testing::ll_plant;
using oscf::testing::ll_spec;

namespace {

OscillationSpec small_spec(std::size_t plant_dim, std::size_t param_dim, double T_i) {
  OscillationSpec s;
  s.T_i = T_i;
  s.plant_dim = plant_dim;
  s.param_dim = param_dim;
  return s;
}

Trace run_plant(const PropertyAutomaton& pa, const InputSchedule& u, std::int64_t steps) {
  return simulate(pa.automaton, u, policy_never, steps, 0.05);
}

}  // namespace

TEST_CASE("oscillation automaton structure") {
  const PropertyAutomaton pa = build_oscillation_automaton_z(ll_spec(), ll_plant(0.1));
  const HybridAutomaton& a = pa.automaton;
  CHECK(a.locations.size() == 4);
  CHECK(a.transitions.size() == 7);
  int loops = 0;
  for (const Transition& t : a.transitions) loops += t.source == t.target ? 1 : 0;
  CHECK(loops == 2);
  CHECK(a.dim == 19);
  CHECK(a.locations[0].name == "q_INIT");
  CHECK(a.locations[3].name == "q_OSC");
}

TEST_CASE("q_OSC exits when |z| exceeds epsilon at c = p") {
  const PropertyAutomaton pa = build_oscillation_automaton_z(ll_spec(), ll_plant(0.1));
  const PropertyLayout& L = pa.layout;
  HybridState s = initial_state(pa.automaton);
  s.location = L.q_osc;
  s.x[L.p] = 7.3;
  s.x[L.c] = 7.3;
  s.clock_ticks.assign(s.clock_ticks.size(), 146);
  s.x[L.z_index(0)] = 0.3;
  auto en = enabled_transitions(pa.automaton, s);
  CHECK(std::find(en.begin(), en.end(), L.osc_init) != en.end());
  CHECK(std::find(en.begin(), en.end(), L.osc_osc) == en.end());
  s.x[L.z_index(0)] = 0.1;
  en = enabled_transitions(pa.automaton, s);
  CHECK(std::find(en.begin(), en.end(), L.osc_osc) != en.end());
}

TEST_CASE("q_LRN moves to q_STD when near x_p at c = delta with patience delta") {
  OscillationSpec spec = ll_spec();
  spec.steady_patience = spec.delta;
  const PropertyAutomaton pa = build_oscillation_automaton_z(spec, ll_plant(0.1));
  const PropertyLayout& L = pa.layout;
  HybridState s = initial_state(pa.automaton);
  s.location = L.q_lrn;
  s.x[L.c] = 0.05;
  s.x[L.d] = 0.0;
  s.x[L.z_index(0)] = 0.1;
  const auto en = enabled_transitions(pa.automaton, s);
  CHECK(std::find(en.begin(), en.end(), L.lrn_std) != en.end());
}

TEST_CASE("q_INIT to q_LRN stores the periodic point") {
  const PropertyAutomaton pa = build_oscillation_automaton(ll_spec(), ll_plant(0.1));
  const PropertyLayout& L = pa.layout;
  HybridState s = initial_state(pa.automaton);
  s.x[L.c] = 8.0;
  s.x[0] = 2.5;
  s.x[3] = 1.25;
  const HybridState n = take_transition(pa.automaton, s, L.init_lrn);
  CHECK(n.location == L.q_lrn);
  CHECK(n.x[L.c] == 0.0);
  for (std::size_t i = 0; i < 7; ++i) CHECK(n.x[L.w + i] == s.x[i]);
}

TEST_CASE("q_OSC self-check zeroes z and c only") {
  const PropertyAutomaton pa = build_oscillation_automaton_z(ll_spec(), ll_plant(0.1));
  const PropertyLayout& L = pa.layout;
  HybridState s = initial_state(pa.automaton);
  s.location = L.q_osc;
  for (std::size_t i = 0; i < s.x.size(); ++i) s.x[i] = 0.01 * static_cast<double>(i + 1);
  s.x[L.n] = 2.0;
  s.x[L.p] = 7.0;
  s.x[L.c] = 7.0;
  const HybridState n = take_transition(pa.automaton, s, L.osc_osc);
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    const bool zeroed = i == L.c || (i >= L.w && i < L.w + 7);
    CHECK(n.x[i] == (zeroed ? 0.0 : s.x[i]));
  }
}

TEST_CASE("harmonic oscillator is classified as oscillating with period 2 pi") {
  const PlantDefinition plant = augment_with_parameters(harmonic_oscillator(), {}, {}, {});
  const PropertyAutomaton pa = build_oscillation_automaton_z(small_spec(2, 0, 3.0), plant);
  const Verdict v = classify_trace(run_plant(pa, nullptr, 1000), pa.layout);
  CHECK(v.kind == Verdict::Kind::Oscillating);
  CHECK(std::fabs(v.period - 2.0 * std::numbers::pi) <= 0.05);
}

TEST_CASE("contracting plant is classified as steady") {
  const PlantDefinition plant = augment_with_parameters(contracting_linear(), {}, {}, {});
  const PropertyAutomaton pa = build_oscillation_automaton_z(small_spec(1, 0, 10.0), plant);
  const Verdict v = classify_trace(run_plant(pa, nullptr, 1000), pa.layout);
  CHECK(v.kind == Verdict::Kind::Steady);
  CHECK(v.period == doctest::Approx(0.05));
}

TEST_CASE("oscillation broken by a forced frequency drift is falsified at the first miss") {
  const PlantDefinition plant =
      augment_with_parameters(harmonic_oscillator(), {0}, {Interval::closed(0.5, 2.0)}, {Interval::closed(-1, 1)});
  const PropertyAutomaton pa = build_oscillation_automaton_z(small_spec(2, 1, 3.0), plant);
  const PropertyLayout& L = pa.layout;
  InputSchedule ramp = [&](std::int64_t, const HybridState& s) {
    return Vec{s.t > 16.0 && s.x[2] < 1.3 ? 0.1 : 0.0};
  };
  const Trace tr = run_plant(pa, ramp, 2000);
  const Verdict v = classify_trace(tr, L);
  REQUIRE(v.kind == Verdict::Kind::Falsified);
  CHECK(std::fabs(v.exit_value) > 0.2);
  CHECK(v.witness_time > 16.0);
  for (std::size_t i = 1; i < v.exit_entry; ++i) {
    if (tr[i].event.kind == TraceEvent::Kind::Jump && tr[i].event.transition == L.osc_osc) {
      CHECK(std::fabs(L.z(tr[i - 1].state.x, 0)) <= 0.2);
    }
  }
}

TEST_CASE("Hopf normal form driven below its critical parameter is falsified") {
  const PlantDefinition plant =
      augment_with_parameters(hopf_normal_form(), {0}, {Interval::closed(-1, 1)}, {Interval::closed(-1, 1)});
  const PropertyAutomaton pa = build_oscillation_automaton_z(small_spec(2, 1, 3.0), plant);
  InputSchedule drive = [](std::int64_t, const HybridState& s) {
    return Vec{s.t > 16.0 && s.x[2] > -0.5 ? -0.5 : 0.0};
  };
  const Verdict v = classify_trace(run_plant(pa, drive, 3000), pa.layout);
  CHECK(v.kind == Verdict::Kind::Falsified);
}

TEST_CASE("Laub-Loomis at nominal parameters enters q_OSC and stays") {
  const PropertyAutomaton pa = build_oscillation_automaton_z(ll_spec(), ll_plant(0.1));
  const Trace tr = run_plant(pa, nullptr, 4000);
  const Verdict v = classify_trace(tr, pa.layout);
  CHECK(v.kind == Verdict::Kind::Oscillating);
  CHECK(v.osc_cycles >= 20);
  CHECK(tr.back().state.location == pa.layout.q_osc);
  CHECK(v.max_abs_z < 0.2);
}

TEST_CASE("z form and x_p form take the same jumps") {
  const auto r = oscf::testing::co_simulate(10, 800);
  CHECK(r.identical == r.schedules);
  CHECK(r.total_jumps > 30);
}

TEST_CASE("classification rejects malformed traces") {
  const PropertyAutomaton pa = build_oscillation_automaton_z(ll_spec(), ll_plant(0.1));
  CHECK_THROWS_AS(classify_trace({}, pa.layout), ClassificationError);
  Trace bad{{HybridState{0, Vec(3, 0.0)}, {}}};
  CHECK_THROWS_AS(classify_trace(bad, pa.layout), ClassificationError);
}

TEST_CASE("spec validation") {
  OscillationSpec s = ll_spec();
  s.epsilon = 0.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = ll_spec();
  s.monitored = {7};
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("overshoot of a clipped sine reaches one") {
  const PlantDefinition plant = augment_with_parameters(harmonic_oscillator(), {}, {}, {});
  OvershootSpec spec;
  spec.output = 0;
  spec.reference = [](std::span<const double>, std::span<const double>, std::span<double> dx) { dx[0] = 0.0; };
  OvershootAutomaton oa = build_overshoot_automaton(spec, plant);
  oa.automaton.initial_x[0] = 0.0;
  oa.automaton.initial_x[1] = 1.0;
  const Trace tr = simulate(oa.automaton, nullptr, policy_never, 60, 0.05);
  CHECK(tr.back().state.x[oa.layout.omega] == doctest::Approx(1.0).epsilon(1e-3));
}
