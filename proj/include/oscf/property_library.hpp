#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "oscf/hybrid_core.hpp"
#include "oscf/models.hpp"

namespace oscf {

struct OscillationSpec {
  double T_i = 7.3781;
  double delta = 0.05;
  double epsilon = 0.2;
  std::vector<std::size_t> monitored{0};
  std::size_t plant_dim = 0;
  std::size_t param_dim = 0;
  // LRN -> STD fires once the trajectory stayed in the epsilon ball for this
  // long; <= 0 means T_i.
  double steady_patience = 0.0;
  int confirm_cycles = 1;

  double patience() const { return steady_patience > 0.0 ? steady_patience : T_i; }
  void validate() const;
};

// Coordinate, location and transition indices of a built property automaton.
struct PropertyLayout {
  OscillationSpec spec;
  bool z_form = true;
  std::size_t n = 0;   // plant states start at 0
  std::size_t mv = 0;  // number of varied parameters, stored from index n
  std::size_t c = 0;
  std::size_t p = 0;
  std::size_t w = 0;   // z (z form) or x_p block, n entries
  std::size_t s = 0;   // departure sign recorded when learning starts
  std::size_t d = 0;   // excursion outside the epsilon ball while learning

  std::size_t q_init = 0, q_lrn = 1, q_std = 2, q_osc = 3;
  std::size_t init_lrn = 0, lrn_std = 0, lrn_osc = 0, osc_osc = 0, osc_init = 0, std_std = 0, std_init = 0;

  // Deviation x_i - x_p,i for plant coordinate i in either form.
  double z(const Vec& x, std::size_t i) const { return z_form ? x[w + i] : x[i] - x[w + i]; }
  std::size_t z_index(std::size_t i) const { return w + i; }
};

struct PropertyAutomaton {
  HybridAutomaton automaton;
  PropertyLayout layout;
};

// Location order: q_INIT, q_LRN, q_STD, q_OSC.
PropertyAutomaton build_oscillation_automaton(const OscillationSpec& spec, const PlantDefinition& plant);
PropertyAutomaton build_oscillation_automaton_z(const OscillationSpec& spec, const PlantDefinition& plant);

struct OvershootSpec {
  std::size_t output = 0;          // plant coordinate compared with the reference
  ParametricField reference;       // x*' = f*(x*), k unused
  Vec reference_initial{0.0};
  std::size_t reference_output = 0;
  double delta = 0.05;
};

struct OvershootLayout {
  std::size_t n = 0, mv = 0, ref = 0, c = 0, omega = 0;
};

struct OvershootAutomaton {
  HybridAutomaton automaton;
  OvershootLayout layout;
};

OvershootAutomaton build_overshoot_automaton(const OvershootSpec& spec, const PlantDefinition& plant);

struct Verdict {
  enum class Kind { Oscillating, Steady, Falsified, Inconclusive };
  Kind kind = Kind::Inconclusive;
  double period = 0.0;       // learned p (Oscillating, Steady, and the p in force when Falsified)
  double witness_time = 0.0;  // Falsified: time of the exit jump
  double exit_value = 0.0;    // Falsified: monitored deviation z at the exit
  std::size_t exit_entry = 0;  // Falsified: trace index of the exit jump
  int osc_cycles = 0;
  int std_cycles = 0;
  // Largest |z| on the first monitored coordinate seen at a period check
  // (c >= p in q_OSC or q_STD).
  double max_abs_z = 0.0;
  // Largest |z| on the first monitored coordinate at any sample after the
  // period or steady state was learned, up to the exit jump.
  double max_abs_z_learned = 0.0;
};

std::string verdict_name(Verdict::Kind k);

Verdict classify_trace(const Trace& trace, const PropertyLayout& layout);

}  // namespace oscf
