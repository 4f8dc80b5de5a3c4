#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "oscf/hybrid_core.hpp"

namespace oscf {

// dx = f(x, k)
using ParametricField = std::function<void(std::span<const double>, std::span<const double>, std::span<double>)>;

struct ParametricModel {
  std::string name;
  std::size_t n = 0;
  std::size_t m = 0;
  ParametricField f;
  Vec nominal;
  Vec default_state;
  Box state_box;  // recommended bounding box for goal sampling
  std::vector<std::string> state_names;
  std::vector<std::string> param_names;
  std::vector<std::string> param_units;
  std::string doc;
};

// Right-hand side exactly as printed, rows x1..x7.
Vec laub_loomis_dynamics(std::span<const double> x, std::span<const double> k);
void laub_loomis_rhs(std::span<const double> x, std::span<const double> k, std::span<double> dx);

// Oscillating nominal rate constants k1..k14.
Vec nominal_parameters();

ParametricModel laub_loomis();
ParametricModel harmonic_oscillator();
ParametricModel contracting_linear();
ParametricModel hopf_normal_form();

std::vector<std::string> plant_catalog();
ParametricModel plant_by_name(const std::string& name);

// Plant with the varied parameters appended to the state (k_i' = u_i).
// Non-varied parameters stay at their nominal values.
struct PlantDefinition {
  ParametricModel model;
  std::vector<std::size_t> varied;
  Box param_box;
  Box input_box;
  std::size_t dim = 0;  // n + varied.size()
  VectorField dynamics;
  Vec default_state;
  Box bounding_box;
  Guard invariant;  // parameter box
  std::vector<std::string> names;

  // Full parameter vector for an augmented state.
  Vec parameters(std::span<const double> y) const;
};

PlantDefinition augment_with_parameters(const ParametricModel& model, std::vector<std::size_t> varied,
                                        Box param_boxes, Box input_boxes);

// Automaton with the single location "plant" around an augmented plant.
HybridAutomaton plant_automaton(const PlantDefinition& plant);

}  // namespace oscf
