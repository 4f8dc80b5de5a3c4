#include "oscf/models.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace oscf {

void laub_loomis_rhs(std::span<const double> x, std::span<const double> k, std::span<double> dx) {
  dx[0] = k[0] * x[6] - k[1] * x[0] * x[1];
  dx[1] = k[2] * x[4] - k[3] * x[1];
  dx[2] = k[4] * x[6] - k[5] * x[1] * x[2];
  dx[3] = k[6] - k[7] * x[2] * x[3];
  dx[4] = k[8] * x[0] - k[9] * x[3] * x[4];
  dx[5] = k[10] * x[0] - k[11] * x[5];
  dx[6] = k[12] * x[5] - k[13] * x[6];
}

Vec laub_loomis_dynamics(std::span<const double> x, std::span<const double> k) {
  if (x.size() != 7 || k.size() != 14) throw DimensionError("Laub-Loomis needs 7 states and 14 parameters");
  Vec dx(7);
  laub_loomis_rhs(x, k, dx);
  return dx;
}

Vec nominal_parameters() { return {2.0, 0.9, 2.5, 1.5, 0.6, 0.8, 1.0, 1.3, 0.3, 0.8, 0.7, 4.9, 23.0, 4.5}; }

ParametricModel laub_loomis() {
  ParametricModel m;
  m.name = "laub_loomis";
  m.n = 7;
  m.m = 14;
  m.f = laub_loomis_rhs;
  m.nominal = nominal_parameters();
  // Endpoint of 148 RK4 steps (h = 0.05, one T_i) from the all-ones state at
  // nominal k. Recomputed in the model tests.
  m.default_state = {2.7091884801420649, 1.4000224082430921, 0.90403426896363592, 0.94819432699998729,
                     0.88868894266839515, 0.37691554713231634, 1.8683198829986891};
  m.state_box.assign(7, Interval::closed(0.0, 5.0));
  m.state_names = {"x1", "x2", "x3", "x4", "x5", "x6", "x7"};
  for (int i = 1; i <= 14; ++i) m.param_names.push_back("k" + std::to_string(i));
  m.param_units.assign(14, "1/min");
  // Units as printed in the source table.
  for (std::size_t i : {5, 6, 9, 13}) m.param_units[i] = "1/(min*uM)";
  m.doc = "Laub-Loomis cAMP network, concentrations in uM, time in min";
  return m;
}

ParametricModel harmonic_oscillator() {
  ParametricModel m;
  m.name = "harmonic";
  m.n = 2;
  m.m = 1;
  // x1' = w x2, x2' = -w x1; from (1, 0): x1 = cos(w t), period 2 pi / w.
  m.f = [](std::span<const double> x, std::span<const double> k, std::span<double> dx) {
    dx[0] = k[0] * x[1];
    dx[1] = -k[0] * x[0];
  };
  m.nominal = {1.0};
  m.default_state = {1.0, 0.0};
  m.state_box.assign(2, Interval::closed(-2.0, 2.0));
  m.state_names = {"x1", "x2"};
  m.param_names = {"w"};
  m.param_units = {"rad/time"};
  m.doc = "harmonic oscillator, period 2*pi at w = 1";
  return m;
}

ParametricModel contracting_linear() {
  ParametricModel m;
  m.name = "contract";
  m.n = 1;
  m.m = 1;
  // x' = -a x; x(t) = x0 exp(-a t).
  m.f = [](std::span<const double> x, std::span<const double> k, std::span<double> dx) { dx[0] = -k[0] * x[0]; };
  m.nominal = {1.0};
  m.default_state = {1.0};
  m.state_box.assign(1, Interval::closed(-2.0, 2.0));
  m.state_names = {"x1"};
  m.param_names = {"a"};
  m.param_units = {"1/time"};
  m.doc = "contracting linear system, converges to 0";
  return m;
}

ParametricModel hopf_normal_form() {
  ParametricModel m;
  m.name = "hopf";
  m.n = 2;
  m.m = 1;
  // Supercritical Hopf normal form. For mu > 0 the limit cycle has radius
  // sqrt(mu) and period 2 pi; for mu < 0 the origin is a stable focus.
  m.f = [](std::span<const double> x, std::span<const double> k, std::span<double> dx) {
    const double r2 = x[0] * x[0] + x[1] * x[1];
    dx[0] = k[0] * x[0] - x[1] - x[0] * r2;
    dx[1] = x[0] + k[0] * x[1] - x[1] * r2;
  };
  m.nominal = {1.0};
  m.default_state = {1.0, 0.0};
  m.state_box.assign(2, Interval::closed(-2.0, 2.0));
  m.state_names = {"x1", "x2"};
  m.param_names = {"mu"};
  m.param_units = {"1/time"};
  m.doc = "Hopf normal form, limit cycle radius sqrt(mu)";
  return m;
}

std::vector<std::string> plant_catalog() { return {"laub_loomis", "harmonic", "contract", "hopf"}; }

ParametricModel plant_by_name(const std::string& name) {
  if (name == "laub_loomis") return laub_loomis();
  if (name == "harmonic") return harmonic_oscillator();
  if (name == "contract") return contracting_linear();
  if (name == "hopf") return hopf_normal_form();
  throw ConfigError("unknown plant " + name);
}

Vec PlantDefinition::parameters(std::span<const double> y) const {
  Vec k = model.nominal;
  for (std::size_t j = 0; j < varied.size(); ++j) k[varied[j]] = y[model.n + j];
  return k;
}

PlantDefinition augment_with_parameters(const ParametricModel& model, std::vector<std::size_t> varied,
                                        Box param_boxes, Box input_boxes) {
  std::set<std::size_t> seen;
  for (std::size_t i : varied) {
    if (i >= model.m) throw ConfigError("varied parameter index " + std::to_string(i) + " out of range");
    if (!seen.insert(i).second) throw ConfigError("varied parameter index " + std::to_string(i) + " listed twice");
  }
  if (param_boxes.size() != varied.size() || input_boxes.size() != varied.size()) {
    throw DimensionError("one parameter box and one input box per varied parameter");
  }
  PlantDefinition p;
  p.model = model;
  p.varied = std::move(varied);
  p.param_box = std::move(param_boxes);
  p.input_box = std::move(input_boxes);
  const std::size_t n = model.n;
  const std::size_t mv = p.varied.size();
  p.dim = n + mv;
  p.default_state = model.default_state;
  p.bounding_box = model.state_box;
  p.names = model.state_names;
  for (std::size_t j = 0; j < mv; ++j) {
    const std::size_t ki = p.varied[j];
    if (!p.param_box[j].contains(model.nominal[ki])) {
      throw ConfigError("nominal value of " + model.param_names[ki] + " lies outside its box");
    }
    p.default_state.push_back(model.nominal[ki]);
    p.bounding_box.push_back(p.param_box[j]);
    p.names.push_back(model.param_names[ki]);
    p.invariant.all.push_back(Predicate::affine({{n + j, 1.0}}, -p.param_box[j].lo, Relation::Ge));
    p.invariant.all.push_back(Predicate::affine({{n + j, -1.0}}, p.param_box[j].hi, Relation::Ge));
  }
  const ParametricField f = model.f;
  const Vec nominal = model.nominal;
  const std::vector<std::size_t> vi = p.varied;
  p.dynamics = [f, nominal, vi, n](std::span<const double> y, std::span<const double> u, std::span<double> dy) {
    thread_local Vec k;
    k = nominal;
    for (std::size_t j = 0; j < vi.size(); ++j) k[vi[j]] = y[n + j];
    f(y.subspan(0, n), k, dy.subspan(0, n));
    for (std::size_t j = 0; j < vi.size(); ++j) dy[n + j] = j < u.size() ? u[j] : 0.0;
  };
  return p;
}

HybridAutomaton plant_automaton(const PlantDefinition& plant) {
  HybridAutomaton a;
  a.dim = plant.dim;
  a.input_dim = plant.varied.size();
  a.coordinate_names = plant.names;
  Location l;
  l.name = "plant";
  l.dynamics = plant.dynamics;
  l.invariant = plant.invariant;
  l.input_box = plant.input_box;
  a.locations.push_back(std::move(l));
  a.initial_x = plant.default_state;
  a.validate();
  return a;
}

}  // namespace oscf
