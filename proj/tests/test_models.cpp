#include <cmath>

#include "doctest.h"
#include "oscf/models.hpp"
#include "oscf/rng.hpp"

using namespace oscf;

namespace {

// Equations typed independently from the printed system.
Vec ll_reference(const Vec& x, const Vec& k) {
  return {k[0] * x[6] - k[1] * x[0] * x[1], k[2] * x[4] - k[3] * x[1],     k[4] * x[6] - k[5] * x[1] * x[2],
          k[6] - k[7] * x[2] * x[3],        k[8] * x[0] - k[9] * x[3] * x[4], k[10] * x[0] - k[11] * x[5],
          k[12] * x[5] - k[13] * x[6]};
}

}  // namespace

TEST_CASE("nominal rate constants") {
  const Vec k = nominal_parameters();
  CHECK(k == Vec{2.0, 0.9, 2.5, 1.5, 0.6, 0.8, 1.0, 1.3, 0.3, 0.8, 0.7, 4.9, 23.0, 4.5});
}

TEST_CASE("Laub-Loomis at the all-ones state") {
  const Vec dx = laub_loomis_dynamics(Vec(7, 1.0), nominal_parameters());
  const Vec expect{1.1, 1.0, -0.2, -0.3, -0.5, -4.2, 18.5};
  for (int i = 0; i < 7; ++i) CHECK(dx[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("Laub-Loomis agrees with the reference equations at random points") {
  Rng rng(11);
  for (int t = 0; t < 100; ++t) {
    Vec x(7), k(14);
    for (double& v : x) v = rng.uniform(0, 5);
    for (double& v : k) v = rng.uniform(0, 25);
    const Vec a = laub_loomis_dynamics(x, k);
    const Vec b = ll_reference(x, k);
    for (int i = 0; i < 7; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
}

TEST_CASE("Laub-Loomis units follow the table") {
  const ParametricModel m = laub_loomis();
  REQUIRE(m.param_units.size() == 14);
  for (std::size_t i = 0; i < 14; ++i) {
    const bool per_conc = i == 5 || i == 6 || i == 9 || i == 13;
    CHECK(m.param_units[i] == (per_conc ? "1/(min*uM)" : "1/min"));
  }
}

TEST_CASE("varying k1 gives an 8-dimensional plant") {
  const PlantDefinition p =
      augment_with_parameters(laub_loomis(), {0}, {Interval::closed(1.8, 2.2)}, {Interval::closed(-0.1, 0.1)});
  CHECK(p.dim == 8);
  CHECK(p.names.back() == "k1");
  CHECK(p.default_state[7] == 2.0);
  Vec y = p.default_state;
  y[7] = 2.1;
  const Vec k = p.parameters(y);
  CHECK(k[0] == 2.1);
  CHECK(k[1] == 0.9);
  Vec dx(8);
  p.dynamics(y, Vec{0.05}, dx);
  CHECK(dx[7] == 0.05);
  CHECK(dx[0] == doctest::Approx(2.1 * y[6] - 0.9 * y[0] * y[1]));
}

TEST_CASE("parameter at the box edge with outward input exits the invariant") {
  const PlantDefinition p =
      augment_with_parameters(laub_loomis(), {0}, {Interval::closed(1.8, 2.2)}, {Interval::closed(-0.1, 0.1)});
  const HybridAutomaton a = plant_automaton(p);
  HybridState s = initial_state(a);
  s.x[7] = 2.2;
  CHECK(continuous_step(a, s, Vec{0.1}, 0.05).invariant_exit);
  CHECK_FALSE(continuous_step(a, s, Vec{-0.1}, 0.05).invariant_exit);
}

TEST_CASE("augmentation rejects bad parameter lists") {
  const ParametricModel m = laub_loomis();
  CHECK_THROWS_AS(augment_with_parameters(m, {0, 0}, {Interval::closed(1, 3), Interval::closed(1, 3)},
                                          {Interval::closed(-1, 1), Interval::closed(-1, 1)}),
                  ConfigError);
  CHECK_THROWS_AS(augment_with_parameters(m, {14}, {Interval::closed(1, 3)}, {Interval::closed(-1, 1)}), ConfigError);
  CHECK_THROWS_AS(augment_with_parameters(m, {0}, {Interval::closed(2.5, 3)}, {Interval::closed(-1, 1)}), ConfigError);
}

TEST_CASE("default state lies on the nominal attractor") {
  const ParametricModel m = laub_loomis();
  Vec x = m.default_state;
  CHECK(box_contains(m.state_box, x));
  const PlantDefinition p = augment_with_parameters(m, {}, {}, {});
  const HybridAutomaton a = plant_automaton(p);
  HybridState s = initial_state(a);
  double lo = 1e9, hi = -1e9;
  for (int i = 0; i < 2000; ++i) {
    s = continuous_step(a, s, {}, 0.05).state;
    lo = std::min(lo, s.x[0]);
    hi = std::max(hi, s.x[0]);
  }
  CHECK(hi - lo > 1.0);
}

TEST_CASE("catalog names resolve") {
  for (const std::string& n : plant_catalog()) CHECK(plant_by_name(n).name == n);
  CHECK_THROWS_AS(plant_by_name("nope"), ConfigError);
}
