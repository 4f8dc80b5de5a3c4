#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oscf/hybrid_core.hpp"
#include "oscf/rng.hpp"

namespace oscf {

using BoolVec = std::vector<bool>;

// lambda(q): one predicate vector per location. An empty vector stands for
// the constant-true vector (T).
struct PredicateMap {
  std::vector<std::vector<Predicate>> per_location;

  static PredicateMap trivial(const HybridAutomaton& a);
  const std::vector<Predicate>& at(std::size_t q) const;
};

BoolVec alpha(const PredicateMap& lambda, std::size_t q, std::span<const double> x);

std::string bits(const BoolVec& b);

// gamma(q, b). When every predicate of lambda(q) is a level predicate over a
// single coordinate the region is a product of interval sets (axes);
// otherwise it is the literal conjunction.
struct CellRegion {
  bool empty = false;
  bool interval_form = true;
  std::vector<std::pair<std::size_t, IntervalSet>> axes;  // sorted by coordinate
  std::vector<std::pair<Predicate, bool>> literals;

  bool contains(std::span<const double> x) const;
  const IntervalSet* axis(std::size_t coordinate) const;
  std::string describe(const std::vector<std::string>& names = {}) const;
};

CellRegion gamma(const PredicateMap& lambda, std::size_t q, const BoolVec& b);

struct AbstractState {
  std::size_t location = 0;
  BoolVec b;
  std::optional<std::size_t> duplicate_of;  // set on self-loop copies
  std::string name;
  CellRegion region;
};

struct AbstractEdge {
  enum class Kind { Continuous, Discrete };
  std::size_t from = 0;
  std::size_t to = 0;
  Kind kind = Kind::Discrete;
  std::optional<std::size_t> transition;

  bool operator==(const AbstractEdge& o) const {
    return from == o.from && to == o.to && kind == o.kind && transition == o.transition;
  }
};

struct AbstractTransitionSystem {
  std::vector<AbstractState> states;
  std::vector<AbstractEdge> edges;  // continuous edges first, then discrete, each sorted
  std::size_t initial = 0;
  std::vector<AbstractEdge> unknown;  // undecided under the sampling budget
  std::vector<std::string> warnings;

  bool has_edge(std::size_t from, std::size_t to) const;
  // Distinct successors other than the state itself.
  std::vector<std::size_t> successors(std::size_t s) const;
  std::size_t out_degree(std::size_t s) const { return successors(s).size(); }
  std::size_t index_of(const std::string& name) const;
  // Original (non-duplicate) state containing x at location q.
  std::optional<std::size_t> locate(const PredicateMap& lambda, std::size_t q, std::span<const double> x) const;

  std::string edge_list() const;
};

struct AbstractionOptions {
  Box bounds;                 // sampling box over all coordinates (needed only for sampled checks)
  std::size_t budget = 10000;  // Monte Carlo samples per undecided check
  std::uint64_t seed = 0;
};

AbstractTransitionSystem build_abstraction(const HybridAutomaton& a, const PredicateMap& lambda,
                                           const AbstractionOptions& opts = {});

// Each state with a self edge gains a copy s^L placed right after it; the
// self edge becomes s -> s^L and s^L -> s.
AbstractTransitionSystem eliminate_self_loops(const AbstractTransitionSystem& d);

// Target probabilities, normalized. Duplicates default to their original.
std::vector<double> target_distribution(const AbstractTransitionSystem& d, const std::vector<double>& weights);

using Matrix = std::vector<std::vector<double>>;

// Metropolis-Hastings matrix with deg(s) = out-degree in the loop-free
// relation and the residual mass on the diagonal. States without successors
// get a unit diagonal.
Matrix mh_matrix(const AbstractTransitionSystem& d, const std::vector<double>& pi);

std::size_t walk_step(const Matrix& p, std::size_t current, Rng& rng);

std::vector<double> empirical_occupancy(const Matrix& p, std::size_t s0, std::size_t n_steps, Rng& rng);

// CSV with a full-precision block and a 2-decimal block.
std::string matrix_csv(const AbstractTransitionSystem& d, const Matrix& p);

}  // namespace oscf
