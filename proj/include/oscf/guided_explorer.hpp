#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oscf/abstraction.hpp"
#include "oscf/hybrid_core.hpp"
#include "oscf/property_library.hpp"
#include "oscf/rng.hpp"

namespace oscf {

struct DistanceTerm {
  std::size_t index = 0;
  double weight = 1.0;
};

struct ExplorerConfig {
  enum class InputMode { Uniform, Grid };

  std::size_t points = 30000;  // tree nodes, including jump nodes
  double h = 0.05;
  InputMode input_mode = InputMode::Uniform;
  std::size_t n_inputs = 5;
  std::size_t grid_resolution = 3;  // grid values per input component
  // d = sqrt(sum (w_i * (a_i - b_i))^2) + penalty when locations differ.
  std::vector<DistanceTerm> distance;
  double penalty = -1.0;  // negative: diameter of the bounds over the distance terms
  std::uint64_t seed = 0;
  std::size_t walk_steps = 1;
  Box bounds;  // goal sampling box over all coordinates
  bool log_goals = false;

  void validate(std::size_t dim) const;
  double effective_penalty() const;
};

struct Action {
  enum class Kind { Root, Input, Jump };
  Kind kind = Kind::Root;
  Vec u;
  std::size_t transition = 0;
};

struct TreeNode {
  HybridState state;
  std::optional<std::size_t> parent;
  Action action;
  bool exhausted = false;
  bool urgent = false;  // an eager transition is enabled; never extended by flow
};

class ExplorationTree {
 public:
  ExplorationTree(const HybridAutomaton& a, const ExplorerConfig& cfg, HybridState root);

  std::size_t size() const { return nodes_.size(); }
  const TreeNode& node(std::size_t i) const { return nodes_[i]; }
  std::size_t append(HybridState s, std::size_t parent, Action action);
  void mark_exhausted(std::size_t i);

  std::size_t nearest(const HybridState& goal) const;
  std::vector<std::size_t> path(std::size_t leaf) const;
  Trace trace(std::size_t leaf) const;

 private:
  const HybridAutomaton& a_;
  const ExplorerConfig& cfg_;
  std::vector<TreeNode> nodes_;
  std::vector<double> coords_;  // weighted distance coordinates, flat
  std::vector<std::int32_t> locs_;  // -1 once urgent or exhausted
  std::size_t stride_ = 0;
  double penalty_ = 0.0;

  void cache(std::size_t i);
};

double hybrid_distance(const HybridState& a, const HybridState& b, const ExplorerConfig& cfg);

// Linear scan; ties go to the lowest index. Exhausted and urgent nodes are
// skipped unless no other node exists.
std::size_t nearest_neighbor(const ExplorationTree& tree, const HybridState& goal, const ExplorerConfig& cfg);

// Returns the index of the last node appended, or nullopt when the node was
// marked exhausted.
std::optional<std::size_t> extend(ExplorationTree& tree, std::size_t node, const HybridState& goal,
                                  const HybridAutomaton& a, const ExplorerConfig& cfg, Rng& rng);

// Continuous step that zeroes offending input components when the step
// leaves the invariant (each component alone, then all). Returns nullopt when
// no variant stays inside; `applied` receives the input actually used.
std::optional<HybridState> saturating_step(const HybridAutomaton& a, const HybridState& s, const Vec& u, double h,
                                           Vec& applied);

// Abstraction-biased goal sampler; keeps the walk position across calls.
class GoalSampler {
 public:
  GoalSampler(const AbstractTransitionSystem& d, const Matrix& p, const HybridAutomaton& a, Box bounds,
              std::size_t walk_steps);

  HybridState sample(Rng& rng);
  std::size_t position() const { return current_; }
  void pin(std::size_t s) { current_ = s; }
  std::size_t fallbacks() const { return fallbacks_; }

 private:
  const AbstractTransitionSystem& d_;
  const Matrix& p_;
  const HybridAutomaton& a_;
  Box bounds_;
  std::size_t walk_steps_;
  std::size_t current_;
  std::size_t fallbacks_ = 0;
};

struct GoalLogEntry {
  std::size_t iteration = 0;
  std::size_t state = 0;
  Vec x;
};

struct Coverage {
  std::vector<std::size_t> counts;
  double fraction = 0.0;
};

Coverage coverage_estimate(const ExplorationTree& tree, const AbstractTransitionSystem& d, const PredicateMap& lambda);

struct FalsificationReport {
  Verdict verdict;
  std::vector<Action> witness;  // actions along the root-to-leaf path, root excluded
  Trace witness_trace;
  std::size_t tree_size = 0;
  std::size_t iterations = 0;
  std::size_t exhausted = 0;
  Coverage coverage;
  std::vector<std::size_t> goal_counts;
  std::size_t goal_fallbacks = 0;
  std::vector<GoalLogEntry> goal_log;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
};

FalsificationReport falsify(const PropertyAutomaton& pa, const AbstractTransitionSystem& d, const Matrix& p,
                            const PredicateMap& lambda, const ExplorerConfig& cfg);

// Replays the witness inputs from the initial state with eager jumps.
Trace replay_witness(const HybridAutomaton& a, const std::vector<Action>& witness, double h);

}  // namespace oscf
