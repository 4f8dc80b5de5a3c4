#include "oscf/guided_explorer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace oscf {

void ExplorerConfig::validate(std::size_t dim) const {
  if (points < 1) throw ConfigError("points must be at least 1");
  if (!(h > 0.0)) throw ConfigError("h must be positive");
  if (n_inputs < 1) throw ConfigError("n_inputs must be at least 1");
  if (input_mode == InputMode::Grid && grid_resolution < 1) throw ConfigError("grid_resolution must be at least 1");
  if (distance.empty()) throw ConfigError("at least one distance term is required");
  for (const DistanceTerm& t : distance) {
    if (t.index >= dim) throw ConfigError("distance term references coordinate " + std::to_string(t.index));
    if (!(t.weight >= 0.0)) throw ConfigError("distance weights must be nonnegative");
  }
  if (bounds.size() != dim) throw ConfigError("bounds must cover every coordinate");
  for (const Interval& b : bounds) {
    if (!b.bounded() || b.empty()) throw ConfigError("bounds must be finite and nonempty");
  }
  if (walk_steps < 1) throw ConfigError("walk_steps must be at least 1");
}

double ExplorerConfig::effective_penalty() const {
  if (penalty >= 0.0) return penalty;
  double s = 0.0;
  for (const DistanceTerm& t : distance) {
    const double span = t.weight * (bounds[t.index].hi - bounds[t.index].lo);
    s += span * span;
  }
  return std::sqrt(s);
}

double hybrid_distance(const HybridState& a, const HybridState& b, const ExplorerConfig& cfg) {
  double s = 0.0;
  for (const DistanceTerm& t : cfg.distance) {
    const double d = t.weight * a.x[t.index] - t.weight * b.x[t.index];
    s += d * d;
  }
  return std::sqrt(s) + (a.location == b.location ? 0.0 : cfg.effective_penalty());
}

ExplorationTree::ExplorationTree(const HybridAutomaton& a, const ExplorerConfig& cfg, HybridState root)
    : a_(a), cfg_(cfg), stride_(cfg.distance.size()), penalty_(cfg.effective_penalty()) {
  TreeNode n;
  n.state = std::move(root);
  nodes_.push_back(std::move(n));
  cache(0);
}

void ExplorationTree::cache(std::size_t i) {
  const TreeNode& n = nodes_[i];
  for (const DistanceTerm& t : cfg_.distance) coords_.push_back(t.weight * n.state.x[t.index]);
  bool urgent = false;
  for (std::size_t id : enabled_transitions(a_, n.state)) {
    if (a_.transitions[id].urgency == Urgency::Eager) urgent = true;
  }
  nodes_[i].urgent = urgent;
  locs_.push_back(urgent ? -1 : static_cast<std::int32_t>(n.state.location));
}

std::size_t ExplorationTree::append(HybridState s, std::size_t parent, Action action) {
  TreeNode n;
  n.state = std::move(s);
  n.parent = parent;
  n.action = std::move(action);
  nodes_.push_back(std::move(n));
  cache(nodes_.size() - 1);
  return nodes_.size() - 1;
}

void ExplorationTree::mark_exhausted(std::size_t i) {
  nodes_[i].exhausted = true;
  locs_[i] = -1;
}

std::size_t ExplorationTree::nearest(const HybridState& goal) const {
  thread_local Vec g;
  g.resize(stride_);
  for (std::size_t k = 0; k < stride_; ++k) g[k] = cfg_.distance[k].weight * goal.x[cfg_.distance[k].index];
  const std::int32_t q = static_cast<std::int32_t>(goal.location);
  // Squared distances per group; the penalty is added once at the end.
  std::size_t best[2] = {0, 0};
  double best_s[2] = {kInf, kInf};
  bool found[2] = {false, false};
  const double* c = coords_.data();
  for (std::size_t i = 0; i < nodes_.size(); ++i, c += stride_) {
    if (locs_[i] < 0) continue;
    double s = 0.0;
    for (std::size_t k = 0; k < stride_; ++k) {
      const double d = c[k] - g[k];
      s += d * d;
    }
    const int grp = locs_[i] == q ? 0 : 1;
    if (!found[grp] || s < best_s[grp]) {
      best[grp] = i;
      best_s[grp] = s;
      found[grp] = true;
    }
  }
  if (!found[1]) return best[0];
  if (!found[0]) return best[1];
  const double same = std::sqrt(best_s[0]);
  const double other = std::sqrt(best_s[1]) + penalty_;
  if (same < other) return best[0];
  if (other < same) return best[1];
  return std::min(best[0], best[1]);
}

std::vector<std::size_t> ExplorationTree::path(std::size_t leaf) const {
  std::vector<std::size_t> out;
  for (std::optional<std::size_t> i = leaf; i; i = nodes_[*i].parent) out.push_back(*i);
  std::reverse(out.begin(), out.end());
  return out;
}

Trace ExplorationTree::trace(std::size_t leaf) const {
  Trace t;
  for (std::size_t i : path(leaf)) {
    const TreeNode& n = nodes_[i];
    TraceEvent ev;
    if (n.action.kind == Action::Kind::Input) {
      ev.kind = TraceEvent::Kind::Flow;
      ev.u = n.action.u;
      ev.h = cfg_.h;
    } else if (n.action.kind == Action::Kind::Jump) {
      ev.kind = TraceEvent::Kind::Jump;
      ev.transition = n.action.transition;
    }
    t.push_back({n.state, std::move(ev)});
  }
  return t;
}

std::size_t nearest_neighbor(const ExplorationTree& tree, const HybridState& goal, const ExplorerConfig&) {
  return tree.nearest(goal);
}

std::optional<HybridState> saturating_step(const HybridAutomaton& a, const HybridState& s, const Vec& u, double h,
                                           Vec& applied) {
  StepOutcome o = continuous_step(a, s, u, h);
  if (!o.invariant_exit) {
    applied = u;
    return std::move(o.state);
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] == 0.0) continue;
    Vec v = u;
    v[i] = 0.0;
    o = continuous_step(a, s, v, h);
    if (!o.invariant_exit) {
      applied = std::move(v);
      return std::move(o.state);
    }
  }
  Vec zero(u.size(), 0.0);
  o = continuous_step(a, s, zero, h);
  if (!o.invariant_exit) {
    applied = std::move(zero);
    return std::move(o.state);
  }
  return std::nullopt;
}

namespace {

std::vector<Vec> candidate_inputs(const Box& box, const ExplorerConfig& cfg, Rng& rng) {
  std::vector<Vec> out;
  if (box.empty()) {
    out.emplace_back();
    return out;
  }
  if (cfg.input_mode == ExplorerConfig::InputMode::Uniform) {
    for (std::size_t k = 0; k < cfg.n_inputs; ++k) {
      Vec u(box.size());
      for (std::size_t i = 0; i < box.size(); ++i) u[i] = rng.uniform(box[i].lo, box[i].hi);
      out.push_back(std::move(u));
    }
    return out;
  }
  // Full tensor grid, first component varying slowest.
  const std::size_t r = cfg.grid_resolution;
  std::size_t total = 1;
  for (std::size_t i = 0; i < box.size(); ++i) total *= r;
  for (std::size_t k = 0; k < total; ++k) {
    Vec u(box.size());
    std::size_t rem = k;
    for (std::size_t i = box.size(); i-- > 0;) {
      const std::size_t j = rem % r;
      rem /= r;
      u[i] = r == 1 ? 0.5 * (box[i].lo + box[i].hi)
                    : box[i].lo + (box[i].hi - box[i].lo) * static_cast<double>(j) / static_cast<double>(r - 1);
    }
    out.push_back(std::move(u));
  }
  return out;
}

void settle_in_tree(ExplorationTree& tree, const HybridAutomaton& a, std::size_t& last) {
  for (int k = 0; k < 64; ++k) {
    const HybridState& s = tree.node(last).state;
    std::optional<std::size_t> fire;
    for (std::size_t id : enabled_transitions(a, s)) {
      if (a.transitions[id].urgency == Urgency::Eager) {
        fire = id;
        break;
      }
    }
    if (!fire) return;
    HybridState n = take_transition(a, s, *fire);
    Action act;
    act.kind = Action::Kind::Jump;
    act.transition = *fire;
    last = tree.append(std::move(n), last, std::move(act));
  }
  throw Error("more than 64 eager jumps at one instant");
}

}  // namespace

std::optional<std::size_t> extend(ExplorationTree& tree, std::size_t node, const HybridState& goal,
                                  const HybridAutomaton& a, const ExplorerConfig& cfg, Rng& rng) {
  const HybridState base = tree.node(node).state;
  const Location& loc = a.locations[base.location];
  std::optional<HybridState> best;
  Action best_action;
  double best_d = kInf;
  for (Vec& u : candidate_inputs(loc.input_box, cfg, rng)) {
    Vec applied;
    std::optional<HybridState> next = saturating_step(a, base, u, cfg.h, applied);
    if (!next) continue;
    const double d = hybrid_distance(*next, goal, cfg);
    if (!best || d < best_d) {
      best = std::move(next);
      best_d = d;
      best_action.kind = Action::Kind::Input;
      best_action.u = std::move(applied);
    }
  }
  for (std::size_t id : enabled_transitions(a, base)) {
    if (a.transitions[id].urgency != Urgency::Controllable) continue;
    HybridState next;
    try {
      next = take_transition(a, base, id);
    } catch (const ResetContractError&) {
      continue;
    }
    const double d = hybrid_distance(next, goal, cfg);
    if (!best || d < best_d) {
      best = std::move(next);
      best_d = d;
      best_action = Action{Action::Kind::Jump, {}, id};
    }
  }
  if (!best) {
    tree.mark_exhausted(node);
    return std::nullopt;
  }
  std::size_t last = tree.append(std::move(*best), node, std::move(best_action));
  settle_in_tree(tree, a, last);
  return last;
}

GoalSampler::GoalSampler(const AbstractTransitionSystem& d, const Matrix& p, const HybridAutomaton& a, Box bounds,
                         std::size_t walk_steps)
    : d_(d), p_(p), a_(a), bounds_(std::move(bounds)), walk_steps_(walk_steps), current_(d.initial) {}

HybridState GoalSampler::sample(Rng& rng) {
  for (std::size_t k = 0; k < walk_steps_; ++k) current_ = walk_step(p_, current_, rng);
  const AbstractState& s = d_.states[current_];
  HybridState g;
  g.location = s.location;
  g.x.resize(a_.dim);
  auto uniform_box = [&]() {
    for (std::size_t i = 0; i < a_.dim; ++i) g.x[i] = rng.uniform(bounds_[i].lo, bounds_[i].hi);
  };
  if (s.region.interval_form) {
    bool ok = true;
    for (std::size_t i = 0; i < a_.dim && ok; ++i) {
      const IntervalSet* axis = s.region.axis(i);
      if (axis) {
        ok = axis->sample(bounds_[i], rng, g.x[i]);
      } else {
        g.x[i] = rng.uniform(bounds_[i].lo, bounds_[i].hi);
      }
    }
    if (!ok) {
      ++fallbacks_;
      uniform_box();
    }
    return g;
  }
  for (int k = 0; k < 1000; ++k) {
    uniform_box();
    if (s.region.contains(g.x)) return g;
  }
  ++fallbacks_;
  uniform_box();
  return g;
}

Coverage coverage_estimate(const ExplorationTree& tree, const AbstractTransitionSystem& d,
                           const PredicateMap& lambda) {
  Coverage c;
  c.counts.assign(d.states.size(), 0);
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const HybridState& s = tree.node(i).state;
    if (auto k = d.locate(lambda, s.location, s.x)) ++c.counts[*k];
  }
  std::size_t visited = 0;
  for (std::size_t v : c.counts) visited += v > 0 ? 1 : 0;
  c.fraction = d.states.empty() ? 0.0 : static_cast<double>(visited) / static_cast<double>(d.states.size());
  return c;
}

FalsificationReport falsify(const PropertyAutomaton& pa, const AbstractTransitionSystem& d, const Matrix& p,
                            const PredicateMap& lambda, const ExplorerConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const HybridAutomaton& a = pa.automaton;
  const PropertyLayout& L = pa.layout;
  cfg.validate(a.dim);
  if (p.size() != d.states.size()) throw DimensionError("matrix size differs from the abstract state count");

  FalsificationReport rep;
  rep.seed = cfg.seed;
  Rng rng(cfg.seed);
  ExplorationTree tree(a, cfg, initial_state(a));
  {
    std::size_t last = 0;
    settle_in_tree(tree, a, last);
  }
  GoalSampler goals(d, p, a, cfg.bounds, cfg.walk_steps);
  rep.goal_counts.assign(d.states.size(), 0);

  std::optional<std::size_t> falsified_leaf;
  const std::size_t max_iterations = 4 * cfg.points + 100;
  std::size_t it = 0;
  for (; it < max_iterations && tree.size() < cfg.points && !falsified_leaf; ++it) {
    const HybridState goal = goals.sample(rng);
    ++rep.goal_counts[goals.position()];
    if (cfg.log_goals) rep.goal_log.push_back({it, goals.position(), goal.x});
    const std::size_t near = tree.nearest(goal);
    const std::size_t before = tree.size();
    std::optional<std::size_t> leaf = extend(tree, near, goal, a, cfg, rng);
    if (!leaf) {
      ++rep.exhausted;
      continue;
    }
    for (std::size_t i = before; i < tree.size(); ++i) {
      const TreeNode& n = tree.node(i);
      if (n.action.kind == Action::Kind::Jump && (n.action.transition == L.osc_init || n.action.transition == L.std_init)) {
        const Verdict v = classify_trace(tree.trace(i), L);
        if (v.kind == Verdict::Kind::Falsified) {
          falsified_leaf = i;
          break;
        }
      }
    }
  }
  rep.iterations = it;

  std::size_t leaf = 0;
  if (falsified_leaf) {
    leaf = *falsified_leaf;
  } else {
    for (std::size_t i = 1; i < tree.size(); ++i) {
      if (tree.node(i).state.steps > tree.node(leaf).state.steps) leaf = i;
    }
  }
  rep.witness_trace = tree.trace(leaf);
  rep.verdict = classify_trace(rep.witness_trace, L);
  for (std::size_t i : tree.path(leaf)) {
    if (tree.node(i).action.kind != Action::Kind::Root) rep.witness.push_back(tree.node(i).action);
  }
  rep.tree_size = tree.size();
  rep.coverage = coverage_estimate(tree, d, lambda);
  rep.goal_fallbacks = goals.fallbacks();
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

Trace replay_witness(const HybridAutomaton& a, const std::vector<Action>& witness, double h) {
  Trace t;
  t.push_back({initial_state(a), TraceEvent{}});
  settle_eager(a, t);
  for (const Action& act : witness) {
    if (act.kind == Action::Kind::Input) {
      StepOutcome o = continuous_step(a, t.back().state, act.u, h);
      if (o.invariant_exit) throw SimulationError("witness step leaves the invariant", t);
      TraceEvent ev;
      ev.kind = TraceEvent::Kind::Flow;
      ev.u = act.u;
      ev.h = h;
      t.push_back({std::move(o.state), std::move(ev)});
      settle_eager(a, t);
    } else if (act.kind == Action::Kind::Jump && a.transitions[act.transition].urgency == Urgency::Controllable) {
      TraceEvent ev;
      ev.kind = TraceEvent::Kind::Jump;
      ev.transition = act.transition;
      t.push_back({take_transition(a, t.back().state, act.transition), ev});
      settle_eager(a, t);
    }
  }
  return t;
}

}  // namespace oscf
