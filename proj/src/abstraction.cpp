#include "oscf/abstraction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace oscf {

namespace {

const std::vector<Predicate> kTop;

std::string state_base_name(const std::string& location) {
  std::string base = location.rfind("q_", 0) == 0 ? location.substr(2) : location;
  return "s_" + base;
}

bool constant_predicate(const Predicate& p) { return p.form != Predicate::Form::Named && p.terms.empty(); }

// Affine image of an interval set under v -> a*v + b.
IntervalSet affine_image(const IntervalSet& s, double a, double b) {
  if (a == 0.0) return s.empty() ? IntervalSet::none() : IntervalSet(Interval::point(b));
  std::vector<Interval> out;
  for (const Interval& i : s.parts()) {
    if (a > 0.0) {
      out.push_back(Interval{a * i.lo + b, a * i.hi + b, i.lo_closed, i.hi_closed});
    } else {
      out.push_back(Interval{a * i.hi + b, a * i.lo + b, i.hi_closed, i.lo_closed});
    }
  }
  return IntervalSet(std::move(out));
}

IntervalSet axis_or_all(const std::map<std::size_t, IntervalSet>& m, std::size_t i) {
  auto it = m.find(i);
  return it == m.end() ? IntervalSet::all() : it->second;
}

bool closures_meet(const CellRegion& a, const CellRegion& b) {
  std::set<std::size_t> coords;
  for (const auto& [i, s] : a.axes) coords.insert(i);
  for (const auto& [i, s] : b.axes) coords.insert(i);
  for (std::size_t i : coords) {
    const IntervalSet* sa = a.axis(i);
    const IntervalSet* sb = b.axis(i);
    const IntervalSet ca = sa ? sa->closure() : IntervalSet::all();
    const IntervalSet cb = sb ? sb->closure() : IntervalSet::all();
    if (ca.intersect(cb).empty()) return false;
  }
  return true;
}

// Uniform point of the box, with constrained axes drawn from the cell.
bool sample_in(const CellRegion& cell, const Box& bounds, Rng& rng, Vec& x) {
  x.resize(bounds.size());
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    const IntervalSet* s = cell.interval_form ? cell.axis(i) : nullptr;
    const IntervalSet set = s ? *s : IntervalSet(bounds[i]);
    if (!set.sample(bounds[i], rng, x[i])) return false;
  }
  return true;
}

}  // namespace

PredicateMap PredicateMap::trivial(const HybridAutomaton& a) {
  PredicateMap m;
  m.per_location.assign(a.locations.size(), {});
  return m;
}

const std::vector<Predicate>& PredicateMap::at(std::size_t q) const {
  return q < per_location.size() ? per_location[q] : kTop;
}

BoolVec alpha(const PredicateMap& lambda, std::size_t q, std::span<const double> x) {
  const std::vector<Predicate>& preds = lambda.at(q);
  BoolVec b(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) b[i] = preds[i].holds_at(x);
  return b;
}

std::string bits(const BoolVec& b) {
  std::string s;
  for (bool v : b) s += v ? '1' : '0';
  return s;
}

bool CellRegion::contains(std::span<const double> x) const {
  if (empty) return false;
  if (interval_form) {
    for (const auto& [i, s] : axes) {
      if (!s.contains(x[i])) return false;
    }
    return true;
  }
  for (const auto& [p, want] : literals) {
    if (p.holds_at(x) != want) return false;
  }
  return true;
}

const IntervalSet* CellRegion::axis(std::size_t coordinate) const {
  for (const auto& [i, s] : axes) {
    if (i == coordinate) return &s;
  }
  return nullptr;
}

std::string CellRegion::describe(const std::vector<std::string>& names) const {
  if (empty) return "empty";
  std::ostringstream os;
  if (interval_form) {
    if (axes.empty()) return "all";
    for (std::size_t k = 0; k < axes.size(); ++k) {
      const std::size_t i = axes[k].first;
      os << (k ? " x " : "") << (i < names.size() ? names[i] : "x[" + std::to_string(i) + "]") << " in "
         << axes[k].second.str();
    }
    return os.str();
  }
  for (std::size_t k = 0; k < literals.size(); ++k) {
    os << (k ? " and " : "") << (literals[k].second ? "" : "not ") << "(" << literals[k].first.describe(names) << ")";
  }
  return os.str();
}

CellRegion gamma(const PredicateMap& lambda, std::size_t q, const BoolVec& b) {
  const std::vector<Predicate>& preds = lambda.at(q);
  if (b.size() != preds.size()) throw DimensionError("boolean vector length differs from lambda(q)");
  CellRegion r;
  std::map<std::size_t, IntervalSet> axes;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const Predicate& p = preds[k];
    r.literals.push_back({p, b[k]});
    if (constant_predicate(p)) {
      if (p.holds_at({}) != b[k]) r.empty = true;
      continue;
    }
    auto sat = p.satisfying_set();
    if (!sat) {
      r.interval_form = false;
      continue;
    }
    const IntervalSet s = b[k] ? sat->second : sat->second.complement();
    auto it = axes.find(sat->first);
    if (it == axes.end()) {
      axes.emplace(sat->first, s);
    } else {
      it->second = it->second.intersect(s);
    }
  }
  if (r.interval_form) {
    r.axes.assign(axes.begin(), axes.end());
    for (const auto& [i, s] : r.axes) {
      if (s.empty()) r.empty = true;
    }
  }
  return r;
}

bool AbstractTransitionSystem::has_edge(std::size_t from, std::size_t to) const {
  return std::any_of(edges.begin(), edges.end(), [&](const AbstractEdge& e) { return e.from == from && e.to == to; });
}

std::vector<std::size_t> AbstractTransitionSystem::successors(std::size_t s) const {
  std::set<std::size_t> out;
  for (const AbstractEdge& e : edges) {
    if (e.from == s && e.to != s) out.insert(e.to);
  }
  return {out.begin(), out.end()};
}

std::size_t AbstractTransitionSystem::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i].name == name) return i;
  }
  throw ConfigError("unknown abstract state " + name);
}

std::optional<std::size_t> AbstractTransitionSystem::locate(const PredicateMap& lambda, std::size_t q,
                                                            std::span<const double> x) const {
  const BoolVec b = alpha(lambda, q, x);
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (!states[i].duplicate_of && states[i].location == q && states[i].b == b) return i;
  }
  return std::nullopt;
}

std::string AbstractTransitionSystem::edge_list() const {
  std::ostringstream os;
  os << "# states\n";
  for (std::size_t i = 0; i < states.size(); ++i) {
    os << i << " " << states[i].name << (i == initial ? " initial" : "") << "\n";
  }
  os << "# edges\n";
  for (const AbstractEdge& e : edges) {
    os << states[e.from].name << " -> " << states[e.to].name
       << (e.kind == AbstractEdge::Kind::Continuous ? " c" : " d") << "\n";
  }
  if (!unknown.empty()) {
    os << "# unknown\n";
    for (const AbstractEdge& e : unknown) os << states[e.from].name << " -> " << states[e.to].name << "\n";
  }
  return os.str();
}

namespace {

class Builder {
 public:
  Builder(const HybridAutomaton& a, const PredicateMap& lambda, const AbstractionOptions& opts)
      : a_(a), lambda_(lambda), opts_(opts), rng_(opts.seed) {}

  AbstractTransitionSystem run() {
    if (lambda_.per_location.size() > a_.locations.size()) {
      throw ConfigError("predicate map has more entries than the automaton has locations");
    }
    for (std::size_t q = 0; q < a_.locations.size(); ++q) {
      for (const Predicate& p : lambda_.at(q)) {
        for (std::size_t i : p.coordinates()) {
          if (i >= a_.dim) throw ConfigError("predicate references a coordinate outside the automaton");
        }
      }
      add_cells(q);
    }
    continuous_edges();
    discrete_edges();
    auto init = d_.locate(lambda_, a_.initial_location, a_.initial_x);
    if (!init) throw ConstructionError("initial state lies in no abstract cell");
    d_.initial = *init;
    return std::move(d_);
  }

 private:
  void add_cells(std::size_t q) {
    const std::size_t m = lambda_.at(q).size();
    if (m > 20) throw ConfigError("too many predicates for one location");
    std::set<std::vector<bool>> observed;
    bool sampled = false;
    const std::size_t count = std::size_t{1} << m;
    for (std::size_t v = count; v-- > 0;) {
      BoolVec b(m);
      for (std::size_t i = 0; i < m; ++i) b[i] = (v >> (m - 1 - i)) & 1u;
      CellRegion r = gamma(lambda_, q, b);
      if (r.empty) continue;
      if (!r.interval_form) {
        if (!sampled) {
          observed = sample_vectors(q);
          sampled = true;
        }
        if (!observed.count(b)) continue;
      }
      AbstractState s;
      s.location = q;
      s.b = b;
      s.name = state_base_name(a_.locations[q].name);
      if (m > 0) s.name += "[" + bits(b) + "]";
      s.region = std::move(r);
      d_.states.push_back(std::move(s));
    }
  }

  std::set<std::vector<bool>> sample_vectors(std::size_t q) {
    if (opts_.bounds.size() != a_.dim) throw ConfigError("sampling bounds are required for nonlinear predicates");
    std::set<std::vector<bool>> out;
    Vec x(a_.dim);
    out.insert(alpha(lambda_, q, a_.initial_x));
    for (std::size_t k = 0; k < opts_.budget; ++k) {
      for (std::size_t i = 0; i < a_.dim; ++i) x[i] = rng_.uniform(opts_.bounds[i].lo, opts_.bounds[i].hi);
      out.insert(alpha(lambda_, q, x));
    }
    return out;
  }

  void continuous_edges() {
    std::vector<AbstractEdge> es;
    for (std::size_t i = 0; i < d_.states.size(); ++i) {
      for (std::size_t j = 0; j < d_.states.size(); ++j) {
        if (i == j || d_.states[i].location != d_.states[j].location) continue;
        if (adjacent(d_.states[i].region, d_.states[j].region)) {
          es.push_back({i, j, AbstractEdge::Kind::Continuous, std::nullopt});
        }
      }
    }
    d_.edges.insert(d_.edges.end(), es.begin(), es.end());
  }

  bool adjacent(const CellRegion& a, const CellRegion& b) {
    if (a.interval_form && b.interval_form) return closures_meet(a, b);
    // Bisect segments between sampled members until the endpoints are
    // within a relative tolerance.
    if (opts_.bounds.size() != a_.dim) {
      d_.warnings.push_back("adjacency of nonlinear cells skipped: no sampling bounds");
      return false;
    }
    const std::size_t tries = std::min<std::size_t>(opts_.budget, 200);
    Vec pa, pb, mid(a_.dim);
    for (std::size_t t = 0; t < tries; ++t) {
      if (!find_member(a, pa) || !find_member(b, pb)) return false;
      bool lost = false;
      for (int it = 0; it < 60 && !lost; ++it) {
        for (std::size_t i = 0; i < a_.dim; ++i) mid[i] = 0.5 * (pa[i] + pb[i]);
        if (a.contains(mid)) {
          pa = mid;
        } else if (b.contains(mid)) {
          pb = mid;
        } else {
          lost = true;
        }
      }
      if (lost) continue;
      double gap = 0.0;
      for (std::size_t i = 0; i < a_.dim; ++i) {
        const double scale = std::max(1.0, opts_.bounds[i].hi - opts_.bounds[i].lo);
        gap = std::max(gap, std::fabs(pa[i] - pb[i]) / scale);
      }
      if (gap < 1e-12) return true;
    }
    return false;
  }

  bool find_member(const CellRegion& c, Vec& x) {
    for (std::size_t k = 0; k < opts_.budget; ++k) {
      if (sample_in(c, opts_.bounds, rng_, x) && c.contains(x)) return true;
    }
    return false;
  }

  void discrete_edges() {
    // A pair already related by flow is not repeated as a discrete edge.
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const AbstractEdge& c : d_.edges) seen.insert({c.from, c.to});
    std::vector<AbstractEdge> es;
    for (std::size_t e = 0; e < a_.transitions.size(); ++e) {
      const Transition& t = a_.transitions[e];
      for (std::size_t i = 0; i < d_.states.size(); ++i) {
        if (d_.states[i].location != t.source) continue;
        for (std::size_t j = 0; j < d_.states.size(); ++j) {
          if (d_.states[j].location != t.target) continue;
          const int r = decide(t, d_.states[i].region, d_.states[j]);
          if (r == 1) {
            if (seen.insert({i, j}).second) es.push_back({i, j, AbstractEdge::Kind::Discrete, e});
          } else if (r < 0) {
            d_.unknown.push_back({i, j, AbstractEdge::Kind::Discrete, e});
            d_.warnings.push_back("edge " + d_.states[i].name + " -> " + d_.states[j].name + " via " + t.name +
                                  " undecided within the sampling budget");
          }
        }
      }
    }
    std::sort(es.begin(), es.end(), [](const AbstractEdge& x, const AbstractEdge& y) {
      return std::tie(x.from, x.to) < std::tie(y.from, y.to);
    });
    d_.edges.insert(d_.edges.end(), es.begin(), es.end());
  }

  // 1: edge, 0: no edge, -1: unknown.
  int decide(const Transition& t, const CellRegion& src, const AbstractState& dst) {
    auto exact = decide_exact(t, src, dst);
    if (exact) return *exact ? 1 : 0;
    return decide_sampled(t, src, dst);
  }

  std::optional<bool> decide_exact(const Transition& t, const CellRegion& src, const AbstractState& dst) {
    if (!src.interval_form || !dst.region.interval_form) return std::nullopt;
    // Pre-jump coordinates that matter: those constrained by the source cell
    // and those the target cell reads through the reset.
    std::set<std::size_t> relevant;
    for (const auto& [i, s] : src.axes) relevant.insert(i);
    for (const auto& [j, s] : dst.region.axes) {
      const Expression* ex = t.reset.find(j);
      if (!ex) {
        relevant.insert(j);
      } else if (ex->kind == Expression::Kind::Copy) {
        relevant.insert(ex->source);
      } else if (ex->kind == Expression::Kind::Affine) {
        if (ex->terms.size() > 1) return std::nullopt;
        for (const AffineTerm& term : ex->terms) relevant.insert(term.index);
      } else if (ex->kind == Expression::Kind::Function) {
        return std::nullopt;
      }
    }
    std::map<std::size_t, IntervalSet> pre(src.axes.begin(), src.axes.end());
    for (const Predicate& g : t.guard.all) {
      if (constant_predicate(g)) {
        if (!g.holds_at({})) return false;
        continue;
      }
      auto sat = g.satisfying_set();
      if (sat) {
        auto it = pre.find(sat->first);
        if (it == pre.end()) {
          pre.emplace(sat->first, sat->second);
        } else {
          it->second = it->second.intersect(sat->second);
        }
        continue;
      }
      // Conjuncts over coordinates the abstraction does not observe are
      // assumed satisfiable.
      for (std::size_t i : g.coordinates()) {
        if (relevant.count(i)) return std::nullopt;
      }
    }
    for (const auto& [i, s] : pre) {
      if (s.empty()) return false;
    }
    // Each target axis checked separately: an over-approximation when two
    // target coordinates share a source.
    for (const auto& [j, cell] : dst.region.axes) {
      const Expression* ex = t.reset.find(j);
      IntervalSet image;
      if (!ex) {
        image = axis_or_all(pre, j);
      } else if (ex->kind == Expression::Kind::Constant) {
        image = IntervalSet(Interval::point(ex->value));
      } else if (ex->kind == Expression::Kind::Copy) {
        image = axis_or_all(pre, ex->source);
      } else if (ex->terms.empty()) {
        image = IntervalSet(Interval::point(ex->value));
      } else {
        const AffineTerm& term = ex->terms.front();
        image = affine_image(axis_or_all(pre, term.index), term.coeff, ex->value);
      }
      if (image.intersect(cell).empty()) return false;
    }
    return true;
  }

  int decide_sampled(const Transition& t, const CellRegion& src, const AbstractState& dst) {
    if (opts_.bounds.size() != a_.dim) return -1;
    Vec x;
    for (std::size_t k = 0; k < opts_.budget; ++k) {
      if (!sample_in(src, opts_.bounds, rng_, x) || !src.contains(x)) continue;
      bool ok = true;
      for (const Predicate& g : t.guard.all) {
        if (!g.holds_at(x)) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      const Vec y = t.reset.apply(x);
      if (alpha(lambda_, t.target, y) == dst.b) return 1;
    }
    return -1;
  }

  const HybridAutomaton& a_;
  const PredicateMap& lambda_;
  const AbstractionOptions& opts_;
  Rng rng_;
  AbstractTransitionSystem d_;
};

}  // namespace

AbstractTransitionSystem build_abstraction(const HybridAutomaton& a, const PredicateMap& lambda,
                                           const AbstractionOptions& opts) {
  return Builder(a, lambda, opts).run();
}

AbstractTransitionSystem eliminate_self_loops(const AbstractTransitionSystem& d) {
  std::vector<bool> looped(d.states.size(), false);
  for (const AbstractEdge& e : d.edges) {
    if (e.from == e.to) looped[e.from] = true;
  }
  AbstractTransitionSystem out;
  std::vector<std::size_t> remap(d.states.size());
  std::vector<std::size_t> copy_of(d.states.size(), 0);
  for (std::size_t i = 0; i < d.states.size(); ++i) {
    remap[i] = out.states.size();
    out.states.push_back(d.states[i]);
    if (looped[i]) {
      AbstractState dup = d.states[i];
      dup.duplicate_of = remap[i];
      dup.name += "^L";
      copy_of[i] = out.states.size();
      out.states.push_back(std::move(dup));
    }
  }
  for (const AbstractEdge& e : d.edges) {
    AbstractEdge n = e;
    n.from = remap[e.from];
    n.to = remap[e.to];
    if (e.from == e.to) {
      AbstractEdge there = n, back = n;
      there.to = copy_of[e.from];
      back.from = copy_of[e.from];
      out.edges.push_back(there);
      out.edges.push_back(back);
    } else {
      out.edges.push_back(n);
    }
  }
  for (const AbstractEdge& e : d.unknown) {
    AbstractEdge n = e;
    n.from = remap[e.from];
    n.to = remap[e.to];
    out.unknown.push_back(n);
  }
  out.initial = remap[d.initial];
  out.warnings = d.warnings;
  return out;
}

std::vector<double> target_distribution(const AbstractTransitionSystem& d, const std::vector<double>& weights) {
  std::vector<double> pi(d.states.size(), 1.0);
  if (!weights.empty()) {
    if (weights.size() == d.states.size()) {
      pi = weights;
    } else {
      std::size_t originals = 0;
      for (const AbstractState& s : d.states) originals += s.duplicate_of ? 0 : 1;
      if (weights.size() != originals) throw ConfigError("target distribution has the wrong length");
      std::size_t k = 0;
      for (std::size_t i = 0; i < d.states.size(); ++i) {
        pi[i] = d.states[i].duplicate_of ? pi[*d.states[i].duplicate_of] : weights[k++];
      }
    }
  }
  double total = 0.0;
  for (double v : pi) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("target probabilities must be positive");
    total += v;
  }
  for (double& v : pi) v /= total;
  return pi;
}

Matrix mh_matrix(const AbstractTransitionSystem& d, const std::vector<double>& pi) {
  const std::size_t n = d.states.size();
  if (pi.size() != n) throw DimensionError("target distribution length differs from the state count");
  std::vector<std::vector<std::size_t>> succ(n);
  for (std::size_t s = 0; s < n; ++s) {
    if (d.has_edge(s, s)) throw ConstructionError("state " + d.states[s].name + " has a self-loop; eliminate first");
    succ[s] = d.successors(s);
  }
  Matrix p(n, std::vector<double>(n, 0.0));
  for (std::size_t s = 0; s < n; ++s) {
    // A state without successors keeps all its mass.
    const double deg_s = static_cast<double>(succ[s].size());
    double off = 0.0;
    for (std::size_t t : succ[s]) {
      const double deg_t = static_cast<double>(succ[t].size());
      const double v = std::min(1.0 / deg_s, pi[t] / (deg_t * pi[s]));
      p[s][t] = v;
      off += v;
    }
    p[s][s] = 1.0 - off;
    if (p[s][s] < 0.0) p[s][s] = 0.0;
  }
  return p;
}

std::size_t walk_step(const Matrix& p, std::size_t current, Rng& rng) {
  const std::vector<double>& row = p.at(current);
  const double r = rng.uniform();
  double acc = 0.0;
  std::size_t last = current;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] <= 0.0) continue;
    acc += row[j];
    last = j;
    if (r < acc) return j;
  }
  return last;
}

std::vector<double> empirical_occupancy(const Matrix& p, std::size_t s0, std::size_t n_steps, Rng& rng) {
  if (n_steps < 1) throw ConfigError("n_steps must be at least 1");
  std::vector<double> freq(p.size(), 0.0);
  std::size_t s = s0;
  for (std::size_t k = 0; k < n_steps; ++k) {
    s = walk_step(p, s, rng);
    freq[s] += 1.0;
  }
  for (double& f : freq) f /= static_cast<double>(n_steps);
  return freq;
}

std::string matrix_csv(const AbstractTransitionSystem& d, const Matrix& p) {
  std::string out = "block,state";
  for (const AbstractState& s : d.states) out += "," + s.name;
  out += ",row_sum\n";
  char buf[64];
  for (const char* block : {"exact", "rounded"}) {
    const bool exact = std::string(block) == "exact";
    for (std::size_t i = 0; i < p.size(); ++i) {
      out += std::string(block) + "," + d.states[i].name;
      double sum = 0.0;
      for (double v : p[i]) {
        std::snprintf(buf, sizeof buf, exact ? "%.17g" : "%.2f", v);
        out += ",";
        out += buf;
        sum += v;
      }
      std::snprintf(buf, sizeof buf, "%.6f", sum);
      out += ",";
      out += buf;
      out += "\n";
    }
  }
  return out;
}

}  // namespace oscf
