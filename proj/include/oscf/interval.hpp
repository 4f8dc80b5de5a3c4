#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "oscf/rng.hpp"

namespace oscf {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Real interval with independently open or closed ends. Infinite ends are
// always treated as open.
struct Interval {
  double lo = -kInf;
  double hi = kInf;
  bool lo_closed = false;
  bool hi_closed = false;

  static Interval closed(double lo, double hi) { return {lo, hi, true, true}; }
  static Interval open(double lo, double hi) { return {lo, hi, false, false}; }
  static Interval point(double v) { return {v, v, true, true}; }
  static Interval all() { return {}; }

  bool empty() const;
  bool contains(double v) const;
  bool bounded() const { return lo > -kInf && hi < kInf; }
  double length() const { return empty() ? 0.0 : hi - lo; }
  std::string str() const;
};

Interval intersect(const Interval& a, const Interval& b);

// Finite union of disjoint intervals, kept sorted and merged.
class IntervalSet {
 public:
  IntervalSet() = default;
  explicit IntervalSet(Interval i);
  explicit IntervalSet(std::vector<Interval> parts);

  static IntervalSet all() { return IntervalSet(Interval::all()); }
  static IntervalSet none() { return IntervalSet(); }

  bool empty() const { return parts_.empty(); }
  bool contains(double v) const;
  const std::vector<Interval>& parts() const { return parts_; }

  IntervalSet intersect(const IntervalSet& other) const;
  IntervalSet unite(const IntervalSet& other) const;
  IntervalSet complement() const;
  // Closure of the set (all finite ends closed).
  IntervalSet closure() const;

  // Uniform draw from the set clipped to `clip`. Degenerate (zero-length)
  // pieces are chosen only when no piece has positive length. Returns false
  // when the clipped set is empty.
  bool sample(const Interval& clip, Rng& rng, double& out) const;

  bool operator==(const IntervalSet& other) const;
  std::string str() const;

 private:
  void normalize();
  std::vector<Interval> parts_;
};

// Axis-aligned box; one closed interval per coordinate.
using Box = std::vector<Interval>;

bool box_contains(const Box& box, const std::vector<double>& x);

}  // namespace oscf
