#include "oscf/interval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace oscf {

namespace {

bool lo_closed_eff(const Interval& i) { return i.lo_closed && std::isfinite(i.lo); }
bool hi_closed_eff(const Interval& i) { return i.hi_closed && std::isfinite(i.hi); }

Interval canonical(Interval i) {
  i.lo_closed = lo_closed_eff(i);
  i.hi_closed = hi_closed_eff(i);
  return i;
}

// True when a's lower end starts strictly before b's (closed before open).
bool starts_before(const Interval& a, const Interval& b) {
  if (a.lo != b.lo) return a.lo < b.lo;
  return a.lo_closed && !b.lo_closed;
}

// Can `next` (which does not start before `cur`) be merged into `cur`?
bool touches(const Interval& cur, const Interval& next) {
  if (next.lo < cur.hi) return true;
  if (next.lo > cur.hi) return false;
  return cur.hi_closed || next.lo_closed;
}

}  // namespace

bool Interval::empty() const {
  if (std::isnan(lo) || std::isnan(hi)) return true;
  if (lo > hi) return true;
  if (lo == hi) return !(lo_closed_eff(*this) && hi_closed_eff(*this));
  return false;
}

bool Interval::contains(double v) const {
  if (empty()) return false;
  const bool above = lo_closed_eff(*this) ? v >= lo : v > lo;
  const bool below = hi_closed_eff(*this) ? v <= hi : v < hi;
  return above && below;
}

std::string Interval::str() const {
  if (empty()) return "{}";
  std::ostringstream os;
  os << (lo_closed_eff(*this) ? '[' : '(') << lo << ", " << hi << (hi_closed_eff(*this) ? ']' : ')');
  return os.str();
}

Interval intersect(const Interval& a, const Interval& b) {
  Interval r;
  if (a.lo > b.lo) {
    r.lo = a.lo;
    r.lo_closed = a.lo_closed;
  } else if (b.lo > a.lo) {
    r.lo = b.lo;
    r.lo_closed = b.lo_closed;
  } else {
    r.lo = a.lo;
    r.lo_closed = a.lo_closed && b.lo_closed;
  }
  if (a.hi < b.hi) {
    r.hi = a.hi;
    r.hi_closed = a.hi_closed;
  } else if (b.hi < a.hi) {
    r.hi = b.hi;
    r.hi_closed = b.hi_closed;
  } else {
    r.hi = a.hi;
    r.hi_closed = a.hi_closed && b.hi_closed;
  }
  return canonical(r);
}

IntervalSet::IntervalSet(Interval i) {
  parts_.push_back(i);
  normalize();
}

IntervalSet::IntervalSet(std::vector<Interval> parts) : parts_(std::move(parts)) { normalize(); }

void IntervalSet::normalize() {
  std::vector<Interval> kept;
  for (const Interval& i : parts_) {
    if (!i.empty()) kept.push_back(canonical(i));
  }
  std::sort(kept.begin(), kept.end(), starts_before);
  std::vector<Interval> merged;
  for (const Interval& i : kept) {
    if (!merged.empty() && touches(merged.back(), i)) {
      Interval& cur = merged.back();
      if (i.hi > cur.hi) {
        cur.hi = i.hi;
        cur.hi_closed = i.hi_closed;
      } else if (i.hi == cur.hi) {
        cur.hi_closed = cur.hi_closed || i.hi_closed;
      }
    } else {
      merged.push_back(i);
    }
  }
  parts_ = std::move(merged);
}

bool IntervalSet::contains(double v) const {
  return std::any_of(parts_.begin(), parts_.end(), [v](const Interval& i) { return i.contains(v); });
}

IntervalSet IntervalSet::intersect(const IntervalSet& other) const {
  std::vector<Interval> out;
  for (const Interval& a : parts_) {
    for (const Interval& b : other.parts_) {
      Interval c = oscf::intersect(a, b);
      if (!c.empty()) out.push_back(c);
    }
  }
  return IntervalSet(std::move(out));
}

IntervalSet IntervalSet::unite(const IntervalSet& other) const {
  std::vector<Interval> out = parts_;
  out.insert(out.end(), other.parts_.begin(), other.parts_.end());
  return IntervalSet(std::move(out));
}

IntervalSet IntervalSet::complement() const {
  std::vector<Interval> out;
  double lo = -kInf;
  bool lo_closed = false;
  for (const Interval& i : parts_) {
    out.push_back(Interval{lo, i.lo, lo_closed, !i.lo_closed});
    lo = i.hi;
    lo_closed = !i.hi_closed;
  }
  out.push_back(Interval{lo, kInf, lo_closed, false});
  return IntervalSet(std::move(out));
}

IntervalSet IntervalSet::closure() const {
  std::vector<Interval> out;
  for (Interval i : parts_) {
    i.lo_closed = true;
    i.hi_closed = true;
    out.push_back(i);
  }
  return IntervalSet(std::move(out));
}

bool IntervalSet::sample(const Interval& clip, Rng& rng, double& out) const {
  std::vector<Interval> pieces;
  double total = 0.0;
  for (const Interval& i : parts_) {
    Interval c = oscf::intersect(i, clip);
    if (c.empty()) continue;
    pieces.push_back(c);
    if (c.bounded()) total += c.length();
  }
  if (pieces.empty()) return false;
  if (total > 0.0) {
    double r = rng.uniform() * total;
    for (const Interval& c : pieces) {
      if (!c.bounded() || c.length() <= 0.0) continue;
      if (r < c.length() || &c == &pieces.back()) {
        out = c.lo + std::min(r, c.length());
        // Keep the draw inside open ends.
        if (!c.contains(out)) out = 0.5 * (c.lo + c.hi);
        return true;
      }
      r -= c.length();
    }
    // Rounding pushed r past the last positive-length piece.
    for (auto it = pieces.rbegin(); it != pieces.rend(); ++it) {
      if (it->bounded() && it->length() > 0.0) {
        out = 0.5 * (it->lo + it->hi);
        return true;
      }
    }
  }
  const Interval& c = pieces[rng.index(pieces.size())];
  if (c.bounded()) {
    out = c.lo;
  } else if (std::isfinite(c.lo)) {
    out = c.lo;
  } else if (std::isfinite(c.hi)) {
    out = c.hi;
  } else {
    out = 0.0;
  }
  return c.contains(out);
}

bool IntervalSet::operator==(const IntervalSet& other) const {
  if (parts_.size() != other.parts_.size()) return false;
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    const Interval& a = parts_[i];
    const Interval& b = other.parts_[i];
    if (a.lo != b.lo || a.hi != b.hi || a.lo_closed != b.lo_closed || a.hi_closed != b.hi_closed) return false;
  }
  return true;
}

std::string IntervalSet::str() const {
  if (parts_.empty()) return "{}";
  std::string s;
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    if (i) s += " U ";
    s += parts_[i].str();
  }
  return s;
}

bool box_contains(const Box& box, const std::vector<double>& x) {
  if (box.size() != x.size()) return false;
  for (std::size_t i = 0; i < box.size(); ++i) {
    if (!box[i].contains(x[i])) return false;
  }
  return true;
}

}  // namespace oscf
