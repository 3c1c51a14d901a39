#include "levyhjm/jump_set.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "levyhjm/errors.hpp"

namespace levyhjm {

JumpSet::JumpSet(std::initializer_list<Interval> parts) : JumpSet(std::vector<Interval>(parts)) {}

JumpSet::JumpSet(std::vector<Interval> parts) {
  for (const auto& p : parts) {
    if (std::isnan(p.lo) || std::isnan(p.hi)) throw DomainError("jump set has a NaN endpoint");
    if (!p.empty()) parts_.push_back(p);
  }
}

JumpSet JumpSet::point(double y) { return JumpSet{{y, y, true, true}}; }
JumpSet JumpSet::open(double lo, double hi) { return JumpSet{{lo, hi, false, false}}; }
JumpSet JumpSet::closed(double lo, double hi) { return JumpSet{{lo, hi, true, true}}; }
JumpSet JumpSet::above(double lo) { return JumpSet{{lo, kInf, false, false}}; }
JumpSet JumpSet::below(double hi) { return JumpSet{{-kInf, hi, false, false}}; }
JumpSet JumpSet::abs_at_least(double r) {
  return JumpSet{{-kInf, -r, false, true}, {r, kInf, true, false}};
}
JumpSet JumpSet::abs_above(double r) {
  return JumpSet{{-kInf, -r, false, false}, {r, kInf, false, false}};
}

JumpSet JumpSet::united(const JumpSet& other) const {
  std::vector<Interval> all = parts_;
  all.insert(all.end(), other.parts_.begin(), other.parts_.end());
  return JumpSet(std::move(all));
}

JumpSet JumpSet::intersected(const JumpSet& other) const {
  std::vector<Interval> out;
  for (const auto& a : parts_) {
    for (const auto& b : other.parts_) {
      Interval c;
      if (a.lo > b.lo) {
        c.lo = a.lo;
        c.lo_closed = a.lo_closed;
      } else if (b.lo > a.lo) {
        c.lo = b.lo;
        c.lo_closed = b.lo_closed;
      } else {
        c.lo = a.lo;
        c.lo_closed = a.lo_closed && b.lo_closed;
      }
      if (a.hi < b.hi) {
        c.hi = a.hi;
        c.hi_closed = a.hi_closed;
      } else if (b.hi < a.hi) {
        c.hi = b.hi;
        c.hi_closed = b.hi_closed;
      } else {
        c.hi = a.hi;
        c.hi_closed = a.hi_closed && b.hi_closed;
      }
      if (!c.empty()) out.push_back(c);
    }
  }
  return JumpSet(std::move(out));
}

bool JumpSet::contains(double y) const {
  return std::any_of(parts_.begin(), parts_.end(), [y](const Interval& p) { return p.contains(y); });
}

bool JumpSet::empty() const { return parts_.empty(); }

bool JumpSet::separated_from_zero() const {
  return std::all_of(parts_.begin(), parts_.end(),
                     [](const Interval& p) { return p.lo > 0.0 || p.hi < 0.0; });
}

void JumpSet::require_separated(const char* what) const {
  if (!separated_from_zero()) {
    throw DomainError(std::string(what) + ": set " + describe() + " is not separated from zero");
  }
}

std::vector<double> JumpSet::endpoints() const {
  std::vector<double> out;
  for (const auto& p : parts_) {
    if (std::isfinite(p.lo)) out.push_back(p.lo);
    if (std::isfinite(p.hi)) out.push_back(p.hi);
  }
  return out;
}

std::string JumpSet::describe() const {
  if (parts_.empty()) return "{}";
  std::ostringstream os;
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    const auto& p = parts_[i];
    if (i) os << " u ";
    if (p.lo == p.hi) {
      os << "{" << p.lo << "}";
    } else {
      os << (p.lo_closed ? "[" : "(") << p.lo << ", " << p.hi << (p.hi_closed ? "]" : ")");
    }
  }
  return os.str();
}

}  // namespace levyhjm
