#pragma once

#include <initializer_list>
#include <limits>
#include <string>
#include <vector>

namespace levyhjm {

/// Interval of jump sizes with explicit endpoint closedness. A degenerate
/// closed interval [y, y] is an atom.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_closed = false;
  bool hi_closed = false;

  bool contains(double y) const {
    return (y > lo || (lo_closed && y == lo)) && (y < hi || (hi_closed && y == hi));
  }
  bool empty() const { return lo > hi || (lo == hi && !(lo_closed && hi_closed)); }
};

/// Finite union of intervals and points in R, used as the set argument of
/// jump-measure evaluations. Most operations require the set to be
/// separated from zero.
class JumpSet {
 public:
  JumpSet() = default;
  JumpSet(std::initializer_list<Interval> parts);
  explicit JumpSet(std::vector<Interval> parts);

  static JumpSet point(double y);
  static JumpSet open(double lo, double hi);
  static JumpSet closed(double lo, double hi);
  /// (lo, +inf)
  static JumpSet above(double lo);
  /// (-inf, hi)
  static JumpSet below(double hi);
  /// {y : |y| >= r}
  static JumpSet abs_at_least(double r);
  /// {y : |y| > r}
  static JumpSet abs_above(double r);

  JumpSet united(const JumpSet& other) const;
  JumpSet intersected(const JumpSet& other) const;

  bool contains(double y) const;
  bool empty() const;
  /// 0 is not in the closure of the set.
  bool separated_from_zero() const;
  /// Throws DomainError naming `what` when the set touches zero.
  void require_separated(const char* what) const;

  const std::vector<Interval>& parts() const { return parts_; }
  /// All finite endpoints, for splitting quadrature.
  std::vector<double> endpoints() const;
  std::string describe() const;

 private:
  std::vector<Interval> parts_;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace levyhjm
