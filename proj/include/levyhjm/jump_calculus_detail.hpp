#pragma once

#include <cmath>
#include <vector>

#include "levyhjm/jump_calculus.hpp"

namespace levyhjm::detail {

/// s -> int h(g(s, y)) [e^psi(s, y)] nu(dy) for one Psi12 part of g.
class RateEvaluator {
 public:
  enum class Transform { Identity, Abs, Square, MinSquareAbs };

  /// `part`: -1 for all of g, 0 for g 1{|g| <= 1}, 1 for g 1{|g| > 1}.
  RateEvaluator(const GeneralIntegrand& g, const LevyMeasure& nu, Compensator comp, Transform tf, int part);

  bool history_free() const { return history_free_; }
  bool time_homogeneous() const { return time_homogeneous_; }

  /// Transformed, weighted integrand.
  double integrand(double s, double y, const PathHistory& h) const;
  /// Part of g at a jump, without transform or weight.
  double integrand_raw(double s, double y, const PathHistory& h) const;
  /// Rate at time s; against the simulated measure unless `full_measure`.
  double rate(double s, const PathHistory& h, bool full_measure = false) const;
  double rate_uncached(double s, const PathHistory& h, bool full_measure) const;
  /// int_a^b rate(s) ds for a history constant on (a, b).
  double over(double a, double b, const PathHistory& h) const;

 private:
  const GeneralIntegrand& g_;
  const LevyMeasure& nu_;
  Compensator comp_;
  Transform transform_;
  int part_;
  std::vector<double> breaks_;
  bool history_free_ = false;
  bool time_homogeneous_ = false;
  double constant_rate_ = 0.0;  // simulated-measure rate when history-free and time-homogeneous
};

/// Cumulative int_0^{t_k} rate ds at grid times, split at jump times so
/// that the strict-past history is constant on every piece.
std::vector<double> cumulative_on_grid(const RateEvaluator& ev, const LevyPath& path);

int parts_of(IntegrandClass c);
void require_compatible(const GeneralIntegrand& g, Compensator comp);

}  // namespace levyhjm::detail
