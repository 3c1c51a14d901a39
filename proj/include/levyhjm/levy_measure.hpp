#pragma once

#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "levyhjm/jump_set.hpp"
#include "levyhjm/quadrature.hpp"
#include "levyhjm/rng.hpp"

namespace levyhjm {

struct Atom {
  double location = 0.0;
  double rate = 0.0;
};

/// nu(dy) = lambda * [p eta+ e^{-eta+ y} 1{y>0} + (1-p) eta- e^{eta- y} 1{y<0}] dy
struct DoubleExponential {
  double lambda = 1.0;
  double p = 0.5;
  double eta_plus = 1.0;
  double eta_minus = 1.0;
};

/// Uniform density on [lower, upper] minus (-eps0, eps0) with total mass lambda.
struct TruncatedUniform {
  double lower = -1.0;
  double upper = 1.0;
  double eps0 = 0.0;
  double lambda = 1.0;
};

using RealFn = std::function<double(double)>;

/// Levy (intensity) measure of the driving process. Immutable after
/// construction; the constructor checks integrability of min(y^2, 1).
///
/// `eps_trunc` removes jumps with |y| < eps_trunc from the *simulated*
/// measure. The `*_simulated` members integrate against that restriction;
/// everything else refers to the full measure.
class LevyMeasure {
 public:
  LevyMeasure() = default;  // zero measure

  static LevyMeasure atomic(std::vector<Atom> atoms, double eps_trunc = 0.0);
  static LevyMeasure double_exponential(DoubleExponential params, double eps_trunc = 0.0);
  static LevyMeasure truncated_uniform(TruncatedUniform params, double eps_trunc = 0.0);

  bool is_zero() const;
  bool is_atomic() const { return std::holds_alternative<std::vector<Atom>>(kind_); }
  bool has_density() const { return !is_atomic(); }
  double eps_trunc() const { return eps_trunc_; }
  std::string family() const;

  /// Atoms (empty for density families).
  std::span<const Atom> atoms() const;
  /// Density at y (0 for atomic measures).
  double density(double y) const;

  /// nu(A) for a set separated from zero, by closed form.
  double mass(const JumpSet& set) const;
  /// int_A f dnu. `breaks` are extra discontinuities of f for quadrature.
  quad::Result integrate(const RealFn& f, const JumpSet& set,
                         std::span<const double> breaks = {}) const;
  /// int f dnu over R \ {0}.
  quad::Result integrate(const RealFn& f, std::span<const double> breaks = {}) const;
  /// int f dnu over {|y| >= eps_trunc}.
  quad::Result integrate_simulated(const RealFn& f, std::span<const double> breaks = {}) const;
  quad::Result integrate_simulated(const RealFn& f, const JumpSet& set,
                                   std::span<const double> breaks = {}) const;

  /// int min(y^2, 1) nu(dy). Throws DivergenceError if infinite.
  double integrability() const;
  /// nu({|y| >= eps_trunc}): the jump rate used by the simulator.
  double simulated_rate() const;
  /// int_{eps_trunc <= |y| <= 1} y nu(dy).
  double small_jump_drift() const;
  /// Whether int_{|y|>1} e^{c y} nu(dy) is finite.
  bool exponential_moment_finite(double c) const;

  /// One jump size from nu restricted to {|y| >= eps_trunc}, normalised.
  double sample_jump(CounterRng& rng) const;

  /// Support of the simulated measure as intervals (density families only).
  std::vector<Interval> simulated_support() const;

 private:
  using Kind = std::variant<std::vector<Atom>, DoubleExponential, TruncatedUniform>;
  LevyMeasure(Kind kind, double eps_trunc);
  void validate() const;
  std::vector<Interval> support(double exclusion) const;
  double mass_on_interval(double lo, double hi) const;
  quad::Result integrate_impl(const RealFn& f, const JumpSet* set, double exclusion,
                              std::span<const double> breaks) const;

  Kind kind_ = std::vector<Atom>{};
  double eps_trunc_ = 0.0;
};

struct LevyTriplet {
  double a = 0.0;  // drift
  double q = 0.0;  // Brownian variance: Var W_t = q t
  LevyMeasure nu;

  void validate() const;
};

}  // namespace levyhjm
