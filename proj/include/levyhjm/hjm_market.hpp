#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "levyhjm/generating_pair.hpp"
#include "levyhjm/jump_calculus.hpp"
#include "levyhjm/levy_measure.hpp"
#include "levyhjm/levy_path.hpp"

namespace levyhjm {

using SigmaFn = std::function<double(double s, double T, const PathHistory& h)>;
using AlphaFn = std::function<double(double s, double T, const PathHistory& h)>;

/// Forward-rate volatility sigma(s, T). Evaluation returns 0 for s >= T and
/// throws BoundError when |sigma| exceeds the declared global bound.
class VolatilitySpec {
 public:
  VolatilitySpec();  // sigma = 0

  static VolatilitySpec zero() { return VolatilitySpec(); }
  /// sigma(s, T) = c.
  static VolatilitySpec constant(double c);
  /// sigma(s, T) = c e^{-kappa (T - s)}.
  static VolatilitySpec exponential(double c, double kappa);
  /// `big_sigma` is an optional closed form for int_s^T sigma(s, v) dv.
  static VolatilitySpec custom(std::string name, SigmaFn sigma, double bound, bool deterministic,
                               std::function<double(double s, double T)> big_sigma = {});

  double sigma(double s, double T, const PathHistory& h = {}) const;
  /// Sigma(s, T) = int_s^T sigma(s, v) dv (closed form or quadrature).
  double big_sigma(double s, double T, const PathHistory& h = {}) const;

  const std::string& name() const { return name_; }
  double bound() const { return bound_; }
  bool deterministic() const { return deterministic_; }
  bool is_zero() const { return zero_; }

 private:
  std::string name_;
  SigmaFn sigma_;
  std::function<double(double, double)> big_sigma_;
  double bound_ = 0.0;
  bool deterministic_ = true;
  bool zero_ = true;
};

/// Q through (phi, psi), the driving triplet and the volatility.
struct MartingaleMeasureSpec {
  GeneratingPair pair = GeneratingPair::identity();
  LevyTriplet triplet;
  VolatilitySpec vol;

  bool deterministic() const { return pair.deterministic() && vol.deterministic(); }
};

/// Jump terms of the drift condition for a given Sigma value.
struct DriftTerms {
  double drift = 0.0;        // A
  double compensator = 0.0;  // int (e^{-Sigma y} - 1) e^psi nu(dy)
};

/// A and the Q-compensator of e^{-Sigma y} - 1 at time s for the value Sigma.
/// Throws MomentError when the exponential moment diverges.
DriftTerms hjm_drift_terms(const MartingaleMeasureSpec& spec, double s, double big_sigma,
                           const PathHistory& h = {});

/// A(s, T) = -Sigma a + q Sigma^2 / 2 - q phi Sigma
///           + int (e^psi (e^{-Sigma y} - 1) + 1{|y| <= 1} Sigma y) nu(dy).
double hjm_drift(const MartingaleMeasureSpec& spec, double s, double T, const PathHistory& h = {});

/// alpha(s, T) = d/dT A(s, T)
///   = sigma(s, T) (-a + q Sigma - q phi + int (1{|y| <= 1} y - y e^psi e^{-Sigma y}) nu(dy)).
double hjm_alpha(const MartingaleMeasureSpec& spec, double s, double T, const PathHistory& h = {});

/// Initial forward curve f(0, T).
class InitialCurve {
 public:
  static InitialCurve flat(double rate);
  /// Piecewise linear through (knots, values), constant beyond the ends.
  static InitialCurve tabulated(std::vector<double> knots, std::vector<double> values);
  static InitialCurve custom(std::function<double(double)> f);

  double operator()(double T) const { return f_(T); }

 private:
  std::function<double(double)> f_;
};

struct DriftSpec {
  enum class Mode { Explicit, Hjm };
  Mode mode = Mode::Hjm;
  AlphaFn alpha;       // Explicit mode only
  double shift = 0.0;  // added to A(t, T) for T > t

  static DriftSpec hjm(double shift = 0.0) { return {Mode::Hjm, {}, shift}; }
  static DriftSpec explicit_alpha(AlphaFn alpha) { return {Mode::Explicit, std::move(alpha), 0.0}; }
};

/// One path of the forward surface on grid times x maturity nodes. Matrices
/// are row-major with one row per grid time and one column per maturity.
struct ForwardSurface {
  GridPtr grid;
  std::vector<double> maturities;  // 0 = u_0 < ... < u_M, all grid times
  std::vector<double> f;           // f(t_k, u_m)
  std::vector<double> alpha;       // alpha(t_k, u_m), used on step k
  std::vector<double> sigma;       // discrete Sigma(t_k, u_m), used on step k
  std::vector<double> drift;       // discrete A(t_k, u_m), used on step k
  std::vector<double> log_p_hat;   // -int_0^{u_m} f(t_k, u) du (trapezoid)

  std::vector<Jump> jumps;
  std::vector<std::size_t> jump_step;  // step containing each jump
  std::vector<double> jump_sigma;      // discrete Sigma(tau, u_m), one row per jump
  std::vector<double> jump_log_p_hat;  // log P^(tau-, u_m), one row per jump

  std::size_t n_maturities() const { return maturities.size(); }
  std::size_t index(std::size_t k, std::size_t m) const { return k * maturities.size() + m; }

  double forward(std::size_t k, std::size_t m) const { return f[index(k, m)]; }
  double discounted(std::size_t k, std::size_t m) const;
  /// P(t_k, u_m) for t_k <= u_m; MaturityError otherwise.
  double bond(std::size_t k, std::size_t m) const;
  /// r(t_k) = f(t_k, t_k), linear in maturity between nodes.
  double short_rate(std::size_t k) const;
  /// Maturity node index of T; MaturityError if T is not a node.
  std::size_t maturity_index(double T) const;
};

/// Forward-rate model on a fixed grid: caches the discrete volatility and
/// drift when the spec is deterministic.
class MarketModel {
 public:
  /// Throws MaturityError unless the maturities start at 0, increase, and
  /// are grid times.
  MarketModel(MartingaleMeasureSpec spec, InitialCurve curve, std::vector<double> maturities,
              GridPtr grid, DriftSpec drift = DriftSpec::hjm());
  ~MarketModel();
  MarketModel(const MarketModel&) = delete;
  MarketModel& operator=(const MarketModel&) = delete;

  ForwardSurface evolve(const LevyPath& path) const;

  /// int (e^{-Sigma(t_k, u_m) y} - 1) e^{psi(t_k, y)} nu(dy), Sigma discrete.
  double jump_compensator(const ForwardSurface& surface, std::size_t k, std::size_t m,
                          const PathHistory& h) const;
  /// Same at an arbitrary Sigma value and time.
  double jump_compensator_at(double s, double big_sigma, const PathHistory& h) const;

  const MartingaleMeasureSpec& spec() const { return spec_; }
  const std::vector<double>& maturities() const { return maturities_; }
  const GridPtr& grid() const { return grid_; }
  const DriftSpec& drift_spec() const { return drift_; }
  /// f(0, u_m).
  const std::vector<double>& initial_forward() const { return f0_; }
  /// Trapezoid weights of int_0^{u_m} on node j (j <= m).
  double trapezoid_weight(std::size_t m, std::size_t j) const;

 private:
  struct Impl;
  MartingaleMeasureSpec spec_;
  std::vector<double> maturities_;
  GridPtr grid_;
  DriftSpec drift_;
  std::vector<double> f0_;
  std::unique_ptr<Impl> impl_;
};

/// f(t, T) = f(0, T) + sum alpha dt + sum sigma dZ with left-point drift and
/// Brownian terms, exact jump terms sigma(tau, T) y, and f frozen after T.
ForwardSurface evolve_forward(const MarketModel& model, const LevyPath& path);

/// Integrates dP^ = P^_{s-} (-Sigma dW~ + int (e^{-Sigma y} - 1) dpi~_Q) with
/// a Milstein step for the Brownian part, exact jump factors and an exact
/// exponential for the compensator, and returns the largest relative
/// difference to the exponential formula over grid times and maturities.
double discounted_price_sde_check(const MarketModel& model, const ForwardSurface& surface,
                                  const LevyPath& path);

struct MartingaleConditions {
  double cond1 = 0.0;  // int_0^{T*} int_{|y|<=1} |e^psi - 1| nu ds
  bool cond1_finite = true;
  std::vector<double> cond2;  // per maturity: int_0^T int_{|y|>1} e^{-Sigma y} e^psi nu ds
  std::vector<bool> cond2_finite;
  /// max over grid times and maturities of |sum_j w_j alpha(t_k, u_j) - A(t_k, u_m)|
  /// with A from the drift condition at the discrete Sigma.
  double drift_formula_residual = 0.0;
  std::vector<std::string> messages;

  bool ok() const;
  /// Throws MomentError if any condition diverges.
  void require() const;
};

/// Evaluates both integrability conditions by quadrature (on the empty
/// history for path-dependent specs) and the drift residual.
MartingaleConditions check_martingale_conditions(const MarketModel& model);

/// rho-weighted means of P^(t_k, u_m) against P^(0, u_m).
struct DiscountedMartingaleTest {
  std::vector<std::size_t> maturity_nodes;
  std::vector<double> mean;       // one row per grid time
  std::vector<double> std_error;  // one row per grid time
  std::vector<double> initial;    // P^(0, u_m)
  double max_abs_z = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;

  bool passes(double z_limit = 4.0) const { return max_abs_z <= z_limit; }
};

/// Runs the martingale test for the listed maturity nodes. Paths are
/// processed in fixed-size blocks whose sums are combined in block order.
DiscountedMartingaleTest discounted_martingale_test(const MarketModel& model,
                                                    std::vector<std::size_t> maturity_nodes,
                                                    const McConfig& mc);

}  // namespace levyhjm
