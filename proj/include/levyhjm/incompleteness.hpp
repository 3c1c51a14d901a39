#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "levyhjm/hedging.hpp"
#include "levyhjm/hjm_market.hpp"
#include "levyhjm/jump_calculus.hpp"

namespace levyhjm {

/// Radii eps_n = eps_1 2^-(n-1), n = 1..2K+3, around y0 and the masses of
/// the 2K+2 annuli A_n = B(y0, eps_n) \ B(y0, eps_{n+1}) (closed balls).
struct ConcentrationWitness {
  double y0 = 0.0;
  std::size_t K = 0;
  std::vector<double> epsilons;
  std::vector<double> annulus_masses;  // annulus_masses[n-1] = nu(A_n)

  std::size_t n_annuli() const { return annulus_masses.size(); }
  /// eps_n for any n >= 1 (the radius sequence continues past the stored prefix).
  double epsilon(std::size_t n) const;
  /// n with y in A_n, or 0 when |y - y0| > eps_1 or y = y0.
  std::size_t annulus_index(double y) const;
  /// A_n as a jump set.
  JumpSet annulus(std::size_t n) const;
};

/// Requires a density family, y0 != 0, K >= 4 and 0 < eps1 < |y0|. Throws
/// NotConcentratedError when an annulus carries no mass.
ConcentrationWitness find_concentration_witness(const LevyMeasure& nu, double y0, std::size_t K, double eps1);
/// eps1 = min(0.25, |y0| / 2).
ConcentrationWitness find_concentration_witness(const LevyMeasure& nu, double y0, std::size_t K);

/// g(y) = -(|y| ^ 1) on even annuli, +(|y| ^ 1) elsewhere.
class CounterexampleG {
 public:
  explicit CounterexampleG(ConcentrationWitness witness);

  double operator()(double y) const;
  const ConcentrationWitness& witness() const { return witness_; }
  /// Annulus boundaries down to radius 2^-40 |y0|, plus y0 and +-1.
  const std::vector<double>& breaks() const { return breaks_; }
  /// g as a history-free, time-homogeneous integrand of class Psi12Q.
  GeneralIntegrand integrand() const;

 private:
  ConcentrationWitness witness_;
  std::vector<double> breaks_;
};

/// int g e^psi dnu for a deterministic, time-homogeneous pair.
double counterexample_rate(const CounterexampleG& g, const GeneratingPair& pair, const LevyMeasure& nu);

/// First time in [0, until] at which |sum_{tau_j <= t} g(y_j) - rate t|
/// reaches k0, or +inf. Between jumps the integral is affine, so drift
/// crossings are located exactly.
double stopping_time(const CounterexampleG& g, std::span<const Jump> jumps, double rate, double k0, double until);

/// int_0^t int g dpi~_Q along the path, stopped at tau_k0.
struct StoppedIntegral {
  double tau = 0.0;       // tau_k0 ^ T*
  double value = 0.0;     // X
  bool stopped = false;   // tau < T* or the level was reached at T*
};
StoppedIntegral stopped_integral(const CounterexampleG& g, const LevyPath& path, double rate, double k0);

/// X = int int g(y) 1_(0, tau_k0](s) dpi~_Q with f_X = 0 and M_0 = 0. The
/// pair must be deterministic and time-homogeneous. Throws ClassError when
/// g fails the Psi12Q check and DegenerateStopError when k0 <= 0.
ClaimRepresentation build_counterexample_claim(const CounterexampleG& g, const MartingaleMeasureSpec& spec,
                                               double k0);

struct StopLevelSelection {
  double k0 = 0.0;                 // smallest integer with coverage
  double unstopped_fraction = 0.0; // of pilot paths at k0
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
};

/// Smallest integer k0 >= 1 such that at least `coverage` of the pilot
/// paths have tau_k0 = T*.
StopLevelSelection select_stop_level(const CounterexampleG& g, const MartingaleMeasureSpec& spec,
                                     const McConfig& mc, double coverage = 0.99);

/// P^(t-, .) and Sigma(t, .) on the maturity grid.
struct SurfaceSnapshot {
  double t = 0.0;
  std::size_t path = 0;
  std::size_t step = 0;
  std::vector<double> p_hat;
  std::vector<double> sigma;

  /// Row `step` of the surface (the left limit at t_step off jump times).
  static SurfaceSnapshot from_surface(const ForwardSurface& surface, std::size_t step, std::size_t path = 0);
};

struct MomentCertificate {
  std::vector<double> probes;  // one per annulus
  std::vector<double> lhs;     // |g(a_{2k+1}) - g(a_{2k+2})|
  std::vector<double> rhs;     // max_T P^ |e^{-Sigma a_{2k+1}} - e^{-Sigma a_{2k+2}}|
  std::vector<double> ratio;   // lhs / rhs
  std::size_t k_min = 0;       // ratio strictly increasing on k >= k_min

  std::size_t n_pairs() const { return ratio.size(); }
};

/// Mass-weighted median of the heavier side of annulus n.
double annulus_probe(const ConcentrationWitness& w, const LevyMeasure& nu, std::size_t n);

/// |sum beta_i g(a_i)| / max_T |sum beta_i P^ (e^{-Sigma a_i} - 1)|.
double moment_functional_ratio(const CounterexampleG& g, const SurfaceSnapshot& snapshot,
                               std::span<const double> points, std::span<const double> beta);

/// Certificate on the first `n_pairs` annulus pairs with beta = (1, -1).
/// Requires 2 n_pairs <= n_annuli.
MomentCertificate moment_certificate(const CounterexampleG& g, const LevyMeasure& nu, const SurfaceSnapshot& snapshot,
                                     std::size_t n_pairs);

struct IncompletenessConfig {
  double k0 = 3.0;
  std::size_t levels = 4;      // level l hedges with 2^l nodes and 2^l buckets
  std::size_t snapshots = 10;
  std::size_t control_node = std::numeric_limits<std::size_t>::max();  // default: last node
  double reg_scale = 1e-8;
};

struct LevelResiduals {
  std::size_t nodes = 0;
  std::size_t buckets = 0;
  double counterexample = 0.0;
  double control = 0.0;
};

struct IncompletenessReport {
  ConcentrationWitness witness;
  double k0 = 0.0;
  double rate = 0.0;
  std::size_t control_node = 0;
  std::vector<LevelResiduals> levels;
  double counterexample_l2 = 0.0;
  double control_l2 = 0.0;
  double separation = 0.0;  // finest counterexample residual / finest control residual
  std::vector<SurfaceSnapshot> snapshots;
  std::vector<MomentCertificate> certificates;  // one per snapshot
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;

  /// Smallest deepest-to-shallowest ratio quotient over snapshots.
  double min_ratio_growth() const;
  /// Every certificate's ratio is strictly increasing on k >= from.
  bool tail_increasing(std::size_t from = 2) const;
};

/// Least-squares hedges of the counterexample and of a single-bond control
/// claim on nested bases, plus certificates on `snapshots` (path, time)
/// pairs. The number of maturity intervals and the step count must be
/// divisible by 2^(levels - 1).
IncompletenessReport incompleteness_experiment(const CounterexampleG& g, const MarketModel& model,
                                               const IncompletenessConfig& config, const McConfig& mc);

}  // namespace levyhjm
