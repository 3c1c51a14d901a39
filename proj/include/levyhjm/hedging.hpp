#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "levyhjm/hjm_market.hpp"
#include "levyhjm/jump_calculus.hpp"

namespace levyhjm {

/// What a quantity process may read on step k: the left-point surface row
/// (P^(t_k, .) and discrete Sigma(t_k, .) on the maturity nodes) and the
/// path through t_k.
struct HedgeState {
  double t = 0.0;
  std::size_t step = 0;
  std::span<const double> log_p_hat;
  std::span<const double> sigma;
  PathHistory history;
};

using QuantityFn = std::function<double(const HedgeState& state)>;

/// phi_s = sum_k c_k(s) delta_{T_k}: quantities held in bonds with maturity
/// nodes `nodes`. Quantities are constant on each grid step.
struct Portfolio {
  std::vector<std::size_t> nodes;
  std::vector<QuantityFn> quantities;
  double bound = 0.0;  // declared bound on |c_k|; 0 disables the check

  /// Constant holdings.
  static Portfolio buy_and_hold(std::vector<std::size_t> nodes, std::vector<double> amounts);
  /// <phi, h> = sum_k c_k h(T_k) for h given on all maturity nodes.
  double pairing(std::span<const double> c, std::span<const double> h) const;
  void validate(std::size_t n_nodes) const;
};

/// X = M_0 + int f_X dW~ + int int g_X dpi~_Q, with the payoff evaluated
/// directly. The integrands are optional.
struct ClaimRepresentation {
  std::string name;
  double m0 = 0.0;
  std::function<double(double s, const PathHistory& h)> f_x;
  GeneralIntegrand g_x;  // class Psi12Q when present
  std::function<double(const LevyPath& path, const ForwardSurface& surface)> payoff;

  bool has_representation() const { return static_cast<bool>(f_x) || static_cast<bool>(g_x.g); }

  static ClaimRepresentation constant(double value);
  /// X = P^(T*, u_m).
  static ClaimRepresentation bond_payoff(std::size_t node);
  /// X = int int g dpi~_Q over (0, T*].
  static ClaimRepresentation jump_integral(GeneralIntegrand g, const GeneratingPair& pair, const LevyMeasure& nu);
};

/// Discounted wealth at grid times with its three integral terms.
struct WealthPath {
  std::vector<double> values;
  std::vector<double> brownian;     // -int <phi, P^ Sigma> dW~
  std::vector<double> jumps;        // sum over jumps of <phi, P^_- (e^{-Sigma y} - 1)>
  std::vector<double> compensator;  // int int <phi, P^_- (e^{-Sigma y} - 1)> e^psi nu ds
};

/// X^_t = x0 - int <phi, P^ Sigma> dW~ + int int <phi, P^_- (e^{-Sigma y} - 1)> dpi~_Q.
/// Jumps use P^(tau-, .) and Sigma(tau, .) exactly; the Brownian and
/// compensator terms are left-point sums. Throws MaturityError for unknown
/// nodes and ClassError when the jump integrand's compensator diverges.
WealthPath wealth_path(const Portfolio& portfolio, const MarketModel& model, const ForwardSurface& surface,
                       const LevyPath& path, double x0 = 0.0);

/// Class Psi12Q check of the wealth jump integrand along one path.
ClassCheck admissibility_check(const Portfolio& portfolio, const MarketModel& model, const ForwardSurface& surface,
                               const LevyPath& path);

struct ReplicationResiduals {
  double eq2 = 0.0;          // |<phi, P^ Sigma> + f_X|
  std::vector<double> eq3;   // |<phi, P^_- (e^{-Sigma y} - 1)> - g_X(s, y)| per probe
};

/// Both replication conditions on grid step k (s in (t_k, t_{k+1}]).
ReplicationResiduals replication_equations_residual(const Portfolio& portfolio, const MarketModel& model,
                                                    const ForwardSurface& surface, const ClaimRepresentation& claim,
                                                    const LevyPath& path, std::size_t step,
                                                    std::span<const double> probes);

/// Basis of the least-squares hedge: unit holdings in each maturity node on
/// each of `buckets` equal blocks of grid steps.
struct HedgeBasis {
  std::vector<std::size_t> nodes;
  std::size_t buckets = 1;

  std::size_t size() const { return nodes.size() * buckets; }
};

/// Sampled data for the hedge: claims, rho_T* weights and basis gains.
struct HedgeProblem {
  HedgeBasis basis;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> claim_names;
  std::vector<double> weights;  // rho_T* normalized to sum 1
  std::vector<double> claims;   // one row per path, one column per claim
  std::vector<double> gains;    // one row per path, one column per basis element (node-major)

  std::size_t n_claims() const { return claim_names.size(); }
  double claim(std::size_t path, std::size_t c) const { return claims[path * n_claims() + c]; }
  double gain(std::size_t path, std::size_t j) const { return gains[path * basis.size() + j]; }

  /// The same samples on a coarser basis: a subset of nodes and a bucket
  /// count dividing the current one.
  HedgeProblem restricted(std::vector<std::size_t> nodes, std::size_t buckets) const;
};

/// Simulates paths, surfaces and density weights and evaluates each claim
/// and each basis element's terminal gains. Bucket boundaries must be grid
/// times (the step count must be divisible by `buckets`).
HedgeProblem build_hedge_problem(const MarketModel& model, const std::vector<ClaimRepresentation>& claims,
                                 const HedgeBasis& basis, const McConfig& mc);

struct HedgeReport {
  std::string claim;
  double initial_cost = 0.0;  // rho-weighted mean of X
  std::vector<double> coefficients;
  double residual_mean = 0.0;
  double residual_variance = 0.0;
  double residual_l2 = 0.0;   // sqrt(E^Q[(X - X^_T*)^2])
  double claim_l2 = 0.0;      // sqrt(E^Q[X^2])
  double claim_std = 0.0;     // sqrt(E^Q[(X - E^Q X)^2])
  double regularization = 0.0;
  std::size_t n_paths = 0;
};

/// Empirical objective E^Q[(X - x0 - beta . G)^2] (+ lambda |beta|^2 when
/// `lambda` is given).
double hedge_objective(const HedgeProblem& problem, std::size_t claim, double x0, std::span<const double> beta,
                       double lambda = 0.0);

/// Minimizes the objective over beta with x0 fixed at the rho-weighted mean
/// of X, by the regularized normal equations (lambda = reg_scale * trace / p).
/// Throws SingularityError if the regularized Gram matrix is not positive
/// definite.
HedgeReport solve_hedge(const HedgeProblem& problem, std::size_t claim, double reg_scale = 1e-8);

HedgeReport least_squares_hedge(const MarketModel& model, const ClaimRepresentation& claim, const HedgeBasis& basis,
                                const McConfig& mc, double reg_scale = 1e-8);

}  // namespace levyhjm
