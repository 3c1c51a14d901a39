#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "levyhjm/generating_pair.hpp"
#include "levyhjm/jump_calculus.hpp"
#include "levyhjm/levy_measure.hpp"
#include "levyhjm/levy_path.hpp"

namespace levyhjm {

/// Density process along one path.
struct DensityPath {
  GridPtr grid;
  std::vector<double> rho;  // at grid times, by multiplicative recursion
  std::vector<double> y;    // Y at grid times, by the explicit four-term formula
  std::vector<double> jump_times;
  std::vector<double> rho_at_jumps;      // rho just after each jump
  std::vector<double> rho_before_jumps;  // rho_{tau-}

  double final_rho() const { return rho.back(); }
};

/// Density construction for one (pair, triplet) on a fixed grid. Caches
/// the compensator of e^psi - 1 when the pair is deterministic.
class DensityModel {
 public:
  /// Throws ClassError when e^psi - 1 is not in Psi12.
  DensityModel(GeneratingPair pair, LevyTriplet triplet, GridPtr grid);
  ~DensityModel();
  DensityModel(const DensityModel&) = delete;
  DensityModel& operator=(const DensityModel&) = delete;

  DensityPath path(const LevyPath& path) const;
  /// log rho_{s-} for s = h.cut(), from the strict past only (requires phi = 0).
  double log_rho_left(const PathHistory& h) const;
  /// int_a^b int (e^psi - 1) nu(dy) du with the history fixed on (a, b).
  double compensator(double a, double b, const PathHistory& h) const;

  const GeneratingPair& pair() const { return pair_; }
  const LevyTriplet& triplet() const { return triplet_; }
  const GridPtr& grid() const { return grid_; }
  /// e^psi - 1 as an integrand.
  const GeneralIntegrand& tilt() const { return tilt_; }

 private:
  struct Impl;
  GeneratingPair pair_;
  LevyTriplet triplet_;
  GridPtr grid_;
  GeneralIntegrand tilt_;
  std::unique_ptr<Impl> impl_;
};

/// Y and rho = e^Y along a path.
DensityPath density_path(const GeneratingPair& pair, const LevyPath& path, const LevyTriplet& triplet);

struct ReciprocalPath {
  std::vector<double> values;  // 1/rho at grid times
  std::vector<double> jump_times;
  std::vector<double> at_jumps;
};

/// 1/rho by forward recursion of 1 - int int rho_-^{-1}(e^psi - 1) dpi~
/// + int int rho_-^{-1}(e^{-psi} + e^psi - 2) dpi, plus the exact Brownian
/// factor when phi != 0.
ReciprocalPath reciprocal_density(const GeneratingPair& pair, const LevyPath& path, const LevyTriplet& triplet);

/// int_A e^{psi(s, y)} nu(dy). A must not contain 0.
double q_compensator(const GeneratingPair& pair, const LevyMeasure& nu, double s, const JumpSet& set,
                     const PathHistory& history = {});

/// Z = a~ + W~ + small-jump pi~_Q integral + big-jump pi integral.
struct QDecomposition {
  std::vector<double> a_tilde;
  std::vector<double> w_tilde;
  std::vector<double> small_jumps;  // int_{|y| <= 1} y dpi~_Q
  std::vector<double> big_jumps;    // int_{|y| > 1} y dpi
  /// Largest |sum of components - Z| over grid times.
  double max_residual = 0.0;
};

/// The shifted Wiener process is W~ = W - q int phi ds, matching a Brownian
/// part with variance q; phi is integrated by left-point sums.
QDecomposition z_under_q_decomposition(const GeneratingPair& pair, const LevyPath& path,
                                       const LevyTriplet& triplet);

/// Inputs for the P-to-Q representation transform.
struct RepresentationInput {
  /// M_t computed from a history view; a strict history gives M_{t-}.
  std::function<double(double t, const PathHistory& h)> m;
  /// Integrand psi_M of the P-representation of rho M.
  IntegrandFn psi_m;
  double m0 = 0.0;
};

struct TransformResult {
  GeneralIntegrand integrand;  // psi~_M, class Psi12Q
  ClassCheck class_result;
  double max_error = 0.0;      // max over grid and jump times of |M_0 + int psi~ dpi~_Q - M|
};

/// psi~_M(s, y) = M_{s-} e^{-psi}(1 - e^psi) + rho_{s-}^{-1} e^{-psi} psi_M.
/// Requires phi = 0 and q = 0.
GeneralIntegrand transform_representation(const DensityModel& model, const RepresentationInput& input);

/// Builds psi~_M, checks its class along the path and reconstructs M.
/// Throws ClassError or ReconstructionError (tolerance 1e-8, relative to
/// max(1, |M|)).
TransformResult transform_and_verify(const DensityModel& model, const RepresentationInput& input,
                                     const LevyPath& path, double tolerance = 1e-8);

}  // namespace levyhjm
