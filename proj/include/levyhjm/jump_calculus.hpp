#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "levyhjm/generating_pair.hpp"
#include "levyhjm/jump_set.hpp"
#include "levyhjm/levy_measure.hpp"
#include "levyhjm/levy_path.hpp"

namespace levyhjm {

/// Integrability classes for integrands against compensated jump measures.
/// Psi1: int |g| < inf; Psi2: int g^2 < inf; Psi12: int min(g^2, |g|) < inf.
/// The Q variants weight the compensator with e^psi.
enum class IntegrandClass { Psi1, Psi2, Psi12, Psi1Q, Psi2Q, Psi12Q };

bool is_q_class(IntegrandClass c);
std::string to_string(IntegrandClass c);
IntegrandClass integrand_class_from_string(const std::string& s);

/// Coefficient of a simple integrand on (t_i, t_{i+1}]: may read the path
/// up to and including t_i.
using SimpleCoefficient = std::function<double(const PathHistory& through_ti)>;

struct SimpleTerm {
  JumpSet set;
  SimpleCoefficient coefficient;

  static SimpleTerm constant(JumpSet set, double c);
};

struct SimpleIntegrand {
  std::vector<double> partition;             // 0 = t_0 < ... < t_n
  std::vector<std::vector<SimpleTerm>> terms;  // terms[i] acts on (t_i, t_{i+1}]
  double bound = 0.0;                        // declared bound on |g_ij|

  /// Single term c * 1_{(0, T]} 1_A.
  static SimpleIntegrand indicator(double horizon, JumpSet set, double c = 1.0);

  /// Throws DomainError on invalid partitions, sets touching zero or
  /// overlapping sets within an interval.
  void validate() const;
};

/// g(s, y, history before s).
using IntegrandFn = std::function<double(double s, double y, const PathHistory& h)>;

struct GeneralIntegrand {
  IntegrandFn g;
  IntegrandClass cls = IntegrandClass::Psi2;
  bool history_free = false;       // g ignores the history argument
  bool time_homogeneous = false;   // g ignores s
  std::vector<double> y_breaks;    // discontinuities of g in y
  std::vector<double> s_breaks;    // discontinuities of g in s
  std::string name;

  /// The simple integrand as a general one (class Psi2, or Psi2Q when `q`).
  static GeneralIntegrand from_simple(const SimpleIntegrand& simple, bool q = false);
};

/// Values of an integral process along one path.
struct IntegralPath {
  GridPtr grid;
  std::vector<double> values;        // at grid times
  std::vector<double> jump_times;
  std::vector<double> jump_sizes;    // Delta I at each jump time
  std::vector<double> jump_values;   // I at each jump time (after the jump)
  /// For Psi12 classes: the parts from g 1{|g| <= 1} and g 1{|g| > 1} at grid times.
  std::vector<double> small_part;
  std::vector<double> large_part;

  double final_value() const { return values.back(); }
};

/// Compensator selection: ds nu(dy) under P, or e^psi ds nu(dy) under Q.
struct Compensator {
  const GeneratingPair* pair = nullptr;  // null: P

  static Compensator P() { return {}; }
  static Compensator Q(const GeneratingPair& pair) { return {&pair}; }
  bool is_q() const { return pair != nullptr; }
};

/// I(g)_t for a simple integrand, exactly from the jump list.
IntegralPath integrate_simple_P(const SimpleIntegrand& g, const LevyPath& path, const LevyMeasure& nu);

/// Precomputed grid-level compensator of a history-free integrand (with a
/// deterministic pair under Q); shared across paths.
class CompensatorCache {
 public:
  CompensatorCache(const GeneralIntegrand& g, const LevyMeasure& nu, Compensator comp, const GridPtr& grid);
  /// Cumulative compensator at grid time k, per Psi12 part (index 0: |g| <= 1, 1: |g| > 1).
  double cumulative(std::size_t k, int part) const { return cum_[part][k]; }
  const GridPtr& grid() const { return grid_; }

 private:
  GridPtr grid_;
  std::vector<double> cum_[2];
};

/// Sum over jumps minus compensator; see `Compensator`. Psi12 classes are
/// split at |g| = 1, with ties in the small part. `cache`, when given, must
/// have been built for the same integrand, measure, compensator and grid.
IntegralPath integrate_general(const GeneralIntegrand& g, const LevyPath& path, const LevyMeasure& nu,
                               Compensator comp, const CompensatorCache* cache = nullptr);

struct ClassCheck {
  bool ok = false;
  double value = 0.0;  // int_0^T* int (class integrand) [e^psi] nu(dy) ds
  std::string message;
};

/// Evaluates the defining integral of `cls` for g over [0, horizon]. When
/// `path` is given, history-dependent integrands and pairs are evaluated
/// along it; otherwise with an empty history. Divergence is reported as
/// ok = false.
ClassCheck class_check(const GeneralIntegrand& g, const LevyMeasure& nu, const GeneratingPair* pair,
                       IntegrandClass cls, double horizon, const LevyPath* path = nullptr);

struct IsometryEstimate {
  double lhs = 0.0;     // MC estimate of E[|I(g)_T*|^2] (E^Q via rho weights)
  double lhs_se = 0.0;
  double rhs = 0.0;     // E[int int g^2 compensator]
  double rhs_se = 0.0;  // zero when computed by quadrature
  double se = 0.0;      // combined standard error of lhs - rhs
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
};

struct McConfig {
  GridPtr grid;
  std::size_t n_paths = 10000;
  std::uint64_t seed = 1;
  std::size_t threads = 0;
};

/// Both sides of the isometry. Under Q (`comp.is_q()`), expectations are
/// rho_T*-weighted P-expectations.
IsometryEstimate estimate_isometry(const GeneralIntegrand& g, const LevyTriplet& triplet, Compensator comp,
                                   const McConfig& mc);

struct CovariationEstimate {
  double mc = 0.0;
  double mc_se = 0.0;
  double predicted = 0.0;
  double predicted_se = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
};

/// E^Q[pi~_Q(t, A) pi~_Q(t, B)] by rho-weighted sampling, against
/// E^Q[nu_Q([0, t] x (A n B))].
CovariationEstimate estimate_covariation_Q(const JumpSet& a, const JumpSet& b, const LevyTriplet& triplet,
                                           const GeneratingPair& pair, double t, const McConfig& mc);

/// pi~_Q((0, t] x A) on one path: jump count minus int_0^t int_A e^psi nu(dy) ds.
double compensated_count(const LevyPath& path, const LevyMeasure& nu, Compensator comp, double t,
                         const JumpSet& set);

/// Built-in integrands selectable by name.
struct IntegrandSpec {
  std::string kind;  // indicator | linear | piecewise
  JumpSet set;       // indicator support; linear restriction (empty: all y)
  double scale = 1.0;
  std::vector<double> edges;   // piecewise: as for tabulated psi
  std::vector<double> values;
  IntegrandClass cls = IntegrandClass::Psi2;
};

GeneralIntegrand make_integrand(const IntegrandSpec& spec);

}  // namespace levyhjm
