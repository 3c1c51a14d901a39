#pragma once

#include <functional>
#include <string>
#include <vector>

#include "levyhjm/levy_path.hpp"

namespace levyhjm {

using PhiFn = std::function<double(double s, const PathHistory& h)>;
using PsiFn = std::function<double(double s, double y, const PathHistory& h)>;

/// The pair (phi, psi) defining an equivalent measure Q through its density
/// process. Both evaluators see only the strict past of the path.
class GeneratingPair {
 public:
  struct Flags {
    bool deterministic = false;      // no dependence on the path
    bool time_homogeneous = false;   // no dependence on s
  };

  /// phi = 0, psi = 0: Q = P.
  static GeneratingPair identity();
  /// phi = c, psi = theta.
  static GeneratingPair constant(double phi, double theta);
  /// phi = c, psi(y) = theta0 + theta1 * y.
  static GeneratingPair linear(double phi, double theta0, double theta1);
  /// phi = c, psi(y) = values[i] on [edges[i-1], edges[i]) with edges[-1] = -inf
  /// and edges[n] = +inf, so values has one more entry than edges. Entries
  /// of `points` override psi at single jump sizes.
  static GeneratingPair tabulated(double phi, std::vector<double> edges, std::vector<double> values,
                                  std::vector<std::pair<double, double>> points = {});
  /// Arbitrary evaluators. `psi_bound` bounds psi from above on {|y| <= 1}.
  static GeneratingPair custom(std::string name, PhiFn phi, PsiFn psi, Flags flags, double psi_bound,
                               std::vector<double> y_breaks = {});

  double phi(double s, const PathHistory& h) const { return phi_(s, h); }
  double psi(double s, double y, const PathHistory& h) const { return psi_(s, y, h); }

  const std::string& name() const { return name_; }
  bool deterministic() const { return flags_.deterministic; }
  bool time_homogeneous() const { return flags_.time_homogeneous; }
  bool phi_is_zero() const { return phi_zero_; }
  bool psi_is_zero() const { return psi_zero_; }
  double psi_bound() const { return psi_bound_; }
  const std::vector<double>& y_breaks() const { return y_breaks_; }

 private:
  GeneratingPair() = default;

  std::string name_;
  PhiFn phi_;
  PsiFn psi_;
  Flags flags_;
  bool phi_zero_ = false;
  bool psi_zero_ = false;
  double psi_bound_ = 0.0;
  std::vector<double> y_breaks_;
};

}  // namespace levyhjm
