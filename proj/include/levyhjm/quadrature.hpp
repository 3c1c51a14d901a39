#pragma once

#include <functional>
#include <span>

namespace levyhjm::quad {

struct Options {
  double rel_tol = 1e-10;
  // Absolute floor, relative to the integral of |f|, for integrands that cancel.
  double l1_floor = 1e-13;
  double abs_tol = 0.0;
  int max_subintervals = 4000;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  double l1 = 0.0;  // integral of |f|
  int subintervals = 0;
};

using Integrand = std::function<double(double)>;

/// Global adaptive Gauss-Kronrod (7/15) integration on [a, b]. Either limit
/// may be infinite. Endpoints are never evaluated, so integrable endpoint
/// singularities are tolerated.
///
/// Throws DivergenceError when the subdivision cap is reached before the
/// tolerance is met, or when the integrand produces non-finite values.
Result integrate(const Integrand& f, double a, double b, const Options& opts = {});

/// Integrates over [a, b] split at the interior points of `breaks`
/// (unsorted; points outside (a, b) are ignored).
Result integrate_piecewise(const Integrand& f, double a, double b,
                           std::span<const double> breaks,
                           const Options& opts = {});

}  // namespace levyhjm::quad
