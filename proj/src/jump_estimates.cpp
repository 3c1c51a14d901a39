#include <cmath>
#include <memory>

#include "levyhjm/errors.hpp"
#include "levyhjm/girsanov.hpp"
#include "levyhjm/jump_calculus.hpp"
#include "levyhjm/jump_calculus_detail.hpp"
#include "levyhjm/parallel.hpp"

namespace levyhjm {

using detail::RateEvaluator;

namespace {

// int_0^T rate over the simulation grid, for history-free evaluators.
double deterministic_total(const RateEvaluator& ev, const TimeGrid& grid, double t_end) {
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < grid.size() && grid[k] < t_end; ++k) {
    total += ev.over(grid[k], std::min(grid[k + 1], t_end), PathHistory());
  }
  return total;
}

}  // namespace

IsometryEstimate estimate_isometry(const GeneralIntegrand& g, const LevyTriplet& triplet, Compensator comp,
                                   const McConfig& mc) {
  detail::require_compatible(g, comp);
  if (!mc.grid) throw DomainError("estimate_isometry: missing grid");
  const auto& nu = triplet.nu;
  const GridPtr& grid = mc.grid;

  RateEvaluator square(g, nu, comp, RateEvaluator::Transform::Square, -1);
  std::unique_ptr<CompensatorCache> cache;
  if (square.history_free()) cache = std::make_unique<CompensatorCache>(g, nu, comp, grid);
  std::unique_ptr<DensityModel> density;
  if (comp.is_q()) density = std::make_unique<DensityModel>(*comp.pair, triplet, grid);

  const bool rhs_by_quadrature = square.history_free();
  struct Sample {
    double lhs = 0.0;
    double rhs = 0.0;
  };
  auto samples = parallel_map<Sample>(
      mc.n_paths,
      [&](std::size_t i) {
        const auto path = simulate_path(triplet, grid, {mc.seed, i});
        const auto integral = integrate_general(g, path, nu, comp, cache.get());
        const double w = density ? density->path(path).final_rho() : 1.0;
        Sample s;
        s.lhs = w * integral.final_value() * integral.final_value();
        if (!rhs_by_quadrature) s.rhs = w * detail::cumulative_on_grid(square, path).back();
        return s;
      },
      mc.threads);

  std::vector<double> lhs(samples.size()), rhs(samples.size()), diff(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    lhs[i] = samples[i].lhs;
    rhs[i] = samples[i].rhs;
    diff[i] = samples[i].lhs - samples[i].rhs;
  }
  IsometryEstimate out;
  out.n_paths = mc.n_paths;
  out.seed = mc.seed;
  const auto ls = sample_stats(lhs);
  out.lhs = ls.mean;
  out.lhs_se = ls.std_error;
  if (rhs_by_quadrature) {
    out.rhs = deterministic_total(square, *grid, grid->horizon());
    out.se = out.lhs_se;
  } else {
    const auto rs = sample_stats(rhs);
    out.rhs = rs.mean;
    out.rhs_se = rs.std_error;
    out.se = sample_stats(diff).std_error;
  }
  return out;
}

CovariationEstimate estimate_covariation_Q(const JumpSet& a, const JumpSet& b, const LevyTriplet& triplet,
                                           const GeneratingPair& pair, double t, const McConfig& mc) {
  a.require_separated("estimate_covariation_Q");
  b.require_separated("estimate_covariation_Q");
  if (!mc.grid) throw DomainError("estimate_covariation_Q: missing grid");
  if (!(t > 0.0) || t > mc.grid->horizon()) throw DomainError("estimate_covariation_Q: t outside (0, T*]");
  const auto& nu = triplet.nu;
  const Compensator comp = Compensator::Q(pair);
  const JumpSet both = a.intersected(b);
  DensityModel density(pair, triplet, mc.grid);

  struct Sample {
    double mc = 0.0;
    double predicted = 0.0;
  };
  auto samples = parallel_map<Sample>(
      mc.n_paths,
      [&](std::size_t i) {
        const auto path = simulate_path(triplet, mc.grid, {mc.seed, i});
        const double w = density.path(path).final_rho();
        Sample s;
        s.mc = w * compensated_count(path, nu, comp, t, a) * compensated_count(path, nu, comp, t, b);
        if (!pair.deterministic() && !both.empty()) {
          // Pathwise compensator of A n B: count minus compensated count.
          double count = 0.0;
          for (const auto& j : path.jumps) {
            if (j.time <= t && both.contains(j.size)) count += 1.0;
          }
          s.predicted = w * (count - compensated_count(path, nu, comp, t, both));
        }
        return s;
      },
      mc.threads);

  std::vector<double> m(samples.size()), p(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    m[i] = samples[i].mc;
    p[i] = samples[i].predicted;
  }
  CovariationEstimate out;
  out.n_paths = mc.n_paths;
  out.seed = mc.seed;
  const auto ms = sample_stats(m);
  out.mc = ms.mean;
  out.mc_se = ms.std_error;
  if (both.empty()) {
    out.predicted = 0.0;
  } else if (pair.deterministic()) {
    GeneralIntegrand ind;
    ind.g = [&both](double, double y, const PathHistory&) { return both.contains(y) ? 1.0 : 0.0; };
    ind.cls = IntegrandClass::Psi1Q;
    ind.history_free = true;
    ind.time_homogeneous = true;
    ind.y_breaks = both.endpoints();
    RateEvaluator ev(ind, nu, comp, RateEvaluator::Transform::Identity, -1);
    out.predicted = deterministic_total(ev, *mc.grid, t);
  } else {
    const auto ps = sample_stats(p);
    out.predicted = ps.mean;
    out.predicted_se = ps.std_error;
  }
  return out;
}

}  // namespace levyhjm
