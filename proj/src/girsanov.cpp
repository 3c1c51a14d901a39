#include "levyhjm/girsanov.hpp"

#include <algorithm>
#include <cmath>

#include "levyhjm/errors.hpp"
#include "levyhjm/jump_calculus_detail.hpp"

namespace levyhjm {

using detail::RateEvaluator;
using detail::cumulative_on_grid;

struct DensityModel::Impl {
  std::unique_ptr<RateEvaluator> rate;
  std::unique_ptr<CompensatorCache> cache;
};

DensityModel::DensityModel(GeneratingPair pair, LevyTriplet triplet, GridPtr grid)
    : pair_(std::move(pair)), triplet_(std::move(triplet)), grid_(std::move(grid)), impl_(new Impl) {
  triplet_.validate();
  const GeneratingPair* p = &pair_;
  tilt_.g = [p](double s, double y, const PathHistory& h) { return std::expm1(p->psi(s, y, h)); };
  tilt_.cls = IntegrandClass::Psi12;
  tilt_.history_free = pair_.deterministic();
  tilt_.time_homogeneous = pair_.time_homogeneous();
  tilt_.y_breaks = pair_.y_breaks();
  tilt_.name = "exp(psi)-1";

  auto check = class_check(tilt_, triplet_.nu, nullptr, IntegrandClass::Psi12, grid_->horizon());
  if (!check.ok) throw ClassError("exp(psi) - 1 is not in Psi12: " + check.message);

  // At finite activity the Psi12 split does not change the compensated
  // integral, so the tilt is integrated whole.
  tilt_.cls = IntegrandClass::Psi1;
  impl_->rate = std::make_unique<RateEvaluator>(tilt_, triplet_.nu, Compensator::P(),
                                                RateEvaluator::Transform::Identity, -1);
  if (impl_->rate->history_free()) {
    impl_->cache = std::make_unique<CompensatorCache>(tilt_, triplet_.nu, Compensator::P(), grid_);
  }
}

DensityModel::~DensityModel() = default;

double DensityModel::compensator(double a, double b, const PathHistory& h) const {
  return impl_->rate->over(a, b, h);
}

double DensityModel::log_rho_left(const PathHistory& h) const {
  if (!pair_.phi_is_zero() && triplet_.q > 0.0) {
    throw DomainError("rho_{s-} between grid times requires phi = 0 or q = 0");
  }
  const double s = h.cut();
  double log_rho = 0.0;
  for (const auto& j : h.jumps()) log_rho += pair_.psi(j.time, j.size, h.truncated(j.time, false));

  const auto& grid = *grid_;
  const std::size_t k = grid.floor_index(std::min(s, grid.horizon()));
  if (impl_->cache) {
    log_rho -= impl_->cache->cumulative(k, 0) + compensator(grid[k], s, PathHistory());
    return log_rho;
  }
  std::vector<double> events;
  for (std::size_t i = 1; i <= k; ++i) events.push_back(grid[i]);
  for (const auto& j : h.jumps()) events.push_back(j.time);
  std::sort(events.begin(), events.end());
  double cur = 0.0;
  for (double e : events) {
    if (e > cur) log_rho -= compensator(cur, e, h.truncated(e, false));
    cur = std::max(cur, e);
  }
  if (s > cur) log_rho -= compensator(cur, s, h);
  return log_rho;
}

DensityPath DensityModel::path(const LevyPath& path) const {
  const auto& grid = *path.grid;
  if (grid.size() != grid_->size() || grid.horizon() != grid_->horizon()) {
    throw DomainError("density model and path use different grids");
  }
  const double q = triplet_.q;
  DensityPath out;
  out.grid = path.grid;
  out.rho.assign(grid.size(), 1.0);
  out.y.assign(grid.size(), 0.0);

  // Route 1: stochastic-exponential recursion.
  double rho = 1.0;
  std::size_t next = 0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double t0 = grid[k], t1 = grid[k + 1];
    const double phi = pair_.phi(t0, PathHistory(path, t0, true));
    double cur = t0;
    double jump_factor = 1.0;
    double comp = 0.0;
    while (next < path.jumps.size() && path.jumps[next].time <= t1) {
      const auto& j = path.jumps[next++];
      const PathHistory before(path, j.time);
      comp += compensator(cur, j.time, before);
      out.jump_times.push_back(j.time);
      out.rho_before_jumps.push_back(rho * jump_factor * std::exp(-comp));
      jump_factor *= std::exp(pair_.psi(j.time, j.size, before));
      out.rho_at_jumps.push_back(rho * jump_factor * std::exp(-comp));
      cur = j.time;
    }
    if (impl_->cache) {
      comp = impl_->cache->cumulative(k + 1, 0) - impl_->cache->cumulative(k, 0);
    } else {
      comp += compensator(cur, t1, PathHistory(path, t1));
    }
    const double dw = path.brownian[k + 1] - path.brownian[k];
    const double brownian = q > 0.0 ? std::exp(phi * dw - 0.5 * q * phi * phi * (t1 - t0)) : 1.0;
    rho *= jump_factor * std::exp(-comp) * brownian;
    if (!(rho > 0.0) || !std::isfinite(rho)) throw DivergenceError("density lost positivity or overflowed");
    out.rho[k + 1] = rho;
  }

  // Route 2: Y = int phi dW - 1/2 int q phi^2 ds + int int (e^psi - 1) dpi~
  //             - int int (e^psi - 1 - psi) dpi.
  const IntegralPath tilt = integrate_general(tilt_, path, triplet_.nu, Compensator::P(), impl_->cache.get());
  double ito = 0.0, quad_var = 0.0, correction = 0.0;
  next = 0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double t0 = grid[k], t1 = grid[k + 1];
    if (q > 0.0) {
      const double phi = pair_.phi(t0, PathHistory(path, t0, true));
      ito += phi * (path.brownian[k + 1] - path.brownian[k]);
      quad_var += q * phi * phi * (t1 - t0);
    }
    while (next < path.jumps.size() && path.jumps[next].time <= t1) {
      const auto& j = path.jumps[next++];
      const double psi = pair_.psi(j.time, j.size, PathHistory(path, j.time));
      correction += std::expm1(psi) - psi;
    }
    out.y[k + 1] = ito - 0.5 * quad_var + tilt.values[k + 1] - correction;
  }
  return out;
}

DensityPath density_path(const GeneratingPair& pair, const LevyPath& path, const LevyTriplet& triplet) {
  DensityModel model(pair, triplet, path.grid);
  return model.path(path);
}

ReciprocalPath reciprocal_density(const GeneratingPair& pair, const LevyPath& path, const LevyTriplet& triplet) {
  DensityModel model(pair, triplet, path.grid);
  const auto& grid = *path.grid;
  ReciprocalPath out;
  out.values.assign(grid.size(), 1.0);
  double r = 1.0;
  std::size_t next = 0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double t0 = grid[k], t1 = grid[k + 1];
    double cur = t0;
    while (next < path.jumps.size() && path.jumps[next].time <= t1) {
      const auto& j = path.jumps[next++];
      const PathHistory before(path, j.time);
      // Compensator of -int int r_-(e^psi - 1) dpi~ between events.
      r *= std::exp(model.compensator(cur, j.time, before));
      const double psi = pair.psi(j.time, j.size, before);
      const double e = std::exp(psi);
      r = r - r * (e - 1.0) + r * (1.0 / e + e - 2.0);
      out.jump_times.push_back(j.time);
      out.at_jumps.push_back(r);
      cur = j.time;
    }
    r *= std::exp(model.compensator(cur, t1, PathHistory(path, t1)));
    if (triplet.q > 0.0) {
      const double phi = pair.phi(t0, PathHistory(path, t0, true));
      const double dw = path.brownian[k + 1] - path.brownian[k];
      r *= std::exp(-phi * dw + 0.5 * triplet.q * phi * phi * (t1 - t0));
    }
    out.values[k + 1] = r;
  }
  return out;
}

double q_compensator(const GeneratingPair& pair, const LevyMeasure& nu, double s, const JumpSet& set,
                     const PathHistory& history) {
  // Every supported family has finite total mass, so only sets containing
  // 0 itself are rejected.
  if (set.contains(0.0)) throw DomainError("q_compensator: set " + set.describe() + " contains 0");
  const auto& breaks = pair.y_breaks();
  return nu.integrate([&](double y) { return std::exp(pair.psi(s, y, history)); }, set, breaks).value;
}

QDecomposition z_under_q_decomposition(const GeneratingPair& pair, const LevyPath& path,
                                       const LevyTriplet& triplet) {
  const auto& grid = *path.grid;
  const std::size_t n = grid.size();
  const GeneratingPair* p = &pair;

  GeneralIntegrand shift;  // y (e^psi - 1) on |y| <= 1
  shift.g = [p](double s, double y, const PathHistory& h) {
    return std::abs(y) <= 1.0 ? y * std::expm1(p->psi(s, y, h)) : 0.0;
  };
  shift.cls = IntegrandClass::Psi1;
  shift.history_free = pair.deterministic();
  shift.time_homogeneous = pair.time_homogeneous();
  shift.y_breaks = {-1.0, 1.0};

  GeneralIntegrand small;  // y on |y| <= 1, compensated under Q
  small.g = [](double, double y, const PathHistory&) { return std::abs(y) <= 1.0 ? y : 0.0; };
  small.cls = IntegrandClass::Psi1Q;
  small.history_free = true;
  small.time_homogeneous = true;
  small.y_breaks = {-1.0, 1.0};

  RateEvaluator shift_rate(shift, triplet.nu, Compensator::P(), RateEvaluator::Transform::Identity, -1);
  RateEvaluator small_rate(small, triplet.nu, Compensator::Q(pair), RateEvaluator::Transform::Identity, -1);
  const auto shift_cum = cumulative_on_grid(shift_rate, path);
  const auto small_cum = cumulative_on_grid(small_rate, path);

  QDecomposition out;
  out.a_tilde.assign(n, 0.0);
  out.w_tilde.assign(n, 0.0);
  out.small_jumps.assign(n, 0.0);
  out.big_jumps.assign(n, 0.0);
  double phi_int = 0.0, small_sum = 0.0, big_sum = 0.0;
  std::size_t next = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = grid[k];
    if (k > 0) {
      const double t0 = grid[k - 1];
      phi_int += pair.phi(t0, PathHistory(path, t0, true)) * (t - t0);
    }
    while (next < path.jumps.size() && path.jumps[next].time <= t) {
      const double y = path.jumps[next++].size;
      (std::abs(y) <= 1.0 ? small_sum : big_sum) += y;
    }
    out.a_tilde[k] = triplet.a * t + triplet.q * phi_int + shift_cum[k];
    out.w_tilde[k] = path.brownian[k] - triplet.q * phi_int;
    out.small_jumps[k] = small_sum - small_cum[k];
    out.big_jumps[k] = big_sum;
    const double total = out.a_tilde[k] + out.w_tilde[k] + out.small_jumps[k] + out.big_jumps[k];
    out.max_residual = std::max(out.max_residual, std::abs(total - path.z[k]));
  }
  return out;
}

GeneralIntegrand transform_representation(const DensityModel& model, const RepresentationInput& input) {
  if (!model.pair().phi_is_zero() || model.triplet().q != 0.0) {
    throw DomainError("representation transform is implemented for the pure-jump case (phi = 0, q = 0)");
  }
  if (!input.m || !input.psi_m) throw DomainError("representation input needs M and psi_M");
  const DensityModel* mdl = &model;
  GeneralIntegrand out;
  out.cls = IntegrandClass::Psi12Q;
  out.name = "psi_tilde_M";
  out.y_breaks = model.pair().y_breaks();
  out.g = [mdl, m = input.m, psi_m = input.psi_m](double s, double y, const PathHistory& h) {
    const double psi = mdl->pair().psi(s, y, h);
    const double m_left = m(s, h);
    const double inv_rho_left = std::exp(-mdl->log_rho_left(h));
    return m_left * std::exp(-psi) * (-std::expm1(psi)) + inv_rho_left * std::exp(-psi) * psi_m(s, y, h);
  };
  return out;
}

TransformResult transform_and_verify(const DensityModel& model, const RepresentationInput& input,
                                     const LevyPath& path, double tolerance) {
  TransformResult out;
  out.integrand = transform_representation(model, input);
  const auto& nu = model.triplet().nu;
  out.class_result =
      class_check(out.integrand, nu, &model.pair(), IntegrandClass::Psi12Q, path.grid->horizon(), &path);
  if (!out.class_result.ok) {
    throw ClassError("transformed integrand is not in Psi12Q: " + out.class_result.message);
  }
  const auto rec = integrate_general(out.integrand, path, nu, Compensator::Q(model.pair()));
  const auto& grid = *path.grid;
  auto record = [&](double target, double value) {
    out.max_error = std::max(out.max_error, std::abs(value - target) / std::max(1.0, std::abs(target)));
  };
  for (std::size_t k = 0; k < grid.size(); ++k) {
    record(input.m(grid[k], PathHistory(path, grid[k], true)), input.m0 + rec.values[k]);
  }
  for (std::size_t j = 0; j < rec.jump_times.size(); ++j) {
    const double tau = rec.jump_times[j];
    record(input.m(tau, PathHistory(path, tau, true)), input.m0 + rec.jump_values[j]);
  }
  if (!(out.max_error <= tolerance)) {
    throw ReconstructionError("reconstructed martingale deviates by " + std::to_string(out.max_error));
  }
  return out;
}

}  // namespace levyhjm
