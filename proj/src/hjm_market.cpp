#include "levyhjm/hjm_market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "levyhjm/errors.hpp"
#include "levyhjm/girsanov.hpp"
#include "levyhjm/parallel.hpp"
#include "levyhjm/quadrature.hpp"

namespace levyhjm {

// ---------------------------------------------------------------- volatility

VolatilitySpec::VolatilitySpec()
    : name_("zero"), sigma_([](double, double, const PathHistory&) { return 0.0; }),
      big_sigma_([](double, double) { return 0.0; }) {}

VolatilitySpec VolatilitySpec::constant(double c) {
  if (!std::isfinite(c)) throw DomainError("volatility: constant must be finite");
  VolatilitySpec v;
  v.name_ = "constant";
  v.sigma_ = [c](double, double, const PathHistory&) { return c; };
  v.big_sigma_ = [c](double s, double T) { return c * (T - s); };
  v.bound_ = std::abs(c);
  v.zero_ = c == 0.0;
  return v;
}

VolatilitySpec VolatilitySpec::exponential(double c, double kappa) {
  if (!std::isfinite(c) || !std::isfinite(kappa)) throw DomainError("volatility: parameters must be finite");
  if (kappa < 0.0) throw DomainError("volatility: kappa must be >= 0");
  VolatilitySpec v;
  v.name_ = "exponential";
  v.sigma_ = [c, kappa](double s, double T, const PathHistory&) { return c * std::exp(-kappa * (T - s)); };
  v.big_sigma_ = [c, kappa](double s, double T) {
    if (kappa == 0.0) return c * (T - s);
    return -c * std::expm1(-kappa * (T - s)) / kappa;
  };
  v.bound_ = std::abs(c);
  v.zero_ = c == 0.0;
  return v;
}

VolatilitySpec VolatilitySpec::custom(std::string name, SigmaFn sigma, double bound, bool deterministic,
                                      std::function<double(double, double)> big_sigma) {
  if (!sigma) throw DomainError("volatility: missing sigma evaluator");
  if (!(bound >= 0.0) || !std::isfinite(bound)) throw DomainError("volatility: bound must be finite and >= 0");
  VolatilitySpec v;
  v.name_ = std::move(name);
  v.sigma_ = std::move(sigma);
  v.big_sigma_ = std::move(big_sigma);
  v.bound_ = bound;
  v.deterministic_ = deterministic;
  v.zero_ = false;
  return v;
}

double VolatilitySpec::sigma(double s, double T, const PathHistory& h) const {
  if (s >= T || zero_) return 0.0;
  const double v = sigma_(s, T, h);
  if (!(std::abs(v) <= bound_ * (1.0 + 1e-12))) {
    std::ostringstream os;
    os << "volatility '" << name_ << "': |sigma(" << s << ", " << T << ")| = " << std::abs(v)
       << " exceeds the declared bound " << bound_;
    throw BoundError(os.str());
  }
  return v;
}

double VolatilitySpec::big_sigma(double s, double T, const PathHistory& h) const {
  if (s >= T || zero_) return 0.0;
  if (big_sigma_ && (deterministic_ || h.empty())) return big_sigma_(s, T);
  quad::Options opts;
  opts.rel_tol = 1e-12;
  return quad::integrate([&](double v) { return sigma(s, v, h); }, s, T, opts).value;
}

// --------------------------------------------------------------------- drift

namespace {

std::vector<double> drift_breaks(const MartingaleMeasureSpec& spec) {
  std::vector<double> b = spec.pair.y_breaks();
  b.push_back(-1.0);
  b.push_back(1.0);
  return b;
}

std::string sigma_message(const char* what, double s, double big_sigma) {
  std::ostringstream os;
  os << what << " diverges at s = " << s << ", Sigma = " << big_sigma;
  return os.str();
}

void require_moment(const MartingaleMeasureSpec& spec, double s, double big_sigma) {
  if (spec.pair.psi_is_zero() && !spec.triplet.nu.exponential_moment_finite(-big_sigma)) {
    throw MomentError(sigma_message("int e^{-Sigma y} nu(dy) over |y| > 1", s, big_sigma));
  }
}

double compensator_integral(const MartingaleMeasureSpec& spec, double s, double big_sigma,
                            const PathHistory& h) {
  const auto& nu = spec.triplet.nu;
  if (big_sigma == 0.0 || nu.is_zero()) return 0.0;
  require_moment(spec, s, big_sigma);
  const auto breaks = drift_breaks(spec);
  try {
    const auto r = nu.integrate(
        [&](double y) { return std::exp(spec.pair.psi(s, y, h)) * std::expm1(-big_sigma * y); }, breaks);
    return r.value;
  } catch (const DivergenceError&) {
    throw MomentError(sigma_message("int (e^{-Sigma y} - 1) e^psi nu(dy)", s, big_sigma));
  }
}

}  // namespace

DriftTerms hjm_drift_terms(const MartingaleMeasureSpec& spec, double s, double big_sigma, const PathHistory& h) {
  const auto& tr = spec.triplet;
  DriftTerms out;
  if (big_sigma == 0.0) return out;
  const double phi = tr.q == 0.0 ? 0.0 : spec.pair.phi(s, h);
  double jump = 0.0;
  if (!tr.nu.is_zero()) {
    require_moment(spec, s, big_sigma);
    const auto breaks = drift_breaks(spec);
    try {
      jump = tr.nu
                 .integrate(
                     [&](double y) {
                       const double small = std::abs(y) <= 1.0 ? big_sigma * y : 0.0;
                       return std::exp(spec.pair.psi(s, y, h)) * std::expm1(-big_sigma * y) + small;
                     },
                     breaks)
                 .value;
    } catch (const DivergenceError&) {
      throw MomentError(sigma_message("drift jump integral", s, big_sigma));
    }
    out.compensator = compensator_integral(spec, s, big_sigma, h);
  }
  out.drift = -big_sigma * tr.a + 0.5 * tr.q * big_sigma * big_sigma - tr.q * phi * big_sigma + jump;
  return out;
}

double hjm_drift(const MartingaleMeasureSpec& spec, double s, double T, const PathHistory& h) {
  return hjm_drift_terms(spec, s, spec.vol.big_sigma(s, T, h), h).drift;
}

double hjm_alpha(const MartingaleMeasureSpec& spec, double s, double T, const PathHistory& h) {
  const double sig = spec.vol.sigma(s, T, h);
  if (sig == 0.0) return 0.0;
  const auto& tr = spec.triplet;
  const double big = spec.vol.big_sigma(s, T, h);
  const double phi = tr.q == 0.0 ? 0.0 : spec.pair.phi(s, h);
  double jump = 0.0;
  if (!tr.nu.is_zero()) {
    require_moment(spec, s, big);
    const auto breaks = drift_breaks(spec);
    try {
      jump = tr.nu
                 .integrate(
                     [&](double y) {
                       const double small = std::abs(y) <= 1.0 ? y : 0.0;
                       return small - y * std::exp(spec.pair.psi(s, y, h) - big * y);
                     },
                     breaks)
                 .value;
    } catch (const DivergenceError&) {
      throw MomentError(sigma_message("drift derivative jump integral", s, big));
    }
  }
  return sig * (-tr.a + tr.q * big - tr.q * phi + jump);
}

// --------------------------------------------------------------------- curve

InitialCurve InitialCurve::flat(double rate) {
  if (!std::isfinite(rate)) throw DomainError("initial curve: rate must be finite");
  InitialCurve c;
  c.f_ = [rate](double) { return rate; };
  return c;
}

InitialCurve InitialCurve::tabulated(std::vector<double> knots, std::vector<double> values) {
  if (knots.empty() || knots.size() != values.size()) {
    throw DomainError("initial curve: knots and values must be non-empty and of equal length");
  }
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i] > knots[i - 1])) throw DomainError("initial curve: knots must increase");
  }
  InitialCurve c;
  c.f_ = [knots = std::move(knots), values = std::move(values)](double T) {
    if (T <= knots.front()) return values.front();
    if (T >= knots.back()) return values.back();
    const auto it = std::upper_bound(knots.begin(), knots.end(), T);
    const std::size_t i = static_cast<std::size_t>(it - knots.begin());
    const double w = (T - knots[i - 1]) / (knots[i] - knots[i - 1]);
    return values[i - 1] + w * (values[i] - values[i - 1]);
  };
  return c;
}

InitialCurve InitialCurve::custom(std::function<double(double)> f) {
  if (!f) throw DomainError("initial curve: missing evaluator");
  InitialCurve c;
  c.f_ = std::move(f);
  return c;
}

// ------------------------------------------------------------------- surface

double ForwardSurface::discounted(std::size_t k, std::size_t m) const { return std::exp(log_p_hat[index(k, m)]); }

double ForwardSurface::bond(std::size_t k, std::size_t m) const {
  const double t = (*grid)[k];
  const double T = maturities[m];
  if (t > T) throw MaturityError("bond price requested after maturity");
  // int_0^t f(t, u) du on the nodes, linear between nodes.
  const auto it = std::upper_bound(maturities.begin(), maturities.end(), t);
  const std::size_t j = static_cast<std::size_t>(it - maturities.begin()) - 1;
  double integral_to_t = -log_p_hat[index(k, j)];
  if (maturities[j] < t) {
    const double h = maturities[j + 1] - maturities[j];
    const double w = (t - maturities[j]) / h;
    const double f_t = forward(k, j) + w * (forward(k, j + 1) - forward(k, j));
    integral_to_t += 0.5 * (t - maturities[j]) * (forward(k, j) + f_t);
  }
  return std::exp(-(-log_p_hat[index(k, m)] - integral_to_t));
}

double ForwardSurface::short_rate(std::size_t k) const {
  const double t = (*grid)[k];
  if (t >= maturities.back()) return forward(k, maturities.size() - 1);
  const auto it = std::upper_bound(maturities.begin(), maturities.end(), t);
  const std::size_t j = static_cast<std::size_t>(it - maturities.begin()) - 1;
  if (maturities[j] == t) return forward(k, j);
  const double w = (t - maturities[j]) / (maturities[j + 1] - maturities[j]);
  return forward(k, j) + w * (forward(k, j + 1) - forward(k, j));
}

std::size_t ForwardSurface::maturity_index(double T) const {
  for (std::size_t m = 0; m < maturities.size(); ++m) {
    if (std::abs(maturities[m] - T) <= 1e-12 * std::max(1.0, std::abs(T))) return m;
  }
  std::ostringstream os;
  os << "maturity " << T << " is not a node of the maturity grid";
  throw MaturityError(os.str());
}

// --------------------------------------------------------------------- model

namespace {

struct StepRows {
  std::vector<double> node_sigma;  // sigma(t, u_j)
  std::vector<double> big_sigma;   // discrete Sigma(t, u_m)
  std::vector<double> drift;       // A(t, u_m)
  std::vector<double> alpha;       // alpha(t, u_j)
  std::vector<double> comp;        // jump compensator (hjm mode only)
};

using DriftMemo = std::map<double, DriftTerms>;

}  // namespace

struct MarketModel::Impl {
  const MarketModel* owner = nullptr;
  std::vector<double> spacing;  // u_m - u_{m-1}, spacing[0] = 0
  bool cached = false;
  bool memo_by_sigma = false;
  std::vector<StepRows> rows;  // per step, deterministic specs only

  std::size_t n() const { return owner->maturities_.size(); }

  void cumulative_trapezoid(const std::vector<double>& v, std::vector<double>& out) const {
    out.assign(n(), 0.0);
    for (std::size_t m = 1; m < n(); ++m) out[m] = out[m - 1] + 0.5 * spacing[m] * (v[m - 1] + v[m]);
  }

  void node_sigmas(double t, const PathHistory& h, std::vector<double>& out) const {
    out.assign(n(), 0.0);
    for (std::size_t j = 0; j < n(); ++j) out[j] = owner->spec_.vol.sigma(t, owner->maturities_[j], h);
  }

  DriftTerms drift_terms(double t, double big, const PathHistory& h, DriftMemo* memo) const {
    if (memo != nullptr) {
      const auto it = memo->find(big);
      if (it != memo->end()) return it->second;
      const auto terms = hjm_drift_terms(owner->spec_, t, big, h);
      memo->emplace(big, terms);
      return terms;
    }
    return hjm_drift_terms(owner->spec_, t, big, h);
  }

  // Drift rows from the drift condition; alpha inverts the trapezoid so that
  // sum_j w_j alpha_j = A on every node.
  void hjm_rows(double t, const PathHistory& h, DriftMemo* memo, StepRows& r, double shift) const {
    const auto& u = owner->maturities_;
    r.drift.assign(n(), 0.0);
    r.comp.assign(n(), 0.0);
    r.alpha.assign(n(), 0.0);
    for (std::size_t m = 0; m < n(); ++m) {
      if (u[m] <= t) continue;
      const auto terms = drift_terms(t, r.big_sigma[m], h, memo);
      r.drift[m] = terms.drift + shift;
      r.comp[m] = terms.compensator;
    }
    for (std::size_t m = 1; m < n(); ++m) {
      if (u[m] <= t) continue;
      r.alpha[m] = 2.0 * (r.drift[m] - r.drift[m - 1]) / spacing[m] - r.alpha[m - 1];
    }
  }

  void explicit_rows(double t, const PathHistory& h, StepRows& r) const {
    const auto& u = owner->maturities_;
    r.alpha.assign(n(), 0.0);
    for (std::size_t j = 0; j < n(); ++j) {
      if (u[j] > t) r.alpha[j] = owner->drift_.alpha(t, u[j], h);
    }
    cumulative_trapezoid(r.alpha, r.drift);
    r.comp.clear();
  }

  StepRows step_rows(double t, const PathHistory& h, DriftMemo* memo) const {
    StepRows r;
    node_sigmas(t, h, r.node_sigma);
    cumulative_trapezoid(r.node_sigma, r.big_sigma);
    if (owner->drift_.mode == DriftSpec::Mode::Hjm) {
      hjm_rows(t, h, memo, r, owner->drift_.shift);
    } else {
      explicit_rows(t, h, r);
    }
    return r;
  }
};

MarketModel::MarketModel(MartingaleMeasureSpec spec, InitialCurve curve, std::vector<double> maturities,
                         GridPtr grid, DriftSpec drift)
    : spec_(std::move(spec)), maturities_(std::move(maturities)), grid_(std::move(grid)), drift_(std::move(drift)),
      impl_(std::make_unique<Impl>()) {
  if (!grid_) throw DomainError("market: missing grid");
  spec_.triplet.validate();
  if (maturities_.size() < 2) throw MaturityError("market: need at least two maturity nodes");
  if (maturities_.front() != 0.0) throw MaturityError("market: the maturity grid must start at 0");
  for (std::size_t m = 0; m < maturities_.size(); ++m) {
    const std::size_t k = grid_->index_of(maturities_[m]);
    if (k == TimeGrid::npos) {
      std::ostringstream os;
      os << "market: maturity " << maturities_[m] << " is not a simulation grid time";
      throw MaturityError(os.str());
    }
    maturities_[m] = (*grid_)[k];
    if (m > 0 && !(maturities_[m] > maturities_[m - 1])) {
      throw MaturityError("market: maturities must be strictly increasing");
    }
  }
  if (drift_.mode == DriftSpec::Mode::Explicit && !drift_.alpha) {
    throw DomainError("market: explicit drift mode needs an alpha evaluator");
  }
  if (!std::isfinite(drift_.shift)) throw DomainError("market: drift shift must be finite");

  impl_->owner = this;
  impl_->spacing.assign(maturities_.size(), 0.0);
  for (std::size_t m = 1; m < maturities_.size(); ++m) impl_->spacing[m] = maturities_[m] - maturities_[m - 1];
  f0_.resize(maturities_.size());
  for (std::size_t m = 0; m < maturities_.size(); ++m) f0_[m] = curve(maturities_[m]);

  impl_->cached = spec_.deterministic();
  impl_->memo_by_sigma = impl_->cached && spec_.pair.time_homogeneous();
  if (impl_->cached) {
    DriftMemo memo;
    impl_->rows.reserve(grid_->steps());
    for (std::size_t k = 0; k < grid_->steps(); ++k) {
      impl_->rows.push_back(impl_->step_rows((*grid_)[k], PathHistory(), impl_->memo_by_sigma ? &memo : nullptr));
    }
  }
}

MarketModel::~MarketModel() = default;

double MarketModel::trapezoid_weight(std::size_t m, std::size_t j) const {
  if (j > m || m == 0) return 0.0;
  const auto& h = impl_->spacing;
  if (j == 0) return 0.5 * h[1];
  if (j == m) return 0.5 * h[m];
  return 0.5 * (h[j] + h[j + 1]);
}

double MarketModel::jump_compensator_at(double s, double big_sigma, const PathHistory& h) const {
  return compensator_integral(spec_, s, big_sigma, h);
}

double MarketModel::jump_compensator(const ForwardSurface& surface, std::size_t k, std::size_t m,
                                     const PathHistory& h) const {
  if (impl_->cached && drift_.mode == DriftSpec::Mode::Hjm) return impl_->rows[k].comp[m];
  return jump_compensator_at((*grid_)[k], surface.sigma[surface.index(k, m)], h);
}

ForwardSurface MarketModel::evolve(const LevyPath& path) const {
  if (!path.grid || path.grid->size() != grid_->size()) throw DomainError("market: path grid does not match");
  const std::size_t nm = maturities_.size();
  const std::size_t steps = grid_->steps();
  const auto& tr = spec_.triplet;
  const double small_drift = tr.nu.small_jump_drift();

  ForwardSurface s;
  s.grid = grid_;
  s.maturities = maturities_;
  const std::size_t cells = (steps + 1) * nm;
  s.f.assign(cells, 0.0);
  s.alpha.assign(cells, 0.0);
  s.sigma.assign(cells, 0.0);
  s.drift.assign(cells, 0.0);
  s.log_p_hat.assign(cells, 0.0);
  s.jumps = path.jumps;
  s.jump_step.reserve(path.jumps.size());
  s.jump_sigma.assign(path.jumps.size() * nm, 0.0);
  s.jump_log_p_hat.assign(path.jumps.size() * nm, 0.0);

  auto fill_log_p_hat = [&](std::size_t k) {
    double acc = 0.0;
    s.log_p_hat[s.index(k, 0)] = 0.0;
    for (std::size_t m = 1; m < nm; ++m) {
      acc += 0.5 * impl_->spacing[m] * (s.f[s.index(k, m - 1)] + s.f[s.index(k, m)]);
      s.log_p_hat[s.index(k, m)] = -acc;
    }
  };

  std::copy(f0_.begin(), f0_.end(), s.f.begin());
  fill_log_p_hat(0);

  std::vector<double> jump_nodes, jump_big, running(nm);
  std::size_t next_jump = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = (*grid_)[k];
    const double t1 = (*grid_)[k + 1];
    const double dt = grid_->dt(k);
    StepRows local;
    const StepRows* rows = nullptr;
    if (impl_->cached) {
      rows = &impl_->rows[k];
    } else {
      local = impl_->step_rows(t, PathHistory(path, t, true), nullptr);
      rows = &local;
    }
    for (std::size_t m = 0; m < nm; ++m) {
      s.alpha[s.index(k, m)] = rows->alpha[m];
      s.sigma[s.index(k, m)] = rows->big_sigma[m];
      s.drift[s.index(k, m)] = rows->drift[m];
    }

    const double dz = tr.a * dt + (path.brownian[k + 1] - path.brownian[k]) - small_drift * dt;
    for (std::size_t m = 0; m < nm; ++m) {
      double f = s.f[s.index(k, m)];
      if (maturities_[m] > t) f += rows->alpha[m] * dt + rows->node_sigma[m] * dz;
      s.f[s.index(k + 1, m)] = f;
    }

    for (std::size_t m = 0; m < nm; ++m) running[m] = s.log_p_hat[s.index(k, m)];
    while (next_jump < path.jumps.size() && path.jumps[next_jump].time <= t1) {
      const auto& jump = path.jumps[next_jump];
      const PathHistory h = impl_->cached ? PathHistory() : PathHistory(path, jump.time);
      impl_->node_sigmas(jump.time, h, jump_nodes);
      impl_->cumulative_trapezoid(jump_nodes, jump_big);
      s.jump_step.push_back(k);
      for (std::size_t m = 0; m < nm; ++m) {
        s.jump_sigma[next_jump * nm + m] = jump_big[m];
        s.jump_log_p_hat[next_jump * nm + m] = running[m];
        running[m] -= jump_big[m] * jump.size;
        if (maturities_[m] > t) s.f[s.index(k + 1, m)] += jump_nodes[m] * jump.size;
      }
      ++next_jump;
    }
    fill_log_p_hat(k + 1);
  }
  return s;
}

ForwardSurface evolve_forward(const MarketModel& model, const LevyPath& path) { return model.evolve(path); }

// ----------------------------------------------------------------- SDE check

double discounted_price_sde_check(const MarketModel& model, const ForwardSurface& surface, const LevyPath& path) {
  const auto& grid = *model.grid();
  const auto& spec = model.spec();
  const double q = spec.triplet.q;
  const std::size_t nm = surface.n_maturities();
  std::vector<double> x(nm);
  for (std::size_t m = 0; m < nm; ++m) x[m] = surface.discounted(0, m);

  double worst = 0.0;
  std::size_t j = 0;
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    const double t = grid[k];
    const double dt = grid.dt(k);
    const PathHistory h(path, t, true);
    const double phi = q == 0.0 ? 0.0 : spec.pair.phi(t, h);
    const double dw = (path.brownian[k + 1] - path.brownian[k]) - q * phi * dt;
    for (; j < surface.jumps.size() && surface.jump_step[j] == k; ++j) {
      for (std::size_t m = 0; m < nm; ++m) x[m] *= std::exp(-surface.jump_sigma[j * nm + m] * surface.jumps[j].size);
    }
    for (std::size_t m = 0; m < nm; ++m) {
      const double big = surface.sigma[surface.index(k, m)];
      if (big == 0.0) continue;
      const double c = model.jump_compensator(surface, k, m, h);
      x[m] *= std::exp(-c * dt);
      x[m] *= 1.0 - big * dw + 0.5 * big * big * (dw * dw - q * dt);
    }
    for (std::size_t m = 0; m < nm; ++m) {
      const double exact = surface.discounted(k + 1, m);
      worst = std::max(worst, std::abs(x[m] - exact) / exact);
    }
  }
  return worst;
}

// ------------------------------------------------------- martingale conditions

bool MartingaleConditions::ok() const {
  if (!cond1_finite) return false;
  return std::all_of(cond2_finite.begin(), cond2_finite.end(), [](bool b) { return b; });
}

void MartingaleConditions::require() const {
  if (ok()) return;
  std::string all;
  for (const auto& m : messages) all += (all.empty() ? "" : "; ") + m;
  throw MomentError("martingale conditions fail: " + all);
}

MartingaleConditions check_martingale_conditions(const MarketModel& model) {
  const auto& spec = model.spec();
  const auto& nu = spec.triplet.nu;
  const auto& grid = *model.grid();
  const auto& u = model.maturities();
  const PathHistory none;
  const auto breaks = drift_breaks(spec);
  quad::Options outer;
  outer.rel_tol = 1e-8;
  outer.abs_tol = 1e-14;
  const auto grid_times = grid.times();
  const std::vector<double> s_breaks(grid_times.begin(), grid_times.end());

  MartingaleConditions out;
  const JumpSet inner_set = JumpSet::closed(-1.0, 1.0);
  const JumpSet outer_set = JumpSet::abs_above(1.0);

  auto cond1_rate = [&](double s) {
    if (nu.is_zero()) return 0.0;
    return nu.integrate([&](double y) { return std::abs(std::expm1(spec.pair.psi(s, y, none))); }, inner_set, breaks)
        .value;
  };
  try {
    if (spec.pair.time_homogeneous()) {
      out.cond1 = grid.horizon() * cond1_rate(0.0);
    } else {
      out.cond1 = quad::integrate_piecewise(cond1_rate, 0.0, grid.horizon(), s_breaks, outer).value;
    }
  } catch (const DivergenceError& e) {
    out.cond1 = std::numeric_limits<double>::infinity();
    out.cond1_finite = false;
    out.messages.push_back(std::string("cond1 diverges: ") + e.what());
  }

  out.cond2.assign(u.size(), 0.0);
  out.cond2_finite.assign(u.size(), true);
  for (std::size_t m = 1; m < u.size(); ++m) {
    const double T = u[m];
    auto rate = [&](double s) {
      if (nu.is_zero()) return 0.0;
      const double big = spec.vol.big_sigma(s, T, none);
      if (spec.pair.psi_is_zero() && !nu.exponential_moment_finite(-big)) {
        throw DivergenceError(sigma_message("int_{|y|>1} e^{-Sigma y} nu(dy)", s, big));
      }
      return nu.integrate([&](double y) { return std::exp(spec.pair.psi(s, y, none) - big * y); }, outer_set, breaks)
          .value;
    };
    try {
      out.cond2[m] = quad::integrate_piecewise(rate, 0.0, T, s_breaks, outer).value;
    } catch (const DivergenceError& e) {
      out.cond2[m] = std::numeric_limits<double>::infinity();
      out.cond2_finite[m] = false;
      std::ostringstream os;
      os << "cond2 diverges for T = " << T << ": " << e.what();
      out.messages.push_back(os.str());
    }
  }

  // Drift residual on the (grid time, maturity node) lattice.
  if (out.ok()) {
    const bool memo_ok = spec.deterministic() && spec.pair.time_homogeneous();
    DriftMemo memo;
    auto drift_at = [&](double t, double big_sigma) {
      if (!memo_ok) return hjm_drift_terms(spec, t, big_sigma, none);
      const auto it = memo.find(big_sigma);
      if (it != memo.end()) return it->second;
      return memo.emplace(big_sigma, hjm_drift_terms(spec, t, big_sigma, none)).first->second;
    };
    std::vector<double> nodes, big, alpha, integrated;
    try {
      for (std::size_t k = 0; k < grid.steps(); ++k) {
        const double t = grid[k];
        nodes.assign(u.size(), 0.0);
        for (std::size_t j = 0; j < u.size(); ++j) nodes[j] = spec.vol.sigma(t, u[j], none);
        big.assign(u.size(), 0.0);
        alpha.assign(u.size(), 0.0);
        for (std::size_t m = 1; m < u.size(); ++m) {
          big[m] = big[m - 1] + 0.5 * (u[m] - u[m - 1]) * (nodes[m - 1] + nodes[m]);
        }
        // Supplied drift for this step, as used by the surface.
        const auto& d = model.drift_spec();
        std::vector<double> supplied(u.size(), 0.0);
        if (d.mode == DriftSpec::Mode::Hjm) {
          std::vector<double> a_rows(u.size(), 0.0);
          for (std::size_t m = 0; m < u.size(); ++m) {
            if (u[m] <= t) continue;
            a_rows[m] = drift_at(t, big[m]).drift + d.shift;
          }
          for (std::size_t m = 1; m < u.size(); ++m) {
            if (u[m] > t) alpha[m] = 2.0 * (a_rows[m] - a_rows[m - 1]) / (u[m] - u[m - 1]) - alpha[m - 1];
          }
        } else {
          for (std::size_t j = 0; j < u.size(); ++j) alpha[j] = u[j] > t ? d.alpha(t, u[j], none) : 0.0;
        }
        integrated.assign(u.size(), 0.0);
        for (std::size_t m = 1; m < u.size(); ++m) {
          integrated[m] = integrated[m - 1] + 0.5 * (u[m] - u[m - 1]) * (alpha[m - 1] + alpha[m]);
        }
        for (std::size_t m = 1; m < u.size(); ++m) {
          if (u[m] <= t) continue;
          out.drift_formula_residual =
              std::max(out.drift_formula_residual, std::abs(integrated[m] - drift_at(t, big[m]).drift));
        }
      }
    } catch (const MomentError& e) {
      out.drift_formula_residual = std::numeric_limits<double>::infinity();
      out.messages.push_back(std::string("drift residual: ") + e.what());
    }
  } else {
    out.drift_formula_residual = std::numeric_limits<double>::infinity();
  }
  return out;
}

// -------------------------------------------------------- martingale MC test

DiscountedMartingaleTest discounted_martingale_test(const MarketModel& model, std::vector<std::size_t> maturity_nodes,
                                                    const McConfig& mc) {
  const auto& grid = model.grid();
  const std::size_t nm = maturity_nodes.size();
  for (auto m : maturity_nodes) {
    if (m >= model.maturities().size()) throw MaturityError("martingale test: maturity node out of range");
  }
  const std::size_t rows = grid->size();
  const auto& spec = model.spec();
  DensityModel density(spec.pair, spec.triplet, grid);

  DiscountedMartingaleTest out;
  out.maturity_nodes = maturity_nodes;
  out.n_paths = mc.n_paths;
  out.seed = mc.seed;
  out.initial.resize(nm);
  {
    double acc = 0.0;
    std::vector<double> log0(model.maturities().size(), 0.0);
    const auto& u = model.maturities();
    const auto& f0 = model.initial_forward();
    for (std::size_t m = 1; m < u.size(); ++m) {
      acc += 0.5 * (u[m] - u[m - 1]) * (f0[m - 1] + f0[m]);
      log0[m] = -acc;
    }
    for (std::size_t i = 0; i < nm; ++i) out.initial[i] = std::exp(log0[maturity_nodes[i]]);
  }

  constexpr std::size_t kBlock = 256;
  const std::size_t n_blocks = (mc.n_paths + kBlock - 1) / kBlock;
  struct Sums {
    std::vector<double> s1, s2;
  };
  auto blocks = parallel_map<Sums>(
      n_blocks,
      [&](std::size_t b) {
        Sums sums;
        sums.s1.assign(rows * nm, 0.0);
        sums.s2.assign(rows * nm, 0.0);
        const std::size_t end = std::min(mc.n_paths, (b + 1) * kBlock);
        for (std::size_t i = b * kBlock; i < end; ++i) {
          const auto path = simulate_path(spec.triplet, grid, {mc.seed, i});
          const auto surface = model.evolve(path);
          const auto rho = density.path(path).rho;
          for (std::size_t k = 0; k < rows; ++k) {
            for (std::size_t c = 0; c < nm; ++c) {
              const double d = rho[k] * surface.discounted(k, maturity_nodes[c]) - out.initial[c];
              sums.s1[k * nm + c] += d;
              sums.s2[k * nm + c] += d * d;
            }
          }
        }
        return sums;
      },
      mc.threads);

  std::vector<double> s1(rows * nm, 0.0), s2(rows * nm, 0.0);
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < s1.size(); ++i) {
      s1[i] += b.s1[i];
      s2[i] += b.s2[i];
    }
  }
  const double n = static_cast<double>(mc.n_paths);
  out.mean.assign(rows * nm, 0.0);
  out.std_error.assign(rows * nm, 0.0);
  for (std::size_t k = 0; k < rows; ++k) {
    for (std::size_t c = 0; c < nm; ++c) {
      const std::size_t i = k * nm + c;
      const double mean_d = s1[i] / n;
      const double var = n > 1 ? std::max(0.0, (s2[i] - n * mean_d * mean_d) / (n - 1.0)) : 0.0;
      out.mean[i] = out.initial[c] + mean_d;
      out.std_error[i] = std::sqrt(var / n);
      if (out.std_error[i] > 0.0) out.max_abs_z = std::max(out.max_abs_z, std::abs(mean_d) / out.std_error[i]);
    }
  }
  return out;
}

}  // namespace levyhjm
