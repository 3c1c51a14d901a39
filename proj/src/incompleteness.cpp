#include "levyhjm/incompleteness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "levyhjm/errors.hpp"
#include "levyhjm/parallel.hpp"

namespace levyhjm {

// ------------------------------------------------------------------ witness

double ConcentrationWitness::epsilon(std::size_t n) const {
  if (n == 0 || epsilons.empty()) throw DomainError("witness: radii are indexed from 1");
  return std::ldexp(epsilons.front(), -static_cast<int>(n - 1));
}

std::size_t ConcentrationWitness::annulus_index(double y) const {
  const double d = std::abs(y - y0);
  const double eps1 = epsilons.front();
  if (d == 0.0 || d > eps1) return 0;
  auto n = static_cast<std::size_t>(std::floor(std::log2(eps1 / d))) + 1;
  while (n > 1 && d > epsilon(n)) --n;
  while (d <= epsilon(n + 1)) ++n;
  return n;
}

JumpSet ConcentrationWitness::annulus(std::size_t n) const {
  const double outer = epsilon(n);
  const double inner = epsilon(n + 1);
  return JumpSet{{y0 - outer, y0 - inner, true, false}, {y0 + inner, y0 + outer, false, true}};
}

ConcentrationWitness find_concentration_witness(const LevyMeasure& nu, double y0, std::size_t K, double eps1) {
  if (y0 == 0.0) throw DomainError("concentration point: y0 must be nonzero");
  if (K < 4) throw DomainError("concentration point: K must be at least 4");
  if (!(eps1 > 0.0) || !(eps1 < std::abs(y0))) {
    throw DomainError("concentration point: eps1 must lie in (0, |y0|)");
  }
  if (!nu.has_density()) {
    throw NotConcentratedError("concentration point: the Levy measure has no density (" + nu.family() + ")");
  }
  ConcentrationWitness w;
  w.y0 = y0;
  w.K = K;
  const std::size_t n_annuli = 2 * K + 2;
  for (std::size_t n = 1; n <= n_annuli + 1; ++n) w.epsilons.push_back(std::ldexp(eps1, -static_cast<int>(n - 1)));
  for (std::size_t n = 1; n <= n_annuli; ++n) {
    const double m = nu.mass(w.annulus(n));
    if (!(m > 0.0)) {
      std::ostringstream os;
      os << "concentration point: annulus " << n << " around " << y0 << " has zero mass";
      throw NotConcentratedError(os.str());
    }
    w.annulus_masses.push_back(m);
  }
  return w;
}

ConcentrationWitness find_concentration_witness(const LevyMeasure& nu, double y0, std::size_t K) {
  return find_concentration_witness(nu, y0, K, std::min(0.25, std::abs(y0) / 2.0));
}

// -------------------------------------------------------------- g function

CounterexampleG::CounterexampleG(ConcentrationWitness witness) : witness_(std::move(witness)) {
  if (witness_.epsilons.empty()) throw DomainError("counterexample: empty witness");
  const double y0 = witness_.y0;
  // Deeper annuli hold mass below the quadrature tolerance.
  for (std::size_t n = 1;; ++n) {
    const double e = witness_.epsilon(n);
    if (e < 0x1p-40 * std::abs(y0)) break;
    breaks_.push_back(y0 - e);
    breaks_.push_back(y0 + e);
  }
  breaks_.push_back(y0);
  breaks_.push_back(-1.0);
  breaks_.push_back(1.0);
  std::sort(breaks_.begin(), breaks_.end());
  breaks_.erase(std::unique(breaks_.begin(), breaks_.end()), breaks_.end());
}

double CounterexampleG::operator()(double y) const {
  const double base = std::min(std::abs(y), 1.0);
  const std::size_t n = witness_.annulus_index(y);
  return (n > 0 && n % 2 == 0) ? -base : base;
}

GeneralIntegrand CounterexampleG::integrand() const {
  GeneralIntegrand gi;
  gi.g = [self = *this](double, double y, const PathHistory&) { return self(y); };
  gi.cls = IntegrandClass::Psi12Q;
  gi.history_free = true;
  gi.time_homogeneous = true;
  gi.y_breaks = breaks_;
  gi.name = "counterexample_g";
  return gi;
}

namespace {

void require_homogeneous(const GeneratingPair& pair) {
  if (!pair.deterministic() || !pair.time_homogeneous()) {
    throw DomainError("counterexample: the generating pair must be deterministic and time-homogeneous");
  }
}

}  // namespace

double counterexample_rate(const CounterexampleG& g, const GeneratingPair& pair, const LevyMeasure& nu) {
  require_homogeneous(pair);
  std::vector<double> breaks = g.breaks();
  breaks.insert(breaks.end(), pair.y_breaks().begin(), pair.y_breaks().end());
  const PathHistory empty;
  return nu.integrate([&](double y) { return g(y) * std::exp(pair.psi(0.0, y, empty)); }, breaks).value;
}

// ----------------------------------------------------------------- stopping

double stopping_time(const CounterexampleG& g, std::span<const Jump> jumps, double rate, double k0, double until) {
  constexpr double never = std::numeric_limits<double>::infinity();
  if (!(k0 > 0.0)) return 0.0;
  double t = 0.0;
  double value = 0.0;
  // First time in (t, end] at which the affine piece value - rate (s - t) reaches +-k0.
  auto drift_crossing = [&](double end) {
    if (rate == 0.0) return never;
    const double gap = rate < 0.0 ? k0 - value : value + k0;
    const double hit = t + gap / std::abs(rate);
    return hit <= end ? hit : never;
  };
  for (const Jump& j : jumps) {
    if (j.time > until) break;
    const double hit = drift_crossing(j.time);
    if (hit < never) return hit;
    value += -rate * (j.time - t) + g(j.size);
    t = j.time;
    if (std::abs(value) >= k0) return t;
  }
  return drift_crossing(until);
}

StoppedIntegral stopped_integral(const CounterexampleG& g, const LevyPath& path, double rate, double k0) {
  const double horizon = path.grid->horizon();
  StoppedIntegral out;
  const double tau = stopping_time(g, path.jumps, rate, k0, horizon);
  out.stopped = tau <= horizon;
  out.tau = std::min(tau, horizon);
  double sum = 0.0;
  for (const Jump& j : path.jumps) {
    if (j.time > out.tau) break;
    sum += g(j.size);
  }
  out.value = sum - rate * out.tau;
  return out;
}

ClaimRepresentation build_counterexample_claim(const CounterexampleG& g, const MartingaleMeasureSpec& spec,
                                               double k0) {
  require_homogeneous(spec.pair);
  if (!(k0 > 0.0)) throw DegenerateStopError("counterexample: tau_k0 = 0 on every path for k0 <= 0");
  const GeneralIntegrand gi = g.integrand();
  const ClassCheck check = class_check(gi, spec.triplet.nu, &spec.pair, IntegrandClass::Psi12Q, 1.0);
  if (!check.ok) throw ClassError("counterexample: g is not of class Psi12Q: " + check.message);
  const double rate = counterexample_rate(g, spec.pair, spec.triplet.nu);

  ClaimRepresentation c;
  c.name = "counterexample";
  c.m0 = 0.0;
  c.f_x = [](double, const PathHistory&) { return 0.0; };
  c.g_x.g = [g, rate, k0](double s, double y, const PathHistory& h) {
    return stopping_time(g, h.jumps(), rate, k0, s) < s ? 0.0 : g(y);
  };
  c.g_x.cls = IntegrandClass::Psi12Q;
  c.g_x.y_breaks = g.breaks();
  c.g_x.name = "counterexample_stopped";
  c.payoff = [g, rate, k0](const LevyPath& path, const ForwardSurface&) {
    return stopped_integral(g, path, rate, k0).value;
  };
  return c;
}

StopLevelSelection select_stop_level(const CounterexampleG& g, const MartingaleMeasureSpec& spec,
                                     const McConfig& mc, double coverage) {
  require_homogeneous(spec.pair);
  if (!mc.grid || mc.n_paths == 0) throw DomainError("stop level: empty pilot");
  if (!(coverage > 0.0 && coverage <= 1.0)) throw DomainError("stop level: coverage must lie in (0, 1]");
  const double rate = counterexample_rate(g, spec.pair, spec.triplet.nu);
  // sup_t |I_t| is attained at a jump time (either side) or at T*.
  auto sups = parallel_map<double>(
      mc.n_paths,
      [&](std::size_t i) {
        const auto path = simulate_path(spec.triplet, mc.grid, {mc.seed, i});
        double t = 0.0, value = 0.0, sup = 0.0;
        for (const Jump& j : path.jumps) {
          value -= rate * (j.time - t);
          sup = std::max(sup, std::abs(value));
          value += g(j.size);
          sup = std::max(sup, std::abs(value));
          t = j.time;
        }
        value -= rate * (mc.grid->horizon() - t);
        return std::max(sup, std::abs(value));
      },
      mc.threads);
  std::sort(sups.begin(), sups.end());
  const auto m = static_cast<std::size_t>(std::ceil(coverage * static_cast<double>(mc.n_paths)));
  StopLevelSelection out;
  out.k0 = std::max(1.0, std::floor(sups[std::max<std::size_t>(m, 1) - 1]) + 1.0);
  const auto below = std::lower_bound(sups.begin(), sups.end(), out.k0) - sups.begin();
  out.unstopped_fraction = static_cast<double>(below) / static_cast<double>(mc.n_paths);
  out.n_paths = mc.n_paths;
  out.seed = mc.seed;
  return out;
}

// -------------------------------------------------------------- certificate

SurfaceSnapshot SurfaceSnapshot::from_surface(const ForwardSurface& surface, std::size_t step, std::size_t path) {
  if (step > surface.grid->steps()) throw DomainError("snapshot: step outside the grid");
  SurfaceSnapshot s;
  s.t = (*surface.grid)[step];
  s.path = path;
  s.step = step;
  for (std::size_t m = 0; m < surface.n_maturities(); ++m) {
    s.p_hat.push_back(surface.discounted(step, m));
    s.sigma.push_back(surface.sigma[surface.index(step, m)]);
  }
  return s;
}

double annulus_probe(const ConcentrationWitness& w, const LevyMeasure& nu, std::size_t n) {
  const double outer = w.epsilon(n);
  const double inner = w.epsilon(n + 1);
  const double left_mass = nu.mass(JumpSet::closed(w.y0 - outer, w.y0 - inner));
  const double right_mass = nu.mass(JumpSet::closed(w.y0 + inner, w.y0 + outer));
  double lo = right_mass > left_mass ? w.y0 + inner : w.y0 - outer;
  double hi = right_mass > left_mass ? w.y0 + outer : w.y0 - inner;
  const double base = lo;
  const double half = 0.5 * std::max(left_mass, right_mass);
  if (!(half > 0.0)) throw NotConcentratedError("probe: annulus carries no mass");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (nu.mass(JumpSet::closed(base, mid)) < half ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double moment_functional_ratio(const CounterexampleG& g, const SurfaceSnapshot& snapshot,
                               std::span<const double> points, std::span<const double> beta) {
  if (points.size() != beta.size() || points.empty()) throw DomainError("moment functional: one beta per point");
  double num = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) num += beta[i] * g(points[i]);
  double den = 0.0;
  for (std::size_t m = 0; m < snapshot.p_hat.size(); ++m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      acc += beta[i] * snapshot.p_hat[m] * std::expm1(-snapshot.sigma[m] * points[i]);
    }
    den = std::max(den, std::abs(acc));
  }
  return den > 0.0 ? std::abs(num) / den : std::numeric_limits<double>::infinity();
}

MomentCertificate moment_certificate(const CounterexampleG& g, const LevyMeasure& nu, const SurfaceSnapshot& snapshot,
                                     std::size_t n_pairs) {
  const ConcentrationWitness& w = g.witness();
  if (n_pairs == 0 || 2 * n_pairs > w.n_annuli()) {
    throw DomainError("moment certificate: need 2 * n_pairs stored annuli");
  }
  MomentCertificate c;
  for (std::size_t n = 1; n <= 2 * n_pairs; ++n) c.probes.push_back(annulus_probe(w, nu, n));
  for (std::size_t k = 0; k < n_pairs; ++k) {
    const double a1 = c.probes[2 * k];
    const double a2 = c.probes[2 * k + 1];
    double rhs = 0.0;
    for (std::size_t m = 0; m < snapshot.p_hat.size(); ++m) {
      const double s = snapshot.sigma[m];
      rhs = std::max(rhs, std::abs(snapshot.p_hat[m] * std::exp(-s * a2) * std::expm1(-s * (a1 - a2))));
    }
    const double lhs = std::abs(g(a1) - g(a2));
    c.lhs.push_back(lhs);
    c.rhs.push_back(rhs);
    c.ratio.push_back(rhs > 0.0 ? lhs / rhs : std::numeric_limits<double>::infinity());
  }
  c.k_min = n_pairs - 1;
  while (c.k_min > 0 && c.ratio[c.k_min - 1] < c.ratio[c.k_min]) --c.k_min;
  return c;
}

// --------------------------------------------------------------- experiment

double IncompletenessReport::min_ratio_growth() const {
  double out = std::numeric_limits<double>::infinity();
  for (const auto& c : certificates) out = std::min(out, c.ratio.back() / c.ratio.front());
  return out;
}

bool IncompletenessReport::tail_increasing(std::size_t from) const {
  return std::all_of(certificates.begin(), certificates.end(), [&](const MomentCertificate& c) { return c.k_min <= from; });
}

IncompletenessReport incompleteness_experiment(const CounterexampleG& g, const MarketModel& model,
                                               const IncompletenessConfig& config, const McConfig& mc) {
  if (config.levels == 0 || config.levels > 16) throw DomainError("incompleteness: levels must lie in [1, 16]");
  const std::size_t finest = std::size_t{1} << (config.levels - 1);
  const std::size_t n_intervals = model.maturities().size() - 1;
  const std::size_t steps = model.grid()->steps();
  if (n_intervals % finest != 0 || steps % finest != 0) {
    throw DomainError("incompleteness: maturity intervals and steps must be divisible by 2^(levels - 1)");
  }
  const MartingaleMeasureSpec& spec = model.spec();

  IncompletenessReport r;
  r.witness = g.witness();
  r.k0 = config.k0;
  r.rate = counterexample_rate(g, spec.pair, spec.triplet.nu);
  r.control_node = config.control_node == std::numeric_limits<std::size_t>::max() ? n_intervals : config.control_node;
  if (r.control_node == 0 || r.control_node > n_intervals) throw MaturityError("incompleteness: control node outside the grid");
  r.n_paths = mc.n_paths;
  r.seed = mc.seed;

  auto nodes_at = [&](std::size_t count) {
    std::vector<std::size_t> nodes;
    for (std::size_t j = 1; j <= count; ++j) nodes.push_back(n_intervals / count * j);
    return nodes;
  };
  const std::vector<ClaimRepresentation> claims{build_counterexample_claim(g, spec, config.k0),
                                                ClaimRepresentation::bond_payoff(r.control_node)};
  const HedgeProblem problem = build_hedge_problem(model, claims, HedgeBasis{nodes_at(finest), finest}, mc);
  for (std::size_t l = 0; l < config.levels; ++l) {
    const std::size_t count = std::size_t{1} << l;
    const HedgeProblem level = problem.restricted(nodes_at(count), count);
    const HedgeReport ce = solve_hedge(level, 0, config.reg_scale);
    const HedgeReport ctl = solve_hedge(level, 1, config.reg_scale);
    r.levels.push_back({count, count, ce.residual_l2, ctl.residual_l2});
    r.counterexample_l2 = ce.claim_l2;
    r.control_l2 = ctl.claim_l2;
  }
  const LevelResiduals& last = r.levels.back();
  r.separation = last.control > 0.0 ? last.counterexample / last.control : std::numeric_limits<double>::infinity();

  const std::size_t n_pairs = r.witness.n_annuli() / 2;
  r.snapshots = parallel_map<SurfaceSnapshot>(
      config.snapshots,
      [&](std::size_t j) {
        const auto path = simulate_path(spec.triplet, model.grid(), {mc.seed, j});
        const auto surface = model.evolve(path);
        return SurfaceSnapshot::from_surface(surface, steps * (j + 1) / (config.snapshots + 1), j);
      },
      mc.threads);
  r.certificates = parallel_map<MomentCertificate>(
      config.snapshots, [&](std::size_t j) { return moment_certificate(g, spec.triplet.nu, r.snapshots[j], n_pairs); },
      mc.threads);
  return r;
}

}  // namespace levyhjm
