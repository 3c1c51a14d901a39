#include "levyhjm/jump_calculus.hpp"

#include <algorithm>
#include <cmath>

#include "levyhjm/errors.hpp"
#include "levyhjm/jump_calculus_detail.hpp"

namespace levyhjm {

bool is_q_class(IntegrandClass c) {
  return c == IntegrandClass::Psi1Q || c == IntegrandClass::Psi2Q || c == IntegrandClass::Psi12Q;
}

std::string to_string(IntegrandClass c) {
  switch (c) {
    case IntegrandClass::Psi1: return "Psi1";
    case IntegrandClass::Psi2: return "Psi2";
    case IntegrandClass::Psi12: return "Psi12";
    case IntegrandClass::Psi1Q: return "Psi1Q";
    case IntegrandClass::Psi2Q: return "Psi2Q";
    case IntegrandClass::Psi12Q: return "Psi12Q";
  }
  return "?";
}

IntegrandClass integrand_class_from_string(const std::string& s) {
  for (auto c : {IntegrandClass::Psi1, IntegrandClass::Psi2, IntegrandClass::Psi12, IntegrandClass::Psi1Q,
                 IntegrandClass::Psi2Q, IntegrandClass::Psi12Q}) {
    if (to_string(c) == s) return c;
  }
  throw DomainError("unknown integrand class '" + s + "'");
}

SimpleTerm SimpleTerm::constant(JumpSet set, double c) {
  return {std::move(set), [c](const PathHistory&) { return c; }};
}

SimpleIntegrand SimpleIntegrand::indicator(double horizon, JumpSet set, double c) {
  SimpleIntegrand g;
  g.partition = {0.0, horizon};
  g.terms = {{SimpleTerm::constant(std::move(set), c)}};
  g.bound = std::abs(c);
  return g;
}

void SimpleIntegrand::validate() const {
  if (partition.size() < 2 || partition.front() != 0.0) {
    throw DomainError("simple integrand: partition must start at 0 and have at least two points");
  }
  for (std::size_t i = 1; i < partition.size(); ++i) {
    if (!(partition[i] > partition[i - 1])) throw DomainError("simple integrand: partition must increase");
  }
  if (terms.size() != partition.size() - 1) {
    throw DomainError("simple integrand: need one term list per partition interval");
  }
  if (!(bound >= 0.0)) throw DomainError("simple integrand: bound must be >= 0");
  for (const auto& row : terms) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      row[j].set.require_separated("simple integrand");
      if (!row[j].coefficient) throw DomainError("simple integrand: missing coefficient");
      for (std::size_t k = j + 1; k < row.size(); ++k) {
        if (!row[j].set.intersected(row[k].set).empty()) {
          throw DomainError("simple integrand: sets " + row[j].set.describe() + " and " +
                            row[k].set.describe() + " overlap");
        }
      }
    }
  }
}

namespace {

double coefficient_at(const SimpleTerm& term, const PathHistory& h, double bound) {
  const double c = term.coefficient(h);
  if (!(std::abs(c) <= bound)) {
    throw BoundError("simple integrand coefficient " + std::to_string(c) + " exceeds declared bound " +
                     std::to_string(bound));
  }
  return c;
}

}  // namespace

IntegralPath integrate_simple_P(const SimpleIntegrand& g, const LevyPath& path, const LevyMeasure& nu) {
  g.validate();
  const auto& grid = *path.grid;
  const double horizon = grid.horizon();
  if (g.partition.back() > horizon * (1.0 + 1e-12)) {
    throw DomainError("simple integrand partition extends past the path horizon");
  }

  // Coefficients and masses per (i, j).
  const std::size_t n = g.terms.size();
  std::vector<std::vector<double>> coef(n), mass(n);
  for (std::size_t i = 0; i < n; ++i) {
    PathHistory through(path, g.partition[i], true);
    for (const auto& term : g.terms[i]) {
      coef[i].push_back(coefficient_at(term, through, g.bound));
      mass[i].push_back(nu.mass(term.set));
    }
  }

  // Compensator slope at time s (for s in (t_i, t_{i+1}]).
  auto interval_of = [&](double s) -> std::size_t {
    auto it = std::lower_bound(g.partition.begin(), g.partition.end(), s);
    if (it == g.partition.begin()) return n;  // s <= 0
    const auto i = static_cast<std::size_t>(it - g.partition.begin()) - 1;
    return i < n ? i : n;
  };
  auto compensator_to = [&](double t) {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double lo = std::min(g.partition[i], t);
      const double hi = std::min(g.partition[i + 1], t);
      if (hi <= lo) continue;
      for (std::size_t j = 0; j < coef[i].size(); ++j) c += coef[i][j] * mass[i][j] * (hi - lo);
    }
    return c;
  };
  auto jump_value = [&](const Jump& jump) {
    const std::size_t i = interval_of(jump.time);
    if (i == n) return 0.0;
    double v = 0.0;
    for (std::size_t j = 0; j < coef[i].size(); ++j) {
      if (g.terms[i][j].set.contains(jump.size)) v += coef[i][j];
    }
    return v;
  };

  IntegralPath out;
  out.grid = path.grid;
  out.values.resize(grid.size());
  double jump_sum = 0.0;
  std::size_t next = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid[k];
    while (next < path.jumps.size() && path.jumps[next].time <= t) {
      const auto& jump = path.jumps[next++];
      const double dj = jump_value(jump);
      jump_sum += dj;
      out.jump_times.push_back(jump.time);
      out.jump_sizes.push_back(dj);
      out.jump_values.push_back(jump_sum - compensator_to(jump.time));
    }
    out.values[k] = jump_sum - compensator_to(t);
  }
  return out;
}

GeneralIntegrand GeneralIntegrand::from_simple(const SimpleIntegrand& simple, bool q) {
  simple.validate();
  GeneralIntegrand out;
  out.cls = q ? IntegrandClass::Psi2Q : IntegrandClass::Psi2;
  out.name = "simple";
  out.s_breaks = simple.partition;
  for (const auto& row : simple.terms) {
    for (const auto& term : row) {
      auto e = term.set.endpoints();
      out.y_breaks.insert(out.y_breaks.end(), e.begin(), e.end());
    }
  }
  out.g = [simple](double s, double y, const PathHistory& h) {
    const auto& p = simple.partition;
    auto it = std::lower_bound(p.begin(), p.end(), s);
    if (it == p.begin() || it == p.end()) return 0.0;
    const auto i = static_cast<std::size_t>(it - p.begin()) - 1;
    const PathHistory through = h.truncated(p[i], true);
    for (const auto& term : simple.terms[i]) {
      if (term.set.contains(y)) return coefficient_at(term, through, simple.bound);
    }
    return 0.0;
  };
  return out;
}

// ---------------------------------------------------------------------------
// Compensator rates

namespace detail {

RateEvaluator::RateEvaluator(const GeneralIntegrand& g, const LevyMeasure& nu, Compensator comp, Transform tf,
                             int part)
    : g_(g), nu_(nu), comp_(comp), transform_(tf), part_(part) {
  breaks_ = g.y_breaks;
  if (comp.is_q()) {
    const auto& pb = comp.pair->y_breaks();
    breaks_.insert(breaks_.end(), pb.begin(), pb.end());
  }
  history_free_ = g.history_free && (!comp.is_q() || comp.pair->deterministic());
  time_homogeneous_ = g.time_homogeneous && (!comp.is_q() || comp.pair->time_homogeneous());
  if (history_free_ && time_homogeneous_ && tf == Transform::Identity) {
    constant_rate_ = rate_uncached(0.0, PathHistory(), false);
  }
}

double RateEvaluator::integrand_raw(double s, double y, const PathHistory& h) const {
  const double v = g_.g(s, y, h);
  if (part_ == 0 && std::abs(v) > 1.0) return 0.0;
  if (part_ == 1 && !(std::abs(v) > 1.0)) return 0.0;
  return v;
}

double RateEvaluator::integrand(double s, double y, const PathHistory& h) const {
  double v = integrand_raw(s, y, h);
  switch (transform_) {
    case Transform::Identity: break;
    case Transform::Abs: v = std::abs(v); break;
    case Transform::Square: v = v * v; break;
    case Transform::MinSquareAbs: v = std::min(v * v, std::abs(v)); break;
  }
  if (v != 0.0 && comp_.is_q()) v *= std::exp(comp_.pair->psi(s, y, h));
  return v;
}

double RateEvaluator::rate(double s, const PathHistory& h, bool full_measure) const {
  if (history_free_ && time_homogeneous_ && transform_ == Transform::Identity && !full_measure) {
    return constant_rate_;
  }
  return rate_uncached(s, h, full_measure);
}

double RateEvaluator::rate_uncached(double s, const PathHistory& h, bool full_measure) const {
  // A single captured pointer keeps the std::function below allocation-free.
  const struct {
    const RateEvaluator* ev;
    double s;
    const PathHistory* h;
  } ctx{this, s, &h};
  auto f = [c = &ctx](double y) { return c->ev->integrand(c->s, y, *c->h); };
  auto r = full_measure ? nu_.integrate(f, breaks_) : nu_.integrate_simulated(f, breaks_);
  return r.value;
}

double RateEvaluator::over(double a, double b, const PathHistory& h) const {
  if (!(b > a)) return 0.0;
  if (time_homogeneous_) return rate(0.5 * (a + b), h) * (b - a);
  // Two-point Gauss-Legendre per piece between s-discontinuities.
  static const double kNode = 0.5 / std::sqrt(3.0);
  auto piece = [&](double lo, double hi) {
    const double mid = 0.5 * (lo + hi), len = hi - lo;
    return 0.5 * len * (rate(mid - kNode * len, h) + rate(mid + kNode * len, h));
  };
  const bool interior_break =
      std::any_of(g_.s_breaks.begin(), g_.s_breaks.end(), [&](double sb) { return sb > a && sb < b; });
  if (!interior_break) return piece(a, b);
  std::vector<double> cuts{a};
  for (double sb : g_.s_breaks) {
    if (sb > a && sb < b) cuts.push_back(sb);
  }
  std::sort(cuts.begin() + 1, cuts.end());
  cuts.push_back(b);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] > cuts[i]) total += piece(cuts[i], cuts[i + 1]);
  }
  return total;
}

// Cumulative int_0^{t_k} rate ds at grid times, split at jump times so that
// the strict-past history is constant on every piece.
std::vector<double> cumulative_on_grid(const RateEvaluator& ev, const LevyPath& path) {
  const auto& grid = *path.grid;
  std::vector<double> cum(grid.size(), 0.0);
  double acc = 0.0;
  std::size_t next = 0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    double cur = grid[k];
    const double end = grid[k + 1];
    while (next < path.jumps.size() && path.jumps[next].time <= end) {
      const double tau = path.jumps[next++].time;
      acc += ev.over(cur, tau, PathHistory(path, tau));
      cur = tau;
    }
    acc += ev.over(cur, end, PathHistory(path, end));
    cum[k + 1] = acc;
  }
  return cum;
}

int parts_of(IntegrandClass c) {
  return (c == IntegrandClass::Psi12 || c == IntegrandClass::Psi12Q) ? 2 : 1;
}

void require_compatible(const GeneralIntegrand& g, Compensator comp) {
  if (is_q_class(g.cls) != comp.is_q()) {
    throw ClassError("integrand class " + to_string(g.cls) + " does not match the " +
                     (comp.is_q() ? "Q" : "P") + " compensator");
  }
}

}  // namespace detail

using detail::RateEvaluator;

CompensatorCache::CompensatorCache(const GeneralIntegrand& g, const LevyMeasure& nu, Compensator comp,
                                   const GridPtr& grid)
    : grid_(grid) {
  detail::require_compatible(g, comp);
  const int parts = detail::parts_of(g.cls);
  for (int p = 0; p < 2; ++p) cum_[p].assign(grid->size(), 0.0);
  for (int p = 0; p < parts; ++p) {
    RateEvaluator ev(g, nu, comp, RateEvaluator::Transform::Identity, parts == 2 ? p : -1);
    if (!ev.history_free()) {
      throw DomainError("compensator cache requires a history-free integrand and deterministic pair");
    }
    PathHistory empty;
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < grid->size(); ++k) {
      acc += ev.over((*grid)[k], (*grid)[k + 1], empty);
      cum_[p][k + 1] = acc;
    }
  }
}

IntegralPath integrate_general(const GeneralIntegrand& g, const LevyPath& path, const LevyMeasure& nu,
                               Compensator comp, const CompensatorCache* cache) {
  detail::require_compatible(g, comp);
  const auto& grid = *path.grid;
  const int parts = detail::parts_of(g.cls);
  if (cache != nullptr && cache->grid()->size() != grid.size()) {
    throw DomainError("compensator cache was built for a different grid");
  }
  std::vector<RateEvaluator> evs;
  for (int p = 0; p < parts; ++p) {
    evs.emplace_back(g, nu, comp, RateEvaluator::Transform::Identity, parts == 2 ? p : -1);
  }

  IntegralPath out;
  out.grid = path.grid;
  out.values.assign(grid.size(), 0.0);
  if (parts == 2) {
    out.small_part.assign(grid.size(), 0.0);
    out.large_part.assign(grid.size(), 0.0);
  }
  double jumps[2] = {0.0, 0.0};
  double comps[2] = {0.0, 0.0};
  std::size_t next = 0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    double cur = grid[k];
    const double end = grid[k + 1];
    double step_comp[2] = {0.0, 0.0};
    while (next < path.jumps.size() && path.jumps[next].time <= end) {
      const auto& jump = path.jumps[next++];
      const PathHistory before(path, jump.time);
      double dj = 0.0;
      for (int p = 0; p < parts; ++p) {
        step_comp[p] += evs[p].over(cur, jump.time, before);
        const double v = evs[p].integrand_raw(jump.time, jump.size, before);
        jumps[p] += v;
        dj += v;
      }
      cur = jump.time;
      out.jump_times.push_back(jump.time);
      out.jump_sizes.push_back(dj);
      out.jump_values.push_back(jumps[0] + jumps[1] - (comps[0] + step_comp[0]) - (comps[1] + step_comp[1]));
    }
    for (int p = 0; p < parts; ++p) {
      if (cache != nullptr) {
        comps[p] = cache->cumulative(k + 1, p);
      } else {
        step_comp[p] += evs[p].over(cur, end, PathHistory(path, end));
        comps[p] += step_comp[p];
      }
    }
    out.values[k + 1] = jumps[0] + jumps[1] - comps[0] - comps[1];
    if (parts == 2) {
      out.small_part[k + 1] = jumps[0] - comps[0];
      out.large_part[k + 1] = jumps[1] - comps[1];
    }
  }
  return out;
}

double compensated_count(const LevyPath& path, const LevyMeasure& nu, Compensator comp, double t,
                         const JumpSet& set) {
  set.require_separated("compensated_count");
  if (t < 0.0 || t > path.grid->horizon()) throw DomainError("compensated_count: t outside [0, T*]");
  GeneralIntegrand ind;
  ind.g = [&set](double, double y, const PathHistory&) { return set.contains(y) ? 1.0 : 0.0; };
  ind.history_free = true;
  ind.time_homogeneous = true;
  ind.y_breaks = set.endpoints();
  ind.cls = comp.is_q() ? IntegrandClass::Psi1Q : IntegrandClass::Psi1;
  RateEvaluator ev(ind, nu, comp, RateEvaluator::Transform::Identity, -1);

  double count = 0.0;
  for (const auto& j : path.jumps) {
    if (j.time > t) break;
    if (set.contains(j.size)) count += 1.0;
  }
  if (ev.history_free()) return count - ev.over(0.0, t, PathHistory());

  // Compensator between consecutive events (grid and jump times), with the
  // strict-past history that is constant on each open piece.
  std::vector<double> events;
  for (double s : path.grid->times()) {
    if (s > 0.0 && s < t) events.push_back(s);
  }
  for (const auto& j : path.jumps) {
    if (j.time < t) events.push_back(j.time);
  }
  events.push_back(t);
  std::sort(events.begin(), events.end());
  double c = 0.0, cur = 0.0;
  for (double e : events) {
    if (e > cur) c += ev.over(cur, e, PathHistory(path, e));
    cur = e;
  }
  return count - c;
}

// ---------------------------------------------------------------------------
// Class checks

ClassCheck class_check(const GeneralIntegrand& g, const LevyMeasure& nu, const GeneratingPair* pair,
                       IntegrandClass cls, double horizon, const LevyPath* path) {
  ClassCheck out;
  if (is_q_class(cls) && pair == nullptr) {
    out.message = "Q class requires a generating pair";
    return out;
  }
  const Compensator comp = is_q_class(cls) ? Compensator::Q(*pair) : Compensator::P();
  RateEvaluator::Transform tf = RateEvaluator::Transform::Abs;
  if (cls == IntegrandClass::Psi2 || cls == IntegrandClass::Psi2Q) tf = RateEvaluator::Transform::Square;
  if (cls == IntegrandClass::Psi12 || cls == IntegrandClass::Psi12Q) tf = RateEvaluator::Transform::MinSquareAbs;
  RateEvaluator ev(g, nu, comp, tf, -1);
  try {
    if (ev.time_homogeneous() && (ev.history_free() || path == nullptr)) {
      out.value = ev.rate(0.0, PathHistory(), true) * horizon;
    } else {
      std::vector<double> breaks = g.s_breaks;
      if (path != nullptr) {
        for (double s : path->grid->times()) breaks.push_back(s);
        for (const auto& j : path->jumps) breaks.push_back(j.time);
      }
      quad::Options opts;
      opts.rel_tol = 1e-8;
      opts.abs_tol = 1e-14;
      opts.max_subintervals = 2000;
      auto outer = quad::integrate_piecewise(
          [&](double s) {
            const PathHistory h = path != nullptr ? PathHistory(*path, s) : PathHistory();
            return ev.rate(s, h, true);
          },
          0.0, horizon, breaks, opts);
      out.value = outer.value;
    }
    out.ok = std::isfinite(out.value);
    if (!out.ok) out.message = "class integral is not finite";
  } catch (const DivergenceError& e) {
    out.ok = false;
    out.value = std::numeric_limits<double>::infinity();
    out.message = e.what();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Registry

GeneralIntegrand make_integrand(const IntegrandSpec& spec) {
  GeneralIntegrand g;
  g.cls = spec.cls;
  g.history_free = true;
  g.time_homogeneous = true;
  g.name = spec.kind;
  const double c = spec.scale;
  if (spec.kind == "indicator") {
    spec.set.require_separated("indicator integrand");
    JumpSet set = spec.set;
    g.y_breaks = set.endpoints();
    g.g = [set, c](double, double y, const PathHistory&) { return set.contains(y) ? c : 0.0; };
  } else if (spec.kind == "linear") {
    JumpSet set = spec.set;
    const bool all = set.empty();
    g.y_breaks = set.endpoints();
    g.g = [set, all, c](double, double y, const PathHistory&) { return (all || set.contains(y)) ? c * y : 0.0; };
  } else if (spec.kind == "piecewise") {
    if (spec.values.size() != spec.edges.size() + 1) {
      throw DomainError("piecewise integrand needs exactly one more value than edges");
    }
    if (!std::is_sorted(spec.edges.begin(), spec.edges.end())) {
      throw DomainError("piecewise integrand edges must increase");
    }
    auto edges = spec.edges;
    auto values = spec.values;
    g.y_breaks = edges;
    g.g = [edges, values, c](double, double y, const PathHistory&) {
      auto it = std::upper_bound(edges.begin(), edges.end(), y);
      return c * values[static_cast<std::size_t>(it - edges.begin())];
    };
  } else {
    throw DomainError("unknown integrand kind '" + spec.kind + "'");
  }
  return g;
}

}  // namespace levyhjm
