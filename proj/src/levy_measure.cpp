#include "levyhjm/levy_measure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "levyhjm/errors.hpp"

namespace levyhjm {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Sorted, merged copy of the intervals (closedness dropped; only used for
// absolutely continuous measures where endpoints carry no mass).
std::vector<std::pair<double, double>> merged(const std::vector<Interval>& parts) {
  std::vector<std::pair<double, double>> v;
  for (const auto& p : parts) v.emplace_back(p.lo, p.hi);
  std::sort(v.begin(), v.end());
  std::vector<std::pair<double, double>> out;
  for (const auto& iv : v) {
    if (!out.empty() && iv.first <= out.back().second) {
      out.back().second = std::max(out.back().second, iv.second);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

}  // namespace

LevyMeasure::LevyMeasure(Kind kind, double eps_trunc) : kind_(std::move(kind)), eps_trunc_(eps_trunc) {
  validate();
  integrability();  // throws DivergenceError if the measure is not a Levy measure
}

LevyMeasure LevyMeasure::atomic(std::vector<Atom> atoms, double eps_trunc) {
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& x, const Atom& y) { return x.location < y.location; });
  return LevyMeasure(Kind(std::move(atoms)), eps_trunc);
}

LevyMeasure LevyMeasure::double_exponential(DoubleExponential params, double eps_trunc) {
  return LevyMeasure(Kind(params), eps_trunc);
}

LevyMeasure LevyMeasure::truncated_uniform(TruncatedUniform params, double eps_trunc) {
  return LevyMeasure(Kind(params), eps_trunc);
}

void LevyMeasure::validate() const {
  if (!(eps_trunc_ >= 0.0) || !std::isfinite(eps_trunc_)) {
    throw DomainError("eps_trunc must be a finite non-negative number");
  }
  std::visit(
      Overloaded{
          [](const std::vector<Atom>& atoms) {
            for (std::size_t i = 0; i < atoms.size(); ++i) {
              const auto& a = atoms[i];
              if (!std::isfinite(a.location) || a.location == 0.0) {
                throw DomainError("atom locations must be finite and nonzero");
              }
              if (!(a.rate > 0.0) || !std::isfinite(a.rate)) {
                throw DomainError("atom rates must be finite and positive");
              }
              if (i > 0 && atoms[i - 1].location == a.location) {
                throw DomainError("atom locations must be distinct");
              }
            }
          },
          [](const DoubleExponential& d) {
            if (!(d.lambda > 0.0) || !std::isfinite(d.lambda)) {
              throw DomainError("double_exponential: lambda must be positive");
            }
            if (!(d.p >= 0.0 && d.p <= 1.0)) {
              throw DomainError("double_exponential: p must lie in [0, 1]");
            }
            if (!(d.eta_plus > 0.0) || !(d.eta_minus > 0.0)) {
              throw DomainError("double_exponential: eta_plus and eta_minus must be positive");
            }
          },
          [](const TruncatedUniform& u) {
            if (!(u.lower < u.upper) || !std::isfinite(u.lower) || !std::isfinite(u.upper)) {
              throw DomainError("truncated_uniform: need finite lower < upper");
            }
            if (!(u.eps0 >= 0.0)) throw DomainError("truncated_uniform: eps0 must be >= 0");
            if (!(u.lambda > 0.0)) throw DomainError("truncated_uniform: lambda must be positive");
          }},
      kind_);
  if (std::holds_alternative<TruncatedUniform>(kind_)) {
    double len = 0.0;
    for (const auto& p : support(0.0)) len += p.hi - p.lo;
    if (!(len > 0.0)) throw DomainError("truncated_uniform: support has zero length");
  }
}

bool LevyMeasure::is_zero() const {
  const auto* atoms = std::get_if<std::vector<Atom>>(&kind_);
  return atoms != nullptr && atoms->empty();
}

std::string LevyMeasure::family() const {
  return std::visit(Overloaded{[](const std::vector<Atom>&) { return std::string("atomic"); },
                               [](const DoubleExponential&) { return std::string("double_exponential"); },
                               [](const TruncatedUniform&) { return std::string("truncated_uniform"); }},
                    kind_);
}

std::span<const Atom> LevyMeasure::atoms() const {
  if (const auto* atoms = std::get_if<std::vector<Atom>>(&kind_)) return *atoms;
  return {};
}

double LevyMeasure::density(double y) const {
  return std::visit(
      Overloaded{[](const std::vector<Atom>&) { return 0.0; },
                 [y](const DoubleExponential& d) {
                   if (y > 0.0) return d.lambda * d.p * d.eta_plus * std::exp(-d.eta_plus * y);
                   if (y < 0.0) return d.lambda * (1.0 - d.p) * d.eta_minus * std::exp(d.eta_minus * y);
                   return 0.0;
                 },
                 [this, y](const TruncatedUniform& u) {
                   double len = 0.0;
                   bool inside = false;
                   for (const auto& p : support(0.0)) {
                     len += p.hi - p.lo;
                     inside = inside || (y >= p.lo && y <= p.hi);
                   }
                   return inside && y != 0.0 ? u.lambda / len : 0.0;
                 }},
      kind_);
}

// Support intervals of the density, with |y| < exclusion removed.
std::vector<Interval> LevyMeasure::support(double exclusion) const {
  std::vector<Interval> out;
  auto push = [&out](double lo, double hi) {
    if (lo < hi) out.push_back({lo, hi, true, true});
  };
  std::visit(Overloaded{[](const std::vector<Atom>&) {},
                        [&](const DoubleExponential& d) {
                          if (d.p < 1.0) push(-kInf, -exclusion);
                          if (d.p > 0.0) push(exclusion, kInf);
                        },
                        [&](const TruncatedUniform& u) {
                          const double e = std::max(u.eps0, exclusion);
                          push(u.lower, std::min(u.upper, -e));
                          push(std::max(u.lower, e), u.upper);
                        }},
             kind_);
  return out;
}

std::vector<Interval> LevyMeasure::simulated_support() const { return support(eps_trunc_); }

// Density mass of [lo, hi] by antiderivatives.
double LevyMeasure::mass_on_interval(double lo, double hi) const {
  return std::visit(
      Overloaded{[](const std::vector<Atom>&) { return 0.0; },
                 [lo, hi](const DoubleExponential& d) {
                   double m = 0.0;
                   if (hi > 0.0) {
                     const double a = std::max(lo, 0.0);
                     m += d.lambda * d.p * (std::exp(-d.eta_plus * a) - std::exp(-d.eta_plus * hi));
                   }
                   if (lo < 0.0) {
                     const double b = std::min(hi, 0.0);
                     m += d.lambda * (1.0 - d.p) * (std::exp(d.eta_minus * b) - std::exp(d.eta_minus * lo));
                   }
                   return m;
                 },
                 [this, lo, hi](const TruncatedUniform& u) {
                   double len = 0.0, hit = 0.0;
                   for (const auto& p : support(0.0)) {
                     len += p.hi - p.lo;
                     hit += std::max(0.0, std::min(hi, p.hi) - std::max(lo, p.lo));
                   }
                   return u.lambda * hit / len;
                 }},
      kind_);
}

double LevyMeasure::mass(const JumpSet& set) const {
  set.require_separated("measure_mass");
  if (const auto* atoms = std::get_if<std::vector<Atom>>(&kind_)) {
    double m = 0.0;
    for (const auto& a : *atoms) {
      if (set.contains(a.location)) m += a.rate;
    }
    return m;
  }
  double m = 0.0;
  for (const auto& [lo, hi] : merged(set.parts())) m += mass_on_interval(lo, hi);
  return m;
}

quad::Result LevyMeasure::integrate_impl(const RealFn& f, const JumpSet* set, double exclusion,
                                         std::span<const double> breaks) const {
  if (const auto* atoms = std::get_if<std::vector<Atom>>(&kind_)) {
    quad::Result r;
    for (const auto& a : *atoms) {
      if (std::abs(a.location) < exclusion) continue;
      if (set != nullptr && !set->contains(a.location)) continue;
      const double v = a.rate * f(a.location);
      if (!std::isfinite(v)) throw DivergenceError("integrand is not finite at an atom");
      r.value += v;
      r.l1 += std::abs(v);
    }
    return r;
  }
  std::vector<Interval> domain = support(exclusion);
  if (set != nullptr) domain = JumpSet(domain).intersected(*set).parts();
  std::vector<double> cuts(breaks.begin(), breaks.end());
  cuts.push_back(-1.0);
  cuts.push_back(1.0);
  cuts.push_back(0.0);
  if (set != nullptr) {
    auto ends = set->endpoints();
    cuts.insert(cuts.end(), ends.begin(), ends.end());
  }
  auto weighted = [this, &f](double y) {
    const double d = density(y);
    if (d == 0.0) return 0.0;
    return f(y) * d;
  };
  quad::Result total;
  for (const auto& [lo, hi] : merged(domain)) {
    if (!(lo < hi)) continue;
    auto r = quad::integrate_piecewise(weighted, lo, hi, cuts);
    total.value += r.value;
    total.error += r.error;
    total.l1 += r.l1;
    total.subintervals += r.subintervals;
  }
  return total;
}

quad::Result LevyMeasure::integrate(const RealFn& f, const JumpSet& set,
                                    std::span<const double> breaks) const {
  return integrate_impl(f, &set, 0.0, breaks);
}

quad::Result LevyMeasure::integrate(const RealFn& f, std::span<const double> breaks) const {
  return integrate_impl(f, nullptr, 0.0, breaks);
}

quad::Result LevyMeasure::integrate_simulated(const RealFn& f, std::span<const double> breaks) const {
  return integrate_impl(f, nullptr, eps_trunc_, breaks);
}

quad::Result LevyMeasure::integrate_simulated(const RealFn& f, const JumpSet& set,
                                              std::span<const double> breaks) const {
  return integrate_impl(f, &set, eps_trunc_, breaks);
}

double LevyMeasure::integrability() const {
  return integrate([](double y) { return std::min(y * y, 1.0); }).value;
}

double LevyMeasure::simulated_rate() const {
  if (const auto* atoms = std::get_if<std::vector<Atom>>(&kind_)) {
    double m = 0.0;
    for (const auto& a : *atoms) {
      if (std::abs(a.location) >= eps_trunc_) m += a.rate;
    }
    return m;
  }
  double m = 0.0;
  for (const auto& p : support(eps_trunc_)) m += mass_on_interval(p.lo, p.hi);
  return m;
}

double LevyMeasure::small_jump_drift() const {
  const JumpSet small = JumpSet::closed(-1.0, 1.0);
  return integrate_simulated([](double y) { return y; }, small).value;
}

bool LevyMeasure::exponential_moment_finite(double c) const {
  if (const auto* d = std::get_if<DoubleExponential>(&kind_)) {
    if (d->p > 0.0 && c >= d->eta_plus) return false;
    if (d->p < 1.0 && -c >= d->eta_minus) return false;
  }
  return true;
}

double LevyMeasure::sample_jump(CounterRng& rng) const {
  return std::visit(
      Overloaded{[&](const std::vector<Atom>& atoms) {
                   const double total = simulated_rate();
                   double u = rng.uniform() * total;
                   double last = 0.0;
                   for (const auto& a : atoms) {
                     if (std::abs(a.location) < eps_trunc_) continue;
                     last = a.location;
                     if (u < a.rate) return a.location;
                     u -= a.rate;
                   }
                   return last;
                 },
                 [&](const DoubleExponential& d) {
                   const double e = eps_trunc_;
                   const double wp = d.p * std::exp(-d.eta_plus * e);
                   const double wm = (1.0 - d.p) * std::exp(-d.eta_minus * e);
                   const double side = rng.uniform() * (wp + wm);
                   const double x = rng.exponential();
                   // Memorylessness: the tail beyond e is e plus a fresh exponential.
                   if (side < wp) return e + x / d.eta_plus;
                   return -(e + x / d.eta_minus);
                 },
                 [&](const TruncatedUniform&) {
                   const auto pieces = support(eps_trunc_);
                   double len = 0.0;
                   for (const auto& p : pieces) len += p.hi - p.lo;
                   double u = rng.uniform() * len;
                   for (const auto& p : pieces) {
                     const double w = p.hi - p.lo;
                     if (u < w) return p.lo + u;
                     u -= w;
                   }
                   return pieces.back().hi;
                 }},
      kind_);
}

void LevyTriplet::validate() const {
  if (!std::isfinite(a)) throw DomainError("levy.a must be finite");
  if (!(q >= 0.0) || !std::isfinite(q)) throw DomainError("levy.q must be finite and >= 0");
}

}  // namespace levyhjm
