#include "levyhjm/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

#include "levyhjm/errors.hpp"

namespace levyhjm::quad {
namespace {

// Kronrod 15-point abscissae (non-negative half) and weights; the odd
// entries are the 7-point Gauss nodes.
constexpr std::array<double, 8> kXk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error, l1;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel kronrod(const F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double rk = fc * kWk[7];
  double rg = fc * kWg[3];
  double l1 = std::abs(fc) * kWk[7];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXk[j];
    const double f1 = f(c - dx);
    const double f2 = f(c + dx);
    rk += kWk[j] * (f1 + f2);
    l1 += kWk[j] * (std::abs(f1) + std::abs(f2));
    if (j % 2 == 1) rg += kWg[j / 2] * (f1 + f2);
  }
  Panel p{a, b, rk * h, std::abs((rk - rg) * h), l1 * std::abs(h)};
  if (!std::isfinite(p.value) || !std::isfinite(p.error)) {
    std::ostringstream os;
    os << "integrand is not finite on [" << a << ", " << b << "]";
    throw DivergenceError(os.str());
  }
  return p;
}

template <class F>
Result adapt(const F& f, double a, double b, const Options& opts) {
  std::priority_queue<Panel> heap;
  Panel first = kronrod(f, a, b);
  double value = first.value, error = first.error, l1 = first.l1;
  heap.push(first);
  int n = 1;
  auto done = [&] {
    return error <= std::max({opts.rel_tol * std::abs(value), opts.l1_floor * l1, opts.abs_tol});
  };
  while (!done()) {
    if (n >= opts.max_subintervals) {
      std::ostringstream os;
      os << "quadrature did not converge after " << n << " subintervals (value "
         << value << ", error estimate " << error << ")";
      throw DivergenceError(os.str());
    }
    Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      throw DivergenceError("quadrature interval collapsed below machine resolution");
    }
    Panel left = kronrod(f, worst.a, mid);
    Panel right = kronrod(f, mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    l1 += left.l1 + right.l1 - worst.l1;
    heap.push(left);
    heap.push(right);
    ++n;
  }
  // Resum to shed the drift of the running updates.
  value = 0.0;
  error = 0.0;
  l1 = 0.0;
  std::vector<Panel> panels;
  panels.reserve(heap.size());
  while (!heap.empty()) {
    panels.push_back(heap.top());
    heap.pop();
  }
  std::sort(panels.begin(), panels.end(),
            [](const Panel& x, const Panel& y) { return x.a < y.a; });
  for (const auto& p : panels) {
    value += p.value;
    error += p.error;
    l1 += p.l1;
  }
  return {value, error, l1, n};
}

}  // namespace

Result integrate(const Integrand& f, double a, double b, const Options& opts) {
  if (std::isnan(a) || std::isnan(b)) throw DomainError("quadrature limits are NaN");
  if (a == b) return {};
  if (a > b) {
    Result r = integrate(f, b, a, opts);
    r.value = -r.value;
    return r;
  }
  const bool lo_inf = std::isinf(a);
  const bool hi_inf = std::isinf(b);
  if (!lo_inf && !hi_inf) return adapt(f, a, b, opts);
  if (lo_inf && hi_inf) {
    Result l = integrate(f, a, 0.0, opts);
    Result r = integrate(f, 0.0, b, opts);
    return {l.value + r.value, l.error + r.error, l.l1 + r.l1,
            l.subintervals + r.subintervals};
  }
  // Map the half line onto [0, 1): y = a + t / (1 - t) (mirrored for -inf).
  const double anchor = lo_inf ? b : a;
  const double sign = lo_inf ? -1.0 : 1.0;
  auto g = [&](double t) {
    const double u = 1.0 - t;
    const double y = anchor + sign * t / u;
    const double fy = f(y);
    if (fy == 0.0) return 0.0;
    return fy / (u * u);
  };
  return adapt(g, 0.0, 1.0, opts);
}

Result integrate_piecewise(const Integrand& f, double a, double b,
                           std::span<const double> breaks, const Options& opts) {
  if (a > b) {
    Result r = integrate_piecewise(f, b, a, breaks, opts);
    r.value = -r.value;
    return r;
  }
  std::vector<double> pts;
  pts.reserve(breaks.size() + 2);
  pts.push_back(a);
  for (double x : breaks) {
    if (x > a && x < b) pts.push_back(x);
  }
  pts.push_back(b);
  std::sort(pts.begin() + 1, pts.end() - 1);
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  // Share a global tolerance, estimated from one rule per piece, so that
  // pieces carrying a negligible part of the integral do not stall.
  Options piece_opts = opts;
  if (pts.size() > 2) {
    double rough_value = 0.0, rough_l1 = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      if (std::isinf(pts[i]) || std::isinf(pts[i + 1])) continue;
      const Panel p = kronrod(f, pts[i], pts[i + 1]);
      rough_value += p.value;
      rough_l1 += p.l1;
    }
    const double global = std::max(opts.rel_tol * std::abs(rough_value), opts.l1_floor * rough_l1);
    piece_opts.abs_tol = std::max(opts.abs_tol, global / static_cast<double>(pts.size() - 1));
  }
  Result total;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    Result r = integrate(f, pts[i], pts[i + 1], piece_opts);
    total.value += r.value;
    total.error += r.error;
    total.l1 += r.l1;
    total.subintervals += r.subintervals;
  }
  return total;
}

}  // namespace levyhjm::quad
