// Acceptance criteria 1-11 at desk scale. Prints one PASS/FAIL line per
// criterion and exits non-zero if any fails.
//
//   acceptance [N ...]    run only the listed criteria

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "levyhjm/girsanov.hpp"
#include "levyhjm/hedging.hpp"
#include "levyhjm/hjm_market.hpp"
#include "levyhjm/incompleteness.hpp"
#include "levyhjm/jump_calculus.hpp"
#include "levyhjm/parallel.hpp"
#include "levyhjm/runner.hpp"
#include "levyhjm/scenario.hpp"

using namespace levyhjm;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kPaths = 100000;
constexpr std::size_t kSteps = 512;  // dt = 2^-9 on [0, 1]

// Half the finest-level counterexample residual of the pilot run (default
// scenario, seed 20240601, 10^4 paths), which was 0.7045.
constexpr double kTauStar = 0.35;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [violated]");
  }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

GridPtr desk_grid() { return TimeGrid::uniform(1.0, kSteps); }

std::vector<double> uniform_maturities(std::size_t n) {
  std::vector<double> u(n + 1);
  for (std::size_t i = 0; i <= n; ++i) u[i] = static_cast<double>(i) / static_cast<double>(n);
  return u;
}

GeneralIntegrand homogeneous(IntegrandFn g, IntegrandClass cls, std::vector<double> breaks = {}) {
  GeneralIntegrand out;
  out.g = std::move(g);
  out.cls = cls;
  out.history_free = true;
  out.time_homogeneous = true;
  out.y_breaks = std::move(breaks);
  return out;
}

std::string default_scenario_path() { return std::string(LEVYHJM_SOURCE_DIR) + "/scenarios/default.toml"; }

Outcome poisson_law() {
  Outcome o;
  LevyTriplet tr{0.0, 0.0, LevyMeasure::atomic({{1.0, 2.0}})};
  auto grid = desk_grid();
  auto counts = parallel_map<double>(kPaths, [&](std::size_t i) {
    return static_cast<double>(jump_counting(simulate_path(tr, grid, {101, i}), 1.0, JumpSet::point(1.0)));
  });
  auto s = sample_stats(counts);
  double m4 = 0.0;
  for (double c : counts) m4 += std::pow(c - s.mean, 4);
  m4 /= static_cast<double>(counts.size());
  const double var_se = std::sqrt((m4 - s.variance * s.variance) / static_cast<double>(counts.size()));
  o.require(std::abs(s.mean - 2.0) <= 4.0 * s.std_error, fmt("mean %.5f (se %.5f)", s.mean, s.std_error));
  o.require(std::abs(s.variance - 2.0) <= 4.0 * var_se, fmt("variance %.5f (se %.5f)", s.variance, var_se));
  return o;
}

Outcome isometry_under_p() {
  Outcome o;
  McConfig mc{desk_grid(), kPaths, 102, 0};
  struct Case {
    std::string name;
    GeneralIntegrand g;
    LevyMeasure nu;
    double exact;  // 0: use the reported quadrature value
  };
  std::vector<Case> cases;
  cases.push_back({"3 1_{1}, atomic (1, 2)",
                   GeneralIntegrand::from_simple(SimpleIntegrand::indicator(1.0, JumpSet::point(1.0), 3.0)),
                   LevyMeasure::atomic({{1.0, 2.0}}), 18.0});
  cases.push_back({"y, two atoms", homogeneous([](double, double y, const PathHistory&) { return y; },
                                               IntegrandClass::Psi2),
                   LevyMeasure::atomic({{0.5, 4.0}, {-1.5, 1.0}}), 0.25 * 4.0 + 2.25 * 1.0});
  cases.push_back({"y^2, double exponential",
                   homogeneous([](double, double y, const PathHistory&) { return y * y; }, IntegrandClass::Psi2),
                   LevyMeasure::double_exponential({3.0, 0.5, 2.0, 3.0}),
                   // lambda (p 4!/eta+^4 + (1-p) 4!/eta-^4)
                   3.0 * (0.5 * 24.0 / 16.0 + 0.5 * 24.0 / 81.0)});
  cases.push_back({"1.5 1_{y > 0.2}, double exponential",
                   homogeneous([](double, double y, const PathHistory&) { return y > 0.2 ? 1.5 : 0.0; },
                               IntegrandClass::Psi2, {0.2}),
                   LevyMeasure::double_exponential({2.0, 0.7, 1.0, 2.0}), 2.25 * 2.0 * 0.7 * std::exp(-0.2)});
  cases.push_back({"sin 3y, truncated uniform",
                   homogeneous([](double, double y, const PathHistory&) { return std::sin(3.0 * y); },
                               IntegrandClass::Psi2),
                   LevyMeasure::truncated_uniform({-2.0, 1.5, 0.25, 5.0}), 0.0});
  {
    GeneralIntegrand h;
    h.g = [](double, double y, const PathHistory& hist) {
      return y * (1.0 + 0.5 * static_cast<double>(hist.jumps().size()));
    };
    h.cls = IntegrandClass::Psi2;
    cases.push_back({"predictable y (1 + N_{s-}/2)", h, LevyMeasure::atomic({{1.0, 1.5}, {-0.5, 1.0}}), 0.0});
  }
  for (const auto& c : cases) {
    auto est = estimate_isometry(c.g, {0.0, 0.0, c.nu}, Compensator::P(), mc);
    bool ok = std::abs(est.lhs - est.rhs) <= 4.0 * est.se;
    if (c.exact != 0.0) ok = ok && std::abs(est.rhs - c.exact) <= 1e-8 * c.exact;
    o.require(ok, c.name + fmt(": %.4f vs %.4f (se %.4f)", est.lhs, est.rhs, est.se));
  }
  return o;
}

Outcome girsanov_tilt() {
  Outcome o;
  const double theta = 0.5, lambda = 2.0;
  LevyTriplet tr{0.0, 0.0, LevyMeasure::atomic({{1.0, lambda}})};
  auto grid = desk_grid();
  DensityModel model(GeneratingPair::constant(0.0, theta), tr, grid);
  std::vector<double> gap(kPaths);
  auto rho1 = parallel_map<double>(kPaths, [&](std::size_t i) {
    auto path = simulate_path(tr, grid, {103, i});
    auto d = model.path(path);
    double worst = 0.0;
    for (std::size_t k = 0; k < grid->size(); ++k) {
      const double t = (*grid)[k];
      const double n = static_cast<double>(jump_counting(path, t, JumpSet::point(1.0)));
      worst = std::max(worst, std::abs(d.rho[k] - std::exp(theta * n - lambda * t * std::expm1(theta))));
    }
    gap[i] = worst;
    return d.final_rho();
  });
  const double worst = *std::max_element(gap.begin(), gap.end());
  auto s = sample_stats(rho1);
  o.require(worst <= 1e-10, fmt("max |rho - closed form| %.2e", worst));
  o.require(std::abs(s.mean - 1.0) <= 4.0 * s.std_error, fmt("E rho_1 %.5f (se %.5f)", s.mean, s.std_error));
  return o;
}

Outcome reciprocal_identity() {
  Outcome o;
  LevyTriplet tr{0.0, 0.0, LevyMeasure::double_exponential({4.0, 0.5, 3.0, 3.0})};
  auto grid = desk_grid();
  auto pair = GeneratingPair::linear(0.0, 0.2, -0.4);
  DensityModel model(pair, tr, grid);
  const std::size_t n = 2000;
  auto gap = parallel_map<double>(n, [&](std::size_t i) {
    auto path = simulate_path(tr, grid, {104, i});
    auto d = model.path(path);
    auto r = reciprocal_density(pair, path, tr);
    double worst = 0.0;
    for (std::size_t k = 0; k < grid->size(); ++k) worst = std::max(worst, std::abs(r.values[k] * d.rho[k] - 1.0));
    return worst;
  });
  const double worst = *std::max_element(gap.begin(), gap.end());
  o.require(worst <= 1e-8, fmt("max |rho * reciprocal - 1| %.2e over %g paths", worst, static_cast<double>(n)));
  return o;
}

Outcome covariation_under_q() {
  Outcome o;
  McConfig mc{desk_grid(), kPaths, 105, 0};
  const double theta = 0.4;
  auto pair = GeneratingPair::constant(0.0, theta);
  LevyTriplet tr{0.0, 0.0, LevyMeasure::atomic({{1.0, 2.0}, {-1.0, 1.0}})};
  auto disjoint = estimate_covariation_Q(JumpSet::point(1.0), JumpSet::point(-1.0), tr, pair, 1.0, mc);
  o.require(disjoint.predicted == 0.0 && std::abs(disjoint.mc) <= 4.0 * disjoint.mc_se,
            fmt("disjoint %.5f (se %.5f)", disjoint.mc, disjoint.mc_se));
  auto equal = estimate_covariation_Q(JumpSet::point(1.0), JumpSet::point(1.0), tr, pair, 1.0, mc);
  const double exact = 2.0 * std::exp(theta);
  o.require(std::abs(equal.predicted - exact) <= 1e-12 * exact &&
                std::abs(equal.mc - equal.predicted) <= 4.0 * equal.mc_se,
            fmt("equal %.5f vs %.5f (se %.5f)", equal.mc, equal.predicted, equal.mc_se));
  return o;
}

Outcome representation_round_trip() {
  Outcome o;
  const double theta = 0.6, lambda = 2.0;
  LevyTriplet tr{0.0, 0.0, LevyMeasure::atomic({{1.0, lambda}})};
  auto grid = desk_grid();
  DensityModel tilted(GeneratingPair::constant(0.0, theta), tr, grid);
  DensityModel identity(GeneratingPair::identity(), tr, grid);
  auto rho_left = [=](const PathHistory& h) {
    return std::exp(theta * static_cast<double>(h.jumps().size()) - lambda * h.cut() * std::expm1(theta));
  };

  struct Case {
    std::string name;
    const DensityModel* model;
    RepresentationInput input;
  };
  std::vector<Case> cases;
  {
    RepresentationInput in;
    in.m0 = 1.7;
    in.m = [](double, const PathHistory&) { return 1.7; };
    in.psi_m = [=](double, double, const PathHistory& h) { return 1.7 * std::expm1(theta) * rho_left(h); };
    cases.push_back({"constant", &tilted, in});
  }
  {
    // rho M jumps by rho_-[M_-(e^theta - 1) + e^theta] at y = 1.
    RepresentationInput in;
    in.m = [=](double t, const PathHistory& h) {
      return static_cast<double>(h.jumps().size()) - lambda * std::exp(theta) * t;
    };
    auto m = in.m;
    in.psi_m = [=](double s, double y, const PathHistory& h) {
      return rho_left(h) * (m(s, h) * std::expm1(theta) + (y == 1.0 ? std::exp(theta) : 0.0));
    };
    cases.push_back({"compensated count under Q", &tilted, in});
  }
  {
    RepresentationInput in;
    in.m = [=](double t, const PathHistory& h) { return static_cast<double>(h.jumps().size()) - lambda * t; };
    in.psi_m = [](double, double y, const PathHistory&) { return y == 1.0 ? 1.0 : 0.0; };
    cases.push_back({"identity measure", &identity, in});
  }
  for (const auto& c : cases) {
    auto err = parallel_map<double>(200, [&](std::size_t i) {
      auto path = simulate_path(tr, grid, {106, i});
      return transform_and_verify(*c.model, c.input, path).max_error;
    });
    const double worst = *std::max_element(err.begin(), err.end());
    o.require(worst <= 1e-8, c.name + fmt(" %.2e", worst));
  }
  return o;
}

Outcome drift_condition() {
  Outcome o;
  auto grid = desk_grid();
  MartingaleMeasureSpec spec;
  spec.triplet = {0.0, 1.0, LevyMeasure::double_exponential({1.5, 0.6, 1.5, 2.0})};
  spec.vol = VolatilitySpec::constant(0.1);
  spec.pair = GeneratingPair::linear(0.1, 0.05, 0.1);
  auto u = uniform_maturities(8);
  const std::vector<std::size_t> nodes{1, 2, 4, 6, 8};

  MarketModel model(spec, InitialCurve::flat(0.02), u, grid);
  auto ok = discounted_martingale_test(model, nodes, {grid, kPaths, 107, 0});
  o.require(ok.passes(), fmt("hjm drift max |z| %.3f", ok.max_abs_z));

  MarketModel shifted(spec, InitialCurve::flat(0.02), u, grid, DriftSpec::hjm(0.05));
  auto bad = discounted_martingale_test(shifted, nodes, {grid, kPaths / 10, 108, 0});
  // Mean of P^(t, 1) at t = 0, 1/4, 1/2, 3/4, 1.
  const std::size_t col = nodes.size() - 1;
  bool monotone = true;
  for (std::size_t k = kSteps / 4; k < grid->size(); k += kSteps / 4) {
    monotone = monotone && bad.mean[k * nodes.size() + col] < bad.mean[(k - kSteps / 4) * nodes.size() + col];
  }
  o.require(!bad.passes() && monotone, fmt("shifted drift max |z| %.1f, mean decreasing", bad.max_abs_z));

  MartingaleMeasureSpec wiener;
  wiener.triplet = {0.0, 1.0, LevyMeasure()};
  const double sigma = 0.1;
  wiener.vol = VolatilitySpec::constant(sigma);
  double worst = 0.0;
  for (double s : {0.0, 0.25, 0.5, 0.9}) {
    for (double T : {0.5, 1.0, 2.0}) {
      if (T > s) worst = std::max(worst, std::abs(hjm_alpha(wiener, s, T) - sigma * sigma * (T - s)));
    }
  }
  o.require(worst <= 1e-12, fmt("Wiener alpha error %.2e", worst));
  return o;
}

Outcome sde_consistency() {
  Outcome o;
  MartingaleMeasureSpec spec;
  spec.triplet = {0.0, 1.0, LevyMeasure::double_exponential({1.5, 0.6, 1.5, 2.0})};
  spec.vol = VolatilitySpec::constant(0.3);
  spec.pair = GeneratingPair::linear(0.5, 0.05, 0.1);
  auto u = uniform_maturities(8);
  auto fine = desk_grid();
  std::vector<std::unique_ptr<MarketModel>> models;
  for (std::size_t factor : {1, 2, 4}) {
    models.push_back(
        std::make_unique<MarketModel>(spec, InitialCurve::flat(0.02), u, TimeGrid::uniform(1.0, kSteps / factor)));
  }
  const std::size_t n = 10000;
  auto per_path = parallel_map<std::vector<double>>(n, [&](std::size_t i) {
    auto path = simulate_path(spec.triplet, fine, {109, i});
    std::vector<double> err(3);
    for (std::size_t l = 0; l < 3; ++l) {
      auto p = l == 0 ? path : coarsen(path, std::size_t{1} << l);
      err[l] = discounted_price_sde_check(*models[l], models[l]->evolve(p), p);
    }
    return err;
  });
  std::vector<double> err(3, 0.0);
  for (const auto& e : per_path) {
    for (std::size_t l = 0; l < 3; ++l) err[l] += e[l] / static_cast<double>(n);
  }
  const double r1 = err[1] / err[0], r2 = err[2] / err[1];
  o.require(r1 >= 1.6 && r1 <= 2.4, fmt("dt 2^-8 / 2^-9 ratio %.3f", r1));
  o.require(r2 >= 1.6 && r2 <= 2.4, fmt("dt 2^-7 / 2^-8 ratio %.3f", r2));
  return o;
}

Outcome replication_split() {
  Outcome o;
  auto grid = desk_grid();
  auto u = uniform_maturities(8);
  {
    MartingaleMeasureSpec spec;
    spec.triplet = {0.0, 1.0, LevyMeasure()};
    spec.vol = VolatilitySpec::constant(0.1);
    MarketModel model(spec, InitialCurve::flat(0.02), u, grid);
    auto path = simulate_path(spec.triplet, grid, {110, 0});
    auto surface = model.evolve(path);
    ClaimRepresentation claim;
    claim.f_x = [](double s, const PathHistory&) { return 0.3 * std::cos(s); };
    const std::size_t node = 8;
    const double dt = grid->dt(0);
    // c(s) = -f_X(s) / (P^(s-, T) Sigma(s, T)) on the step containing s.
    Portfolio p{{node},
                {[&](const HedgeState& st) {
                  return -claim.f_x(st.t + 0.5 * dt, {}) / (std::exp(st.log_p_hat[node]) * st.sigma[node]);
                }},
                0.0};
    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < grid->steps(); ++k) {
      worst = std::max(worst, replication_equations_residual(p, model, surface, claim, path, k, {}).eq2);
    }
    o.require(worst <= 1e-10, fmt("Wiener-only eq2 residual %.2e", worst));
  }
  {
    MartingaleMeasureSpec spec;
    spec.triplet = {0.0, 0.0, LevyMeasure::atomic({{-1.0, 1.0}, {1.0, 1.0}})};
    spec.vol = VolatilitySpec::constant(0.2);
    MarketModel model(spec, InitialCurve::flat(0.02), u, grid);
    auto path = simulate_path(spec.triplet, grid, {110, 1});
    auto surface = model.evolve(path);
    auto one = homogeneous([](double, double, const PathHistory&) { return 1.0; }, IntegrandClass::Psi12Q);
    auto claim = ClaimRepresentation::jump_integral(one, spec.pair, spec.triplet.nu);
    const std::vector<double> atoms{-1.0, 1.0};
    const std::size_t node = 8;
    double least = kInf;
    for (std::size_t k = 0; k < grid->steps(); ++k) {
      // The least-squares quantity for c h(y_i) = 1, h(y) = P^ (e^{-Sigma y} - 1).
      const double ph = surface.discounted(k, node), sig = surface.sigma[surface.index(k, node)];
      double hh = 0.0, h1 = 0.0;
      for (double y : atoms) {
        const double h = ph * std::expm1(-sig * y);
        hh += h * h;
        h1 += h;
      }
      auto r = replication_equations_residual(Portfolio::buy_and_hold({node}, {h1 / hh}), model, surface, claim,
                                              path, k, atoms);
      least = std::min(least, std::max(r.eq3[0], r.eq3[1]));
    }
    o.require(least >= 0.1, fmt("two-atom eq3 residual at the worse atom >= %.4f on every step", least));
  }
  return o;
}

Outcome incompleteness_witness() {
  Outcome o;
  const Scenario s = load_scenario(default_scenario_path());
  auto grid = s.grid();
  MarketModel model(s.market, s.curve, s.maturities, grid, s.drift);
  CounterexampleG g(find_concentration_witness(s.market.triplet.nu, s.incompleteness.y0, s.incompleteness.K,
                                               s.incompleteness.eps1));
  auto r = incompleteness_experiment(g, model, s.incompleteness.config, {grid, s.n_paths, s.seed + 1, 0});

  bool increasing = true;
  for (const auto& c : r.certificates) {
    for (std::size_t k = std::max<std::size_t>(c.k_min, 1); k < c.n_pairs(); ++k) {
      increasing = increasing && c.ratio[k] > c.ratio[k - 1];
    }
    increasing = increasing && c.k_min + 2 <= c.n_pairs();
  }
  o.require(r.min_ratio_growth() > 1e3, fmt("deepest / shallowest ratio >= %.3g", r.min_ratio_growth()));
  o.require(increasing && r.tail_increasing(), "ratio tail strictly increasing");
  const auto& finest = r.levels.back();
  o.require(finest.counterexample >= kTauStar,
            fmt("counterexample residual %.4f >= tau* %.2f", finest.counterexample, kTauStar));
  o.require(finest.control <= kTauStar / 10.0, fmt("control residual %.2e <= %.3f", finest.control, kTauStar / 10.0));
  return o;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "levyhjm_acceptance_determinism";
  fs::remove_all(root);
  std::ostringstream log;
  RunOptions opt;
  opt.command = "all";
  opt.scenario_path = default_scenario_path();
  const std::size_t threads[2] = {1, 4};
  for (std::size_t t : threads) {
    opt.threads = t;
    opt.out = (root / ("threads_" + std::to_string(t))).string();
    const int code = run(opt, log);
    o.require(code == 0, "run with " + std::to_string(t) + " threads exits " + std::to_string(code));
  }
  if (!o.pass) return o;
  std::size_t compared = 0, differing = 0;
  for (const auto& entry : fs::directory_iterator(root / "threads_1")) {
    const auto name = entry.path().filename().string();
    if (name == "timings.json") continue;
    ++compared;
    if (read_file(entry.path()) != read_file(root / "threads_4" / name)) ++differing;
  }
  o.require(differing == 0 && compared > 0,
            std::to_string(compared) + " files compared, " + std::to_string(differing) + " differ");
  fs::remove_all(root);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{
      poisson_law,   isometry_under_p,   girsanov_tilt,   reciprocal_identity,    covariation_under_q,
      representation_round_trip, drift_condition, sde_consistency, replication_split, incompleteness_witness,
      determinism};
  std::vector<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::strtoul(argv[i], nullptr, 10));
  if (selected.empty()) {
    for (std::size_t i = 1; i <= criteria.size(); ++i) selected.push_back(i);
  }

  int failures = 0;
  for (std::size_t id : selected) {
    if (id < 1 || id > criteria.size()) {
      std::printf("Criterion %zu: FAIL unknown criterion\n", id);
      ++failures;
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[id - 1]();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("Criterion %zu: %s %s (%.1f s)\n", id, out.pass ? "PASS" : "FAIL", out.detail.c_str(), secs);
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
