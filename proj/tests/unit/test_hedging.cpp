#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "levyhjm/errors.hpp"
#include "levyhjm/girsanov.hpp"
#include "levyhjm/hedging.hpp"
#include "levyhjm/parallel.hpp"

using namespace levyhjm;

namespace {

std::vector<double> uniform_maturities(double horizon, std::size_t n) {
  std::vector<double> u(n + 1);
  for (std::size_t i = 0; i <= n; ++i) u[i] = horizon * static_cast<double>(i) / static_cast<double>(n);
  return u;
}

MartingaleMeasureSpec jump_diffusion() {
  MartingaleMeasureSpec spec;
  spec.triplet = {0.0, 0.5, LevyMeasure::double_exponential({1.5, 0.5, 5.0, 5.0})};
  spec.vol = VolatilitySpec::constant(0.1);
  spec.pair = GeneratingPair::linear(0.2, 0.1, 0.3);
  return spec;
}

// c = +1 after an up-move of W, -1 otherwise: bounded and predictable.
QuantityFn sign_of_brownian(double scale) {
  return [scale](const HedgeState& st) { return st.history.last_brownian() > 0.0 ? scale : -scale; };
}

}  // namespace

TEST_CASE("zero holdings and a zero-volatility market keep wealth constant") {
  auto grid = TimeGrid::uniform(1.0, 64);
  auto u = uniform_maturities(1.0, 8);
  auto spec = jump_diffusion();
  MarketModel model(spec, InitialCurve::flat(0.02), u, grid);
  auto path = simulate_path(spec.triplet, grid, {4, 0});
  auto surface = model.evolve(path);
  auto none = Portfolio::buy_and_hold({3, 8}, {0.0, 0.0});
  for (double v : wealth_path(none, model, surface, path, 0.7).values) CHECK(v == 0.7);

  auto still_spec = spec;
  still_spec.vol = VolatilitySpec::zero();
  MarketModel still(still_spec, InitialCurve::flat(0.02), u, grid);
  auto still_surface = still.evolve(path);
  auto hold = Portfolio::buy_and_hold({8}, {1.0});
  for (double v : wealth_path(hold, still, still_surface, path, 0.3).values) CHECK(v == 0.3);
}

TEST_CASE("wealth is linear in the portfolio and self-financing") {
  auto grid = TimeGrid::uniform(1.0, 64);
  auto u = uniform_maturities(1.0, 8);
  auto spec = jump_diffusion();
  MarketModel model(spec, InitialCurve::flat(0.02), u, grid);
  Portfolio a{{2, 5}, {sign_of_brownian(1.0), [](const HedgeState& st) { return 1.0 + st.t; }}, 2.0};
  Portfolio b{{5, 8}, {[](const HedgeState&) { return -0.5; }, sign_of_brownian(0.7)}, 1.0};
  Portfolio sum{{2, 5, 8},
                {a.quantities[0], [&](const HedgeState& st) { return a.quantities[1](st) + b.quantities[0](st); },
                 b.quantities[1]},
                3.0};
  for (std::uint64_t i = 0; i < 20; ++i) {
    auto path = simulate_path(spec.triplet, grid, {8, i});
    auto surface = model.evolve(path);
    auto wa = wealth_path(a, model, surface, path, 0.1);
    auto wb = wealth_path(b, model, surface, path, 0.2);
    auto ws = wealth_path(sum, model, surface, path, 0.3);
    for (std::size_t k = 0; k < grid->size(); ++k) {
      CHECK(std::abs(ws.values[k] - wa.values[k] - wb.values[k]) <= 1e-10);
      CHECK(std::abs(ws.values[k] - (0.3 + ws.brownian[k] + ws.jumps[k] - ws.compensator[k])) <= 1e-13);
    }
  }
}

TEST_CASE("buy-and-hold wealth tracks the discounted bond") {
  auto grid = TimeGrid::uniform(1.0, 256);
  auto u = uniform_maturities(1.0, 8);
  auto spec = jump_diffusion();
  MarketModel model(spec, InitialCurve::flat(0.02), u, grid);
  auto hold = Portfolio::buy_and_hold({6}, {1.0});
  for (std::uint64_t i = 0; i < 20; ++i) {
    auto path = simulate_path(spec.triplet, grid, {12, i});
    auto surface = model.evolve(path);
    auto w = wealth_path(hold, model, surface, path, surface.discounted(0, 6));
    for (std::size_t k = 0; k < grid->size(); ++k) {
      CHECK(std::abs(w.values[k] - surface.discounted(k, 6)) <= 2e-3 * surface.discounted(k, 6));
    }
  }
}

TEST_CASE("wealth of a bounded strategy is a Q-martingale") {
  auto grid = TimeGrid::uniform(1.0, 32);
  auto u = uniform_maturities(1.0, 8);
  auto spec = jump_diffusion();
  MarketModel model(spec, InitialCurve::flat(0.02), u, grid);
  DensityModel density(spec.pair, spec.triplet, grid);
  Portfolio p{{4, 8}, {sign_of_brownian(1.0), [](const HedgeState&) { return 2.0; }}, 2.0};
  const std::size_t n = 40000;
  std::vector<std::vector<double>> values(grid->size(), std::vector<double>(n));
  parallel_for(n, [&](std::size_t i) {
    auto path = simulate_path(spec.triplet, grid, {13, i});
    auto surface = model.evolve(path);
    auto w = wealth_path(p, model, surface, path, 0.0);
    auto rho = density.path(path).rho;
    for (std::size_t k = 0; k < grid->size(); ++k) values[k][i] = rho[k] * w.values[k];
  });
  for (std::size_t k = 1; k < grid->size(); ++k) {
    auto s = sample_stats(values[k]);
    CHECK(std::abs(s.mean) <= 4.0 * s.std_error);
  }
}

TEST_CASE("admissibility check of the wealth integrand") {
  auto grid = TimeGrid::uniform(1.0, 16);
  auto u = uniform_maturities(1.0, 4);
  auto spec = jump_diffusion();
  MarketModel model(spec, InitialCurve::flat(0.02), u, grid);
  auto path = simulate_path(spec.triplet, grid, {3, 3});
  auto surface = model.evolve(path);
  auto check = admissibility_check(Portfolio::buy_and_hold({2, 4}, {1.0, -1.0}), model, surface, path);
  CHECK(check.ok);
  CHECK(check.value > 0.0);

  Portfolio unknown = Portfolio::buy_and_hold({9}, {1.0});
  CHECK_THROWS_AS(wealth_path(unknown, model, surface, path), MaturityError);
}

TEST_CASE("replication equations: Wiener-only market is solvable") {
  auto grid = TimeGrid::uniform(1.0, 64);
  auto u = uniform_maturities(1.0, 8);
  MartingaleMeasureSpec spec;
  spec.triplet = {0.0, 1.0, LevyMeasure()};
  spec.vol = VolatilitySpec::constant(0.1);
  MarketModel model(spec, InitialCurve::flat(0.02), u, grid);
  auto path = simulate_path(spec.triplet, grid, {5, 5});
  auto surface = model.evolve(path);

  ClaimRepresentation claim;
  claim.f_x = [](double s, const PathHistory&) { return 0.3 * std::cos(s); };
  const std::size_t node = 8;
  const double dt = grid->dt(0);
  // c(s) = -f_X(s) / (P^(s-, T) Sigma(s, T)) on the step containing s.
  Portfolio p{{node},
              {[&](const HedgeState& st) {
                const double s = st.t + 0.5 * dt;
                return -claim.f_x(s, {}) / (std::exp(st.log_p_hat[node]) * st.sigma[node]);
              }},
              0.0};
  const std::vector<double> no_probes;
  for (std::size_t k = 0; k + 1 < grid->steps(); ++k) {
    CHECK(replication_equations_residual(p, model, surface, claim, path, k, no_probes).eq2 <= 1e-10);
  }
}

TEST_CASE("replication equations: two atoms, one maturity is unsolvable") {
  auto grid = TimeGrid::uniform(1.0, 32);
  auto u = uniform_maturities(1.0, 4);
  MartingaleMeasureSpec spec;
  spec.triplet = {0.0, 0.0, LevyMeasure::atomic({{-1.0, 1.0}, {1.0, 1.0}})};
  spec.vol = VolatilitySpec::constant(0.2);
  MarketModel model(spec, InitialCurve::flat(0.02), u, grid);
  auto path = simulate_path(spec.triplet, grid, {6, 1});
  auto surface = model.evolve(path);

  GeneralIntegrand one;
  one.g = [](double, double, const PathHistory&) { return 1.0; };
  one.cls = IntegrandClass::Psi12Q;
  one.history_free = one.time_homogeneous = true;
  auto claim = ClaimRepresentation::jump_integral(one, spec.pair, spec.triplet.nu);
  const std::vector<double> atoms{-1.0, 1.0};
  const std::size_t node = 4;
  for (std::size_t k = 0; k < grid->steps(); k += 5) {
    // Least-squares c for c h(y_i) = 1 with h(y) = P^ (e^{-Sigma y} - 1).
    const double ph = surface.discounted(k, node), sig = surface.sigma[surface.index(k, node)];
    double hh = 0.0, h1 = 0.0;
    for (double y : atoms) {
      const double h = ph * std::expm1(-sig * y);
      hh += h * h;
      h1 += h;
    }
    const double c = h1 / hh;
    Portfolio p = Portfolio::buy_and_hold({node}, {c});
    auto r = replication_equations_residual(p, model, surface, claim, path, k, atoms);
    CHECK(std::max(r.eq3[0], r.eq3[1]) >= 0.1);
    // No quantity does better than the least-squares one.
    for (double alt : {-10.0, -1.0, 0.0, 1.0, 10.0}) {
      auto ra = replication_equations_residual(Portfolio::buy_and_hold({node}, {alt}), model, surface, claim, path,
                                               k, atoms);
      CHECK(std::max(ra.eq3[0], ra.eq3[1]) >= 0.1);
    }
  }
}

TEST_CASE("least-squares hedge: constant claim and a traded bond") {
  auto grid = TimeGrid::uniform(1.0, 64);
  auto u = uniform_maturities(1.0, 8);
  auto spec = jump_diffusion();
  MarketModel model(spec, InitialCurve::flat(0.02), u, grid);
  McConfig mc{grid, 4000, 31, 0};
  auto problem = build_hedge_problem(model, {ClaimRepresentation::constant(1.25), ClaimRepresentation::bond_payoff(8)},
                                     {{4, 8}, 4}, mc);
  auto constant = solve_hedge(problem, 0);
  CHECK(constant.initial_cost == doctest::Approx(1.25).epsilon(1e-14));
  CHECK(constant.residual_l2 <= 1e-12);

  auto bond = solve_hedge(problem, 1);
  CHECK(bond.residual_l2 <= 0.05 * bond.claim_l2);
  CHECK(bond.residual_l2 <= 0.05 * bond.claim_std);
  // Holding one unit of the bond in every bucket.
  for (std::size_t b = 0; b < 4; ++b) CHECK(std::abs(bond.coefficients[4 + b] - 1.0) <= 0.05);
}

TEST_CASE("least-squares hedge: first-order conditions and monotone refinement") {
  auto grid = TimeGrid::uniform(1.0, 64);
  auto u = uniform_maturities(1.0, 8);
  auto spec = jump_diffusion();
  MarketModel model(spec, InitialCurve::flat(0.02), u, grid);
  GeneralIntegrand g;
  g.g = [](double, double y, const PathHistory&) { return std::min(std::abs(y), 1.0); };
  g.cls = IntegrandClass::Psi12Q;
  g.history_free = g.time_homogeneous = true;
  g.y_breaks = {-1.0, 0.0, 1.0};
  auto claim = ClaimRepresentation::jump_integral(g, spec.pair, spec.triplet.nu);
  auto fine = build_hedge_problem(model, {claim, ClaimRepresentation::bond_payoff(6)}, {{2, 4, 6, 8}, 8},
                                  {grid, 3000, 41, 0});

  for (std::size_t c = 0; c < 2; ++c) {
    auto r = solve_hedge(fine, c);
    const double h = 1e-4;
    std::vector<double> beta = r.coefficients;
    for (std::size_t j = 0; j < beta.size(); ++j) {
      auto up = beta, down = beta;
      up[j] += h;
      down[j] -= h;
      const double grad = (hedge_objective(fine, c, r.initial_cost, up, r.regularization) -
                           hedge_objective(fine, c, r.initial_cost, down, r.regularization)) /
                          (2.0 * h);
      CHECK(std::abs(grad) <= 1e-8);
    }
  }

  const std::vector<std::pair<std::vector<std::size_t>, std::size_t>> levels{
      {{8}, 1}, {{4, 8}, 2}, {{2, 4, 6, 8}, 4}, {{2, 4, 6, 8}, 8}};
  for (std::size_t c = 0; c < 2; ++c) {
    double previous = std::numeric_limits<double>::infinity();
    for (const auto& [nodes, buckets] : levels) {
      const double r = solve_hedge(fine.restricted(nodes, buckets), c).residual_l2;
      CHECK(r <= previous + 1e-6);
      previous = r;
    }
  }
  CHECK_THROWS_AS(fine.restricted({3}, 1), MaturityError);
  CHECK_THROWS_AS(fine.restricted({2}, 3), DomainError);
}

TEST_CASE("least-squares hedge is independent of the thread count") {
  auto grid = TimeGrid::uniform(1.0, 32);
  auto u = uniform_maturities(1.0, 4);
  auto spec = jump_diffusion();
  MarketModel model(spec, InitialCurve::flat(0.02), u, grid);
  auto a = least_squares_hedge(model, ClaimRepresentation::bond_payoff(3), {{2, 4}, 2}, {grid, 1500, 7, 1});
  auto b = least_squares_hedge(model, ClaimRepresentation::bond_payoff(3), {{2, 4}, 2}, {grid, 1500, 7, 5});
  CHECK(a.coefficients == b.coefficients);
  CHECK(a.residual_l2 == b.residual_l2);
}

TEST_CASE("degenerate hedge basis raises SingularityError") {
  auto grid = TimeGrid::uniform(1.0, 16);
  auto u = uniform_maturities(1.0, 4);
  auto spec = jump_diffusion();
  spec.vol = VolatilitySpec::zero();
  MarketModel model(spec, InitialCurve::flat(0.02), u, grid);
  CHECK_THROWS_AS(least_squares_hedge(model, ClaimRepresentation::constant(1.0), {{4}, 2}, {grid, 100, 1, 0}),
                  SingularityError);
  CHECK_THROWS_AS(least_squares_hedge(model, ClaimRepresentation::constant(1.0), {{4}, 3}, {grid, 100, 1, 0}),
                  DomainError);
}
