#include <cmath>
#include <vector>

#include "doctest.h"
#include "levyhjm/errors.hpp"
#include "levyhjm/girsanov.hpp"
#include "levyhjm/jump_calculus.hpp"
#include "levyhjm/parallel.hpp"

using namespace levyhjm;

namespace {

LevyPath fixed_path(GridPtr grid, std::vector<Jump> jumps) {
  LevyPath p;
  p.grid = std::move(grid);
  p.brownian.assign(p.grid->size(), 0.0);
  p.jumps = std::move(jumps);
  p.z.assign(p.grid->size(), 0.0);
  return p;
}

GeneralIntegrand fn(IntegrandFn g, IntegrandClass cls, std::vector<double> breaks = {}) {
  GeneralIntegrand out;
  out.g = std::move(g);
  out.cls = cls;
  out.history_free = true;
  out.time_homogeneous = true;
  out.y_breaks = std::move(breaks);
  return out;
}

}  // namespace

TEST_CASE("simple indicator integral is count minus compensator") {
  auto nu = LevyMeasure::atomic({{1.0, 2.0}});
  LevyTriplet tr{0.0, 0.0, nu};
  auto grid = TimeGrid::uniform(1.0, 8);
  auto g = SimpleIntegrand::indicator(1.0, JumpSet::point(1.0));
  for (std::uint64_t i = 0; i < 20; ++i) {
    auto path = simulate_path(tr, grid, {31, i});
    auto I = integrate_simple_P(g, path, nu);
    const double count = static_cast<double>(jump_counting(path, 1.0, JumpSet::point(1.0)));
    CHECK(I.final_value() == doctest::Approx(count - 2.0).epsilon(1e-14));
  }
}

TEST_CASE("zero simple integrand") {
  auto nu = LevyMeasure::atomic({{1.0, 2.0}});
  auto path = simulate_path({0.0, 0.0, nu}, TimeGrid::uniform(1.0, 8), {1, 1});
  auto I = integrate_simple_P(SimpleIntegrand::indicator(1.0, JumpSet::point(1.0), 0.0), path, nu);
  for (double v : I.values) CHECK(v == 0.0);
}

TEST_CASE("simple integrand validation") {
  SimpleIntegrand g;
  g.partition = {0.0, 1.0};
  g.terms = {{SimpleTerm::constant(JumpSet::closed(0.5, 2.0), 1.0), SimpleTerm::constant(JumpSet::point(1.0), 1.0)}};
  g.bound = 1.0;
  CHECK_THROWS_AS(g.validate(), DomainError);
  g.terms = {{SimpleTerm::constant(JumpSet::closed(-1.0, 2.0), 1.0)}};
  CHECK_THROWS_AS(g.validate(), DomainError);
  g.terms = {{SimpleTerm::constant(JumpSet::point(1.0), 3.0)}};
  auto nu = LevyMeasure::atomic({{1.0, 2.0}});
  auto path = simulate_path({0.0, 0.0, nu}, TimeGrid::uniform(1.0, 8), {1, 1});
  CHECK_THROWS_AS(integrate_simple_P(g, path, nu), BoundError);
}

TEST_CASE("isometry for c 1_{1} under P by Monte Carlo") {
  // E[I(g)_1^2] = c^2 nu({1}) = 18.
  auto nu = LevyMeasure::atomic({{1.0, 2.0}});
  LevyTriplet tr{0.0, 0.0, nu};
  auto grid = TimeGrid::uniform(1.0, 4);
  auto g = SimpleIntegrand::indicator(1.0, JumpSet::point(1.0), 3.0);
  auto sq = parallel_map<double>(100000, [&](std::size_t i) {
    auto I = integrate_simple_P(g, simulate_path(tr, grid, {41, i}), nu);
    return I.final_value() * I.final_value();
  });
  auto s = sample_stats(sq);
  CHECK(std::abs(s.mean - 18.0) < 4.0 * s.std_error);
}

TEST_CASE("general integral on a fixed path") {
  auto nu = LevyMeasure::atomic({{2.0, 1.0}});
  auto g = fn([](double, double y, const PathHistory&) { return std::abs(y) > 1.0 ? y : 0.0; }, IntegrandClass::Psi1,
              {-1.0, 1.0});
  auto path = fixed_path(TimeGrid::uniform(1.0, 10), {{0.4, 2.0}});
  auto I = integrate_general(g, path, nu, Compensator::P());
  CHECK(I.final_value() == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(I.values[3] == doctest::Approx(-0.6));
  CHECK(I.values[4] == doctest::Approx(1.2));
  REQUIRE(I.jump_times.size() == 1);
  CHECK(I.jump_sizes[0] == 2.0);
  CHECK(I.jump_values[0] == doctest::Approx(2.0 - 0.8));
}

TEST_CASE("martingale mean of int y dpi~") {
  auto nu = LevyMeasure::atomic({{0.5, 4.0}});
  LevyTriplet tr{0.0, 0.0, nu};
  auto grid = TimeGrid::uniform(1.0, 4);
  auto g = fn([](double, double y, const PathHistory&) { return y; }, IntegrandClass::Psi2);
  CompensatorCache cache(g, nu, Compensator::P(), grid);
  auto v = parallel_map<double>(100000, [&](std::size_t i) {
    return integrate_general(g, simulate_path(tr, grid, {42, i}), nu, Compensator::P(), &cache).final_value();
  });
  auto s = sample_stats(v);
  CHECK(std::abs(s.mean) < 4.0 * s.std_error);
}

TEST_CASE("Q compensator with a constant tilt") {
  auto nu = LevyMeasure::atomic({{1.0, 1.0}});
  auto pair = GeneratingPair::constant(0.0, std::log(2.0));
  auto g = fn([](double, double y, const PathHistory&) { return y == 1.0 ? 1.0 : 0.0; }, IntegrandClass::Psi1Q);
  LevyTriplet tr{0.0, 0.0, nu};
  for (std::uint64_t i = 0; i < 10; ++i) {
    auto path = simulate_path(tr, TimeGrid::uniform(1.0, 8), {43, i});
    auto I = integrate_general(g, path, nu, Compensator::Q(pair));
    const double count = static_cast<double>(jump_counting(path, 1.0, JumpSet::point(1.0)));
    CHECK(I.final_value() == doctest::Approx(count - 2.0).epsilon(1e-14));
    CHECK(compensated_count(path, nu, Compensator::Q(pair), 1.0, JumpSet::point(1.0)) ==
          doctest::Approx(count - 2.0).epsilon(1e-14));
  }
}

TEST_CASE("class mismatch with the compensator") {
  auto nu = LevyMeasure::atomic({{1.0, 1.0}});
  auto pair = GeneratingPair::constant(0.0, 0.5);
  auto g = fn([](double, double y, const PathHistory&) { return y; }, IntegrandClass::Psi2);
  auto path = fixed_path(TimeGrid::uniform(1.0, 4), {});
  CHECK_THROWS_AS(integrate_general(g, path, nu, Compensator::Q(pair)), ClassError);
}

TEST_CASE("class checks") {
  auto atomic = LevyMeasure::atomic({{0.5, 4.0}});
  auto small_y = fn([](double, double y, const PathHistory&) { return std::abs(y) <= 1.0 ? y : 0.0; },
                    IntegrandClass::Psi2, {-1.0, 1.0});
  for (double horizon : {1.0, 2.5}) {
    auto r = class_check(small_y, atomic, nullptr, IntegrandClass::Psi2, horizon);
    CHECK(r.ok);
    CHECK(r.value == doctest::Approx(0.25 * 4.0 * horizon));
  }

  auto dens = LevyMeasure::double_exponential({2.0, 0.5, 1.5, 1.5});
  auto blowup = fn([](double, double y, const PathHistory&) { return 1.0 / (y * y); }, IntegrandClass::Psi12);
  auto bad = class_check(blowup, dens, nullptr, IntegrandClass::Psi12, 1.0);
  CHECK_FALSE(bad.ok);
  CHECK_FALSE(bad.message.empty());

  // Bounded by min(y^2, 1) times e^psi: finite under Q.
  auto pair = GeneratingPair::constant(0.0, 0.3);
  auto capped = fn([](double, double y, const PathHistory&) { return std::min(std::abs(y), 1.0); },
                   IntegrandClass::Psi12Q, {-1.0, 1.0});
  auto ok = class_check(capped, dens, &pair, IntegrandClass::Psi12Q, 1.0);
  CHECK(ok.ok);
  CHECK(ok.value <= std::exp(0.3) * dens.integrability() * (1.0 + 1e-9));
}

TEST_CASE("class integral with time dependence") {
  auto nu = LevyMeasure::atomic({{1.0, 2.0}});
  GeneralIntegrand g;
  g.g = [](double s, double, const PathHistory&) { return s; };
  g.cls = IntegrandClass::Psi2;
  g.history_free = true;
  auto r = class_check(g, nu, nullptr, IntegrandClass::Psi2, 1.0);
  CHECK(r.ok);
  CHECK(r.value == doctest::Approx(2.0 / 3.0).epsilon(1e-9));  // int_0^1 s^2 ds * 2
}

TEST_CASE("isometry estimates under P and Q") {
  auto nu = LevyMeasure::atomic({{1.0, 2.0}});
  LevyTriplet tr{0.0, 0.0, nu};
  McConfig mc{TimeGrid::uniform(1.0, 4), 100000, 51, 0};
  auto ind = fn([](double, double y, const PathHistory&) { return y == 1.0 ? 1.0 : 0.0; }, IntegrandClass::Psi2);
  auto p = estimate_isometry(ind, tr, Compensator::P(), mc);
  CHECK(p.rhs == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(std::abs(p.lhs - p.rhs) <= 4.0 * p.se);

  auto pair = GeneratingPair::constant(0.0, std::log(2.0));
  auto indq = ind;
  indq.cls = IntegrandClass::Psi2Q;
  mc.n_paths = 40000;
  auto q = estimate_isometry(indq, tr, Compensator::Q(pair), mc);
  CHECK(q.rhs == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(std::abs(q.lhs - q.rhs) <= 4.0 * q.se);
}

TEST_CASE("isometry battery") {
  McConfig mc{TimeGrid::uniform(1.0, 8), 20000, 52, 0};
  struct Case {
    GeneralIntegrand g;
    LevyMeasure nu;
  };
  std::vector<Case> cases;
  cases.push_back({fn([](double, double y, const PathHistory&) { return y; }, IntegrandClass::Psi2),
                   LevyMeasure::atomic({{0.5, 4.0}, {-1.5, 1.0}})});
  cases.push_back({fn([](double, double y, const PathHistory&) { return y * y; }, IntegrandClass::Psi2),
                   LevyMeasure::double_exponential({3.0, 0.5, 2.0, 3.0})});
  cases.push_back({fn([](double, double y, const PathHistory&) { return y > 0.2 ? 1.5 : 0.0; },
                      IntegrandClass::Psi2, {0.2}),
                   LevyMeasure::double_exponential({2.0, 0.7, 1.0, 2.0})});
  cases.push_back({fn([](double, double y, const PathHistory&) { return std::sin(3.0 * y); }, IntegrandClass::Psi2),
                   LevyMeasure::truncated_uniform({-2.0, 1.5, 0.25, 5.0})});
  {
    GeneralIntegrand t;
    t.g = [](double s, double y, const PathHistory&) { return (1.0 + s) * y; };
    t.cls = IntegrandClass::Psi2;
    t.history_free = true;
    cases.push_back({t, LevyMeasure::atomic({{1.0, 3.0}})});
  }
  {
    // Predictable: scaled by the number of earlier jumps.
    GeneralIntegrand h;
    h.g = [](double, double y, const PathHistory& hist) {
      return y * (1.0 + 0.5 * static_cast<double>(hist.jumps().size()));
    };
    h.cls = IntegrandClass::Psi2;
    cases.push_back({h, LevyMeasure::atomic({{1.0, 1.5}, {-0.5, 1.0}})});
  }
  for (const auto& c : cases) {
    auto est = estimate_isometry(c.g, {0.0, 0.0, c.nu}, Compensator::P(), mc);
    CHECK(std::abs(est.lhs - est.rhs) <= 4.0 * est.se);
  }
}

TEST_CASE("quadratic covariation under Q") {
  auto grid = TimeGrid::uniform(1.0, 4);
  McConfig mc{grid, 100000, 61, 0};
  {
    LevyTriplet tr{0.0, 0.0, LevyMeasure::atomic({{1.0, 1.0}, {-1.0, 1.0}})};
    auto est = estimate_covariation_Q(JumpSet::point(1.0), JumpSet::point(-1.0), tr, GeneratingPair::identity(),
                                      1.0, mc);
    CHECK(est.predicted == 0.0);
    CHECK(std::abs(est.mc) <= 4.0 * est.mc_se);
  }
  LevyTriplet tr{0.0, 0.0, LevyMeasure::atomic({{1.0, 2.0}})};
  {
    auto est = estimate_covariation_Q(JumpSet::point(1.0), JumpSet::point(1.0), tr, GeneratingPair::identity(),
                                      1.0, mc);
    CHECK(est.predicted == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(std::abs(est.mc - est.predicted) <= 4.0 * est.mc_se);
  }
  {
    const double theta = 0.4;
    mc.n_paths = 60000;
    auto est = estimate_covariation_Q(JumpSet::point(1.0), JumpSet::point(1.0), tr,
                                      GeneratingPair::constant(0.0, theta), 1.0, mc);
    CHECK(est.predicted == doctest::Approx(2.0 * std::exp(theta)).epsilon(1e-14));
    CHECK(std::abs(est.mc - est.predicted) <= 4.0 * est.mc_se);
  }
  CHECK_THROWS_AS(estimate_covariation_Q(JumpSet::closed(-1.0, 1.0), JumpSet::point(1.0), tr,
                                         GeneratingPair::identity(), 1.0, mc),
                  DomainError);
}

TEST_CASE("pathwise structure of simple integrals") {
  auto nu = LevyMeasure::double_exponential({4.0, 0.5, 2.0, 2.0});
  LevyTriplet tr{0.0, 0.0, nu};
  auto grid = TimeGrid::uniform(1.0, 16);
  SimpleIntegrand g;
  g.partition = {0.0, 0.25, 0.6, 1.0};
  g.bound = 5.0;
  g.terms = {
      {SimpleTerm::constant(JumpSet::above(0.5), 2.0), SimpleTerm::constant(JumpSet::below(-0.2), -1.0)},
      {{JumpSet::closed(0.1, 1.0), [](const PathHistory& h) { return std::min(5.0, double(h.jumps().size())); }}},
      {SimpleTerm::constant(JumpSet::abs_at_least(0.3), 0.5)},
  };
  auto general = GeneralIntegrand::from_simple(g);
  SimpleIntegrand g2 = SimpleIntegrand::indicator(1.0, JumpSet::above(1.0), 1.0);
  auto general2 = GeneralIntegrand::from_simple(g2);
  for (std::uint64_t i = 0; i < 30; ++i) {
    auto path = simulate_path(tr, grid, {71, i});
    auto a = integrate_simple_P(g, path, nu);
    auto b = integrate_general(general, path, nu, Compensator::P());
    for (std::size_t k = 0; k < grid->size(); ++k) CHECK(std::abs(a.values[k] - b.values[k]) <= 1e-10);

    // Jumps of I equal the active coefficient on the jump's set.
    for (std::size_t j = 0; j < a.jump_times.size(); ++j) CHECK(a.jump_sizes[j] == b.jump_sizes[j]);

    // Linearity on a shared path.
    auto c = integrate_simple_P(g2, path, nu);
    GeneralIntegrand combo;
    combo.g = [&](double s, double y, const PathHistory& h) {
      return 2.0 * general.g(s, y, h) - 3.0 * general2.g(s, y, h);
    };
    combo.cls = IntegrandClass::Psi2;
    combo.s_breaks = g.partition;
    combo.y_breaks = general.y_breaks;
    combo.y_breaks.push_back(1.0);
    auto d = integrate_general(combo, path, nu, Compensator::P());
    CHECK(std::abs(d.final_value() - (2.0 * a.final_value() - 3.0 * c.final_value())) <= 1e-9);
  }
}

TEST_CASE("martingale mean at every grid time, under P and weighted Q") {
  auto nu = LevyMeasure::double_exponential({3.0, 0.6, 2.5, 2.0});
  LevyTriplet tr{0.0, 0.0, nu};
  auto grid = TimeGrid::uniform(1.0, 4);
  auto pair = GeneratingPair::linear(0.0, 0.2, 0.3);
  auto g = fn([](double, double y, const PathHistory&) { return std::tanh(y); }, IntegrandClass::Psi2);
  auto gq = g;
  gq.cls = IntegrandClass::Psi2Q;
  CompensatorCache cp(g, nu, Compensator::P(), grid);
  CompensatorCache cq(gq, nu, Compensator::Q(pair), grid);
  DensityModel density(pair, tr, grid);
  const std::size_t n = 40000;
  std::vector<std::vector<double>> p(grid->size(), std::vector<double>(n)), q = p;
  parallel_for(n, [&](std::size_t i) {
    auto path = simulate_path(tr, grid, {81, i});
    auto a = integrate_general(g, path, nu, Compensator::P(), &cp);
    auto b = integrate_general(gq, path, nu, Compensator::Q(pair), &cq);
    auto rho = density.path(path);
    for (std::size_t k = 0; k < grid->size(); ++k) {
      p[k][i] = a.values[k];
      q[k][i] = rho.rho[k] * b.values[k];
    }
  });
  for (std::size_t k = 1; k < grid->size(); ++k) {
    auto sp = sample_stats(p[k]);
    auto sq = sample_stats(q[k]);
    CHECK(std::abs(sp.mean) <= 4.0 * sp.std_error);
    CHECK(std::abs(sq.mean) <= 4.0 * sq.std_error);
  }
}

TEST_CASE("Psi12 integrands are split at |g| = 1") {
  auto nu = LevyMeasure::atomic({{0.5, 1.0}, {3.0, 0.5}, {1.0, 0.5}});
  auto g = fn([](double, double y, const PathHistory&) { return y; }, IntegrandClass::Psi12);
  auto path = fixed_path(TimeGrid::uniform(1.0, 4), {{0.1, 0.5}, {0.3, 3.0}, {0.6, 1.0}});
  auto I = integrate_general(g, path, nu, Compensator::P());
  // Small part: y in {0.5, 1} (tie to the small side), large part: y = 3.
  CHECK(I.small_part.back() == doctest::Approx(1.5 - (0.5 + 0.5)));
  CHECK(I.large_part.back() == doctest::Approx(3.0 - 1.5));
  CHECK(I.final_value() == doctest::Approx(I.small_part.back() + I.large_part.back()));
}

TEST_CASE("integrand registry") {
  IntegrandSpec spec;
  spec.kind = "indicator";
  spec.set = JumpSet::point(1.0);
  spec.scale = 2.0;
  auto g = make_integrand(spec);
  CHECK(g.g(0.0, 1.0, {}) == 2.0);
  CHECK(g.g(0.0, 0.5, {}) == 0.0);
  spec.kind = "linear";
  spec.set = {};
  CHECK(make_integrand(spec).g(0.0, 0.5, {}) == 1.0);
  spec.kind = "piecewise";
  spec.edges = {0.0, 1.0};
  spec.values = {-1.0, 0.5, 3.0};
  auto pw = make_integrand(spec);
  CHECK(pw.g(0.0, -2.0, {}) == -2.0);
  CHECK(pw.g(0.0, 0.2, {}) == 1.0);
  CHECK(pw.g(0.0, 1.0, {}) == 6.0);
  spec.kind = "nope";
  CHECK_THROWS_AS(make_integrand(spec), DomainError);
  spec.kind = "indicator";
  spec.set = JumpSet::closed(-1.0, 1.0);
  CHECK_THROWS_AS(make_integrand(spec), DomainError);
}
