#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "levyhjm/errors.hpp"
#include "levyhjm/jump_set.hpp"
#include "levyhjm/quadrature.hpp"

using namespace levyhjm;

TEST_CASE("smooth integrands on finite intervals") {
  auto r = quad::integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-13));
  auto poly = quad::integrate([](double x) { return x * x * x; }, -1.0, 2.0);
  CHECK(poly.value == doctest::Approx(3.75).epsilon(1e-14));
}

TEST_CASE("infinite limits") {
  auto r = quad::integrate([](double x) { return std::exp(-x); }, 1.0, kInf);
  CHECK(r.value == doctest::Approx(std::exp(-1.0)).epsilon(1e-11));
  auto g = quad::integrate([](double x) { return std::exp(-x * x); }, -kInf, kInf);
  CHECK(g.value == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-11));
}

TEST_CASE("reversed limits negate") {
  auto f = [](double x) { return x; };
  CHECK(quad::integrate(f, 1.0, 0.0).value == doctest::Approx(-0.5));
}

TEST_CASE("step function with the jump as a break is exact") {
  auto step = [](double x) { return x < 0.3 ? 1.0 : 2.0; };
  std::vector<double> breaks{0.3};
  auto r = quad::integrate_piecewise(step, 0.0, 1.0, breaks);
  CHECK(r.value == doctest::Approx(0.3 + 1.4).epsilon(1e-14));
}

TEST_CASE("step function without a break still converges") {
  auto step = [](double x) { return x < 0.3 ? 1.0 : 2.0; };
  auto r = quad::integrate(step, 0.0, 1.0);
  CHECK(std::abs(r.value - 1.7) < 1e-9);
}

TEST_CASE("integrable endpoint singularity") {
  auto r = quad::integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("divergent integrals raise") {
  CHECK_THROWS_AS(quad::integrate([](double x) { return 1.0 / x; }, 0.0, 1.0), DivergenceError);
  CHECK_THROWS_AS(quad::integrate([](double) { return 1.0; }, 0.0, kInf), DivergenceError);
}
