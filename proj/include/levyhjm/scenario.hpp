#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "levyhjm/hedging.hpp"
#include "levyhjm/hjm_market.hpp"
#include "levyhjm/incompleteness.hpp"
#include "levyhjm/jump_calculus.hpp"

namespace levyhjm {

/// One isometry report request: a built-in integrand and the measure.
struct IsometryCase {
  std::string name;
  std::string kind;  // indicator | linear | piecewise | counterexample_g
  IntegrandSpec spec;
  bool under_q = false;
};

struct HedgeScenario {
  std::vector<std::size_t> nodes;  // maturity node indices
  std::size_t buckets = 1;
  double regularization = 1e-8;
  std::vector<std::string> claims;  // constant | bond_payoff | counterexample
  double constant_value = 1.0;
  std::size_t bond_node = 0;
  std::size_t sample_rows = 100;    // paths written to the residual CSV
};

struct IncompletenessScenario {
  double y0 = 1.0;
  double eps1 = 0.25;
  std::size_t K = 8;
  IncompletenessConfig config;
};

/// A validated scenario. Every failure while reading it is a
/// ValidationError naming the dotted TOML key.
struct Scenario {
  std::string source;  // file contents
  std::uint64_t hash = 0;

  std::size_t n_paths = 10000;
  std::uint64_t seed = 1;
  double horizon = 1.0;
  std::size_t steps = 512;
  std::string output = "out";

  MartingaleMeasureSpec market;  // triplet, pair, volatility
  InitialCurve curve = InitialCurve::flat(0.0);
  std::vector<double> maturities;
  DriftSpec drift = DriftSpec::hjm();

  std::size_t export_paths = 8;
  std::vector<double> checkpoints;  // girsanov diagnostics times
  std::vector<IsometryCase> isometry;
  std::vector<double> drift_test_maturities;
  HedgeScenario hedge;
  IncompletenessScenario incompleteness;

  GridPtr grid() const { return TimeGrid::uniform(horizon, steps); }
};

/// FNV-1a, 64 bit.
std::uint64_t fnv1a(std::string_view bytes);

Scenario parse_scenario(const std::string& text, const std::string& origin = "scenario");
Scenario load_scenario(const std::string& path);

}  // namespace levyhjm
