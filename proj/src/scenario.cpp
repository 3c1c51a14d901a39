#include "levyhjm/scenario.hpp"

#include <toml.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

#include "levyhjm/errors.hpp"

namespace levyhjm {

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

// Typed access to dotted keys; every failure names the key.
class Reader {
 public:
  explicit Reader(const toml::table& root) : root_(root) {}

  bool has(const std::string& key) const { return static_cast<bool>(root_.at_path(key)); }

  double number(const std::string& key, double fallback) const {
    auto node = root_.at_path(key);
    if (!node) return fallback;
    if (auto v = node.value<double>()) {
      if (!std::isfinite(*v)) throw ValidationError(key, "must be finite");
      return *v;
    }
    throw ValidationError(key, "expected a number");
  }

  std::size_t count(const std::string& key, std::size_t fallback) const {
    auto node = root_.at_path(key);
    if (!node) return fallback;
    if (!node.is_integer()) throw ValidationError(key, "expected an integer");
    const auto v = *node.value<std::int64_t>();
    if (v < 0) throw ValidationError(key, "must be non-negative");
    return static_cast<std::size_t>(v);
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    auto node = root_.at_path(key);
    if (!node) return fallback;
    if (auto v = node.value<std::string>()) return *v;
    throw ValidationError(key, "expected a string");
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const {
    auto node = root_.at_path(key);
    if (!node) return fallback;
    const toml::array* arr = node.as_array();
    if (!arr) throw ValidationError(key, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < arr->size(); ++i) {
      auto v = (*arr)[i].value<double>();
      if (!v || !std::isfinite(*v)) throw ValidationError(key + "[" + std::to_string(i) + "]", "expected a finite number");
      out.push_back(*v);
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key, std::vector<std::string> fallback) const {
    auto node = root_.at_path(key);
    if (!node) return fallback;
    const toml::array* arr = node.as_array();
    if (!arr) throw ValidationError(key, "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < arr->size(); ++i) {
      auto v = (*arr)[i].value<std::string>();
      if (!v) throw ValidationError(key + "[" + std::to_string(i) + "]", "expected a string");
      out.push_back(*v);
    }
    return out;
  }

  const toml::table& root() const { return root_; }

 private:
  const toml::table& root_;
};

double positive(const std::string& key, double v) {
  if (!(v > 0.0)) throw ValidationError(key, "must be positive");
  return v;
}

double non_negative(const std::string& key, double v) {
  if (!(v >= 0.0)) throw ValidationError(key, "must be non-negative");
  return v;
}

// Runs a library constructor, reporting its errors under `key`.
template <class F>
auto at_key(const std::string& key, F&& make) {
  try {
    return make();
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError(key, e.what());
  }
}

LevyMeasure read_measure(const Reader& r) {
  const std::string kind = r.text("levy.measure.kind", "zero");
  const double eps = non_negative("levy.eps_trunc", r.number("levy.eps_trunc", 0.0));
  if (kind == "zero") return LevyMeasure();
  if (kind == "atomic") {
    const auto loc = r.numbers("levy.measure.locations", {});
    const auto rates = r.numbers("levy.measure.rates", {});
    if (loc.size() != rates.size()) throw ValidationError("levy.measure.rates", "one rate per location");
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < loc.size(); ++i) {
      non_negative("levy.measure.rates[" + std::to_string(i) + "]", rates[i]);
      atoms.push_back({loc[i], rates[i]});
    }
    return at_key("levy.measure", [&] { return LevyMeasure::atomic(atoms, eps); });
  }
  if (kind == "double_exponential") {
    DoubleExponential p;
    p.lambda = non_negative("levy.measure.lambda", r.number("levy.measure.lambda", p.lambda));
    p.p = r.number("levy.measure.p", p.p);
    if (!(p.p >= 0.0 && p.p <= 1.0)) throw ValidationError("levy.measure.p", "must lie in [0, 1]");
    p.eta_plus = positive("levy.measure.eta_plus", r.number("levy.measure.eta_plus", p.eta_plus));
    p.eta_minus = positive("levy.measure.eta_minus", r.number("levy.measure.eta_minus", p.eta_minus));
    return at_key("levy.measure", [&] { return LevyMeasure::double_exponential(p, eps); });
  }
  if (kind == "truncated_uniform") {
    TruncatedUniform p;
    p.lower = r.number("levy.measure.lower", p.lower);
    p.upper = r.number("levy.measure.upper", p.upper);
    p.eps0 = non_negative("levy.measure.eps0", r.number("levy.measure.eps0", p.eps0));
    p.lambda = non_negative("levy.measure.lambda", r.number("levy.measure.lambda", p.lambda));
    return at_key("levy.measure", [&] { return LevyMeasure::truncated_uniform(p, eps); });
  }
  throw ValidationError("levy.measure.kind", "unknown measure '" + kind + "'");
}

GeneratingPair read_pair(const Reader& r) {
  const double phi = r.number("girsanov.phi", 0.0);
  const std::string kind = r.text("girsanov.psi.kind", "zero");
  if (kind == "zero") return GeneratingPair::constant(phi, 0.0);
  if (kind == "constant") return GeneratingPair::constant(phi, r.number("girsanov.psi.theta", 0.0));
  if (kind == "linear") {
    return GeneratingPair::linear(phi, r.number("girsanov.psi.theta0", 0.0), r.number("girsanov.psi.theta1", 0.0));
  }
  if (kind == "tabulated") {
    auto edges = r.numbers("girsanov.psi.edges", {});
    auto values = r.numbers("girsanov.psi.values", {});
    return at_key("girsanov.psi", [&] { return GeneratingPair::tabulated(phi, edges, values); });
  }
  throw ValidationError("girsanov.psi.kind", "unknown psi '" + kind + "'");
}

VolatilitySpec read_vol(const Reader& r) {
  const std::string kind = r.text("market.vol.kind", "constant");
  if (kind == "zero") return VolatilitySpec::zero();
  if (kind == "constant") return VolatilitySpec::constant(r.number("market.vol.sigma", 0.1));
  if (kind == "exponential") {
    return VolatilitySpec::exponential(r.number("market.vol.sigma", 0.1),
                                       non_negative("market.vol.kappa", r.number("market.vol.kappa", 1.0)));
  }
  throw ValidationError("market.vol.kind", "unknown volatility '" + kind + "'");
}

std::size_t node_of(const Scenario& s, const std::string& key, double T) {
  for (std::size_t m = 0; m < s.maturities.size(); ++m) {
    if (std::abs(s.maturities[m] - T) <= 1e-12 * std::max(1.0, std::abs(T))) return m;
  }
  throw ValidationError(key, "maturity " + std::to_string(T) + " is not a market maturity");
}

void read_market(const Reader& r, Scenario& s) {
  const auto grid = s.grid();
  const std::string curve = r.text("market.curve.kind", "flat");
  if (curve == "flat") {
    s.curve = InitialCurve::flat(r.number("market.curve.rate", 0.02));
  } else if (curve == "tabulated") {
    auto knots = r.numbers("market.curve.knots", {});
    auto rates = r.numbers("market.curve.rates", {});
    s.curve = at_key("market.curve", [&] { return InitialCurve::tabulated(knots, rates); });
  } else {
    throw ValidationError("market.curve.kind", "unknown curve '" + curve + "'");
  }

  auto node = r.root().at_path("market.maturities");
  if (!node || node.is_integer()) {
    const std::size_t n = r.count("market.maturities", 32);
    if (n == 0 || s.steps % n != 0) throw ValidationError("market.maturities", "count must divide run.steps");
    for (std::size_t i = 0; i <= n; ++i) s.maturities.push_back(s.horizon * static_cast<double>(i) / static_cast<double>(n));
  } else {
    s.maturities = r.numbers("market.maturities", {});
    if (s.maturities.empty() || s.maturities.front() != 0.0) s.maturities.insert(s.maturities.begin(), 0.0);
    for (std::size_t i = 0; i < s.maturities.size(); ++i) {
      const std::string key = "market.maturities[" + std::to_string(i) + "]";
      if (i > 0 && !(s.maturities[i] > s.maturities[i - 1])) throw ValidationError(key, "must increase");
      if (grid->index_of(s.maturities[i]) == TimeGrid::npos) throw ValidationError(key, "must be a grid time");
    }
  }

  const std::string drift = r.text("market.drift", "hjm");
  const double shift = r.number("market.drift_shift", 0.0);
  if (drift == "hjm") {
    s.drift = DriftSpec::hjm(shift);
  } else if (drift == "explicit") {
    const double alpha = r.number("market.alpha", 0.0) + shift;
    s.drift = DriftSpec::explicit_alpha([alpha](double, double, const PathHistory&) { return alpha; });
  } else {
    throw ValidationError("market.drift", "expected 'hjm' or 'explicit'");
  }
  s.market.vol = read_vol(r);
}

void read_isometry(const Reader& r, Scenario& s) {
  auto node = r.root().at_path("isometry.cases");
  if (!node) {
    IsometryCase big;
    big.name = "indicator_big_jumps";
    big.kind = "indicator";
    big.spec.kind = "indicator";
    big.spec.set = JumpSet::abs_above(0.5);
    IsometryCase lin;
    lin.name = "linear";
    lin.kind = "linear";
    lin.spec.kind = "linear";
    IsometryCase lin_q = lin;
    lin_q.name = "linear_q";
    lin_q.under_q = true;
    lin_q.spec.cls = IntegrandClass::Psi2Q;
    s.isometry = {big, lin, lin_q};
    return;
  }
  const toml::array* arr = node.as_array();
  if (!arr) throw ValidationError("isometry.cases", "expected an array of tables");
  for (std::size_t i = 0; i < arr->size(); ++i) {
    const std::string base = "isometry.cases[" + std::to_string(i) + "]";
    if (!(*arr)[i].is_table()) throw ValidationError(base, "expected a table");
    IsometryCase c;
    c.kind = r.text(base + ".kind", "indicator");
    c.name = r.text(base + ".name", c.kind + "_" + std::to_string(i));
    const std::string measure = r.text(base + ".measure", "P");
    if (measure != "P" && measure != "Q") throw ValidationError(base + ".measure", "expected 'P' or 'Q'");
    c.under_q = measure == "Q";
    c.spec.kind = c.kind;
    c.spec.scale = r.number(base + ".scale", 1.0);
    c.spec.cls = c.under_q ? IntegrandClass::Psi2Q : IntegrandClass::Psi2;
    if (c.kind == "indicator" || c.kind == "linear") {
      if (r.has(base + ".lo") || r.has(base + ".hi") || c.kind == "indicator") {
        const double lo = r.number(base + ".lo", 0.5);
        const double hi = r.number(base + ".hi", kInf);
        if (!(hi > lo)) throw ValidationError(base + ".hi", "must exceed lo");
        c.spec.set = JumpSet{{lo, hi, true, true}};
        if (!c.spec.set.separated_from_zero()) throw ValidationError(base + ".lo", "the set must be separated from 0");
      }
    } else if (c.kind == "piecewise") {
      c.spec.edges = r.numbers(base + ".edges", {});
      c.spec.values = r.numbers(base + ".values", {});
      if (c.spec.values.size() != c.spec.edges.size() + 1) {
        throw ValidationError(base + ".values", "need one more value than edges");
      }
    } else if (c.kind == "counterexample_g") {
      c.spec.cls = c.under_q ? IntegrandClass::Psi12Q : IntegrandClass::Psi12;
    } else {
      throw ValidationError(base + ".kind", "unknown integrand '" + c.kind + "'");
    }
    s.isometry.push_back(std::move(c));
  }
}

void read_hedge(const Reader& r, Scenario& s) {
  HedgeScenario& h = s.hedge;
  const std::vector<double> fallback{0.25 * s.horizon, 0.5 * s.horizon, 0.75 * s.horizon, s.horizon};
  const auto times = r.numbers("hedge.maturities", fallback);
  if (times.empty()) throw ValidationError("hedge.maturities", "must not be empty");
  for (std::size_t i = 0; i < times.size(); ++i) {
    h.nodes.push_back(node_of(s, "hedge.maturities[" + std::to_string(i) + "]", times[i]));
    if (h.nodes.back() == 0) throw ValidationError("hedge.maturities[" + std::to_string(i) + "]", "must be positive");
  }
  h.buckets = r.count("hedge.buckets", 4);
  if (h.buckets == 0 || s.steps % h.buckets != 0) throw ValidationError("hedge.buckets", "must divide run.steps");
  h.regularization = non_negative("hedge.regularization", r.number("hedge.regularization", 1e-8));
  h.claims = r.strings("hedge.claims", {"constant", "bond_payoff", "counterexample"});
  for (std::size_t i = 0; i < h.claims.size(); ++i) {
    const auto& c = h.claims[i];
    if (c != "constant" && c != "bond_payoff" && c != "counterexample") {
      throw ValidationError("hedge.claims[" + std::to_string(i) + "]", "unknown claim '" + c + "'");
    }
  }
  h.constant_value = r.number("hedge.constant_value", 1.0);
  h.bond_node = node_of(s, "hedge.bond_maturity", r.number("hedge.bond_maturity", s.horizon));
  h.sample_rows = r.count("hedge.sample_rows", 100);
}

void read_incompleteness(const Reader& r, Scenario& s) {
  IncompletenessScenario& inc = s.incompleteness;
  inc.y0 = r.number("incompleteness.y0", 1.0);
  if (inc.y0 == 0.0) throw ValidationError("incompleteness.y0", "must be nonzero");
  inc.eps1 = r.number("incompleteness.eps1", std::min(0.25, std::abs(inc.y0) / 2.0));
  if (!(inc.eps1 > 0.0 && inc.eps1 < std::abs(inc.y0))) throw ValidationError("incompleteness.eps1", "must lie in (0, |y0|)");
  inc.K = r.count("incompleteness.K", 8);
  if (inc.K < 4) throw ValidationError("incompleteness.K", "must be at least 4");
  inc.config.k0 = r.number("incompleteness.k0", 3.0);
  if (!(inc.config.k0 > 0.0)) throw ValidationError("incompleteness.k0", "must be positive");
  inc.config.levels = r.count("incompleteness.levels", 4);
  if (inc.config.levels == 0 || inc.config.levels > 16) throw ValidationError("incompleteness.levels", "must lie in [1, 16]");
  const std::size_t finest = std::size_t{1} << (inc.config.levels - 1);
  if ((s.maturities.size() - 1) % finest != 0 || s.steps % finest != 0) {
    throw ValidationError("incompleteness.levels", "2^(levels-1) must divide the maturity count and run.steps");
  }
  inc.config.snapshots = r.count("incompleteness.snapshots", 10);
  if (inc.config.snapshots == 0) throw ValidationError("incompleteness.snapshots", "must be positive");
  inc.config.control_node = node_of(s, "incompleteness.control_maturity",
                                    r.number("incompleteness.control_maturity", s.horizon));
  if (inc.config.control_node == 0) throw ValidationError("incompleteness.control_maturity", "must be positive");
  inc.config.reg_scale = non_negative("incompleteness.regularization", r.number("incompleteness.regularization", 1e-8));
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  toml::table root;
  try {
    root = toml::parse(text, origin);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << e.description() << " (" << origin << ":" << e.source().begin.line << ":" << e.source().begin.column << ")";
    throw ValidationError("", os.str());
  }
  const Reader r(root);
  Scenario s;
  s.source = text;
  s.hash = fnv1a(text);

  s.n_paths = r.count("run.paths", 10000);
  if (s.n_paths < 2) throw ValidationError("run.paths", "need at least 2 paths");
  s.seed = static_cast<std::uint64_t>(r.count("run.seed", 1));
  s.horizon = positive("run.horizon", r.number("run.horizon", 1.0));
  s.steps = r.count("run.steps", 512);
  if (s.steps == 0) throw ValidationError("run.steps", "must be positive");
  s.output = r.text("run.output", "out");

  s.market.triplet.a = r.number("levy.a", 0.0);
  s.market.triplet.q = non_negative("levy.q", r.number("levy.q", 0.0));
  s.market.triplet.nu = read_measure(r);
  at_key("levy", [&] {
    s.market.triplet.validate();
    return 0;
  });
  s.market.pair = read_pair(r);

  read_market(r, s);
  s.export_paths = r.count("simulate.export_paths", 8);
  s.checkpoints = r.numbers("girsanov.checkpoints", {0.25 * s.horizon, 0.5 * s.horizon, 0.75 * s.horizon, s.horizon});
  for (std::size_t i = 0; i < s.checkpoints.size(); ++i) {
    if (s.grid()->index_of(s.checkpoints[i]) == TimeGrid::npos) {
      throw ValidationError("girsanov.checkpoints[" + std::to_string(i) + "]", "must be a grid time");
    }
  }
  read_isometry(r, s);
  for (double T : r.numbers("drift.test_maturities",
                            {0.125 * s.horizon, 0.25 * s.horizon, 0.5 * s.horizon, 0.75 * s.horizon, s.horizon})) {
    s.drift_test_maturities.push_back(s.maturities[node_of(s, "drift.test_maturities", T)]);
  }
  read_hedge(r, s);
  read_incompleteness(r, s);
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("", "cannot read scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

}  // namespace levyhjm
