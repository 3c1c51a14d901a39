#include "levyhjm/runner.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "levyhjm/errors.hpp"
#include "levyhjm/girsanov.hpp"
#include "levyhjm/parallel.hpp"

namespace levyhjm {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

const std::vector<std::string>& run_commands() {
  static const std::vector<std::string> commands{"simulate", "isometry", "girsanov", "drift",
                                                 "hedge",    "incompleteness", "all"};
  return commands;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

// A library error annotated with the scenario section being run.
class SectionError : public Error {
 public:
  SectionError(const std::string& section, const Error& e) : Error(section + ": " + e.what()), kind_(e.kind()) {}
  ErrorKind kind() const noexcept override { return kind_; }

 private:
  ErrorKind kind_;
};

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

class Output {
 public:
  Output(std::string dir, RunManifest& manifest) : dir_(std::move(dir)), manifest_(manifest) {
    fs::create_directories(dir_);
  }

  void write(const std::string& name, const std::string& bytes) {
    std::ofstream out(fs::path(dir_) / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (fs::path(dir_) / name).string());
    out << bytes;
    manifest_.files.push_back({name, fnv1a(bytes)});
  }
  void json(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }

 private:
  std::string dir_;
  RunManifest& manifest_;
};

// Rows of comma-separated cells.
class Csv {
 public:
  explicit Csv(const std::string& header) { os_ << header << '\n'; }
  template <class... T>
  void row(const T&... cells) {
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(cells), first = false), ...);
    os_ << '\n';
  }
  std::string str() const { return os_.str(); }

 private:
  static std::string cell(double x) { return format_double(x); }
  static std::string cell(std::size_t x) { return std::to_string(x); }
  static std::string cell(const std::string& x) { return x; }
  static std::string cell(const char* x) { return x; }
  std::ostringstream os_;
};

Json stats_json(std::span<const double> xs) {
  SampleStats s = sample_stats(xs);
  return Json{{"mean", s.mean}, {"variance", s.variance}, {"se", s.std_error}, {"n", s.n}};
}

McConfig mc_of(const Scenario& s, std::size_t threads) { return McConfig{s.grid(), s.n_paths, s.seed, threads}; }

CounterexampleG counterexample_of(const Scenario& s) {
  const auto& inc = s.incompleteness;
  return CounterexampleG(find_concentration_witness(s.market.triplet.nu, inc.y0, inc.K, inc.eps1));
}

std::unique_ptr<MarketModel> model_of(const Scenario& s) {
  return std::make_unique<MarketModel>(s.market, s.curve, s.maturities, s.grid(), s.drift);
}

// ------------------------------------------------------------------ commands

void run_simulate(const Scenario& s, Output& out, std::size_t threads) {
  const auto grid = s.grid();
  const auto& triplet = s.market.triplet;
  struct Summary {
    double z = 0.0;
    double count = 0.0;
  };
  const auto summaries = parallel_map<Summary>(
      s.n_paths,
      [&](std::size_t i) {
        const auto path = simulate_path(triplet, grid, {s.seed, i});
        return Summary{path.z.back(), static_cast<double>(path.jumps.size())};
      },
      threads);
  std::vector<double> z, count;
  for (const auto& x : summaries) {
    z.push_back(x.z);
    count.push_back(x.count);
  }

  Csv paths("path,t,W,Z");
  Csv jumps("path,time,size");
  for (std::size_t i = 0; i < std::min(s.export_paths, s.n_paths); ++i) {
    const auto path = simulate_path(triplet, grid, {s.seed, i});
    for (std::size_t k = 0; k < grid->size(); ++k) paths.row(i, (*grid)[k], path.brownian[k], path.z[k]);
    for (const Jump& j : path.jumps) jumps.row(i, j.time, j.size);
  }
  out.write("paths.csv", paths.str());
  out.write("jumps.csv", jumps.str());
  out.json("simulate.json", Json{{"n_paths", s.n_paths},
                                 {"seed", s.seed},
                                 {"horizon", s.horizon},
                                 {"steps", s.steps},
                                 {"measure", triplet.nu.family()},
                                 {"terminal_z", stats_json(z)},
                                 {"jump_count", stats_json(count)}});
}

void run_isometry(const Scenario& s, Output& out, std::size_t threads) {
  Json reports = Json::array();
  for (const auto& c : s.isometry) {
    GeneralIntegrand g;
    if (c.kind == "counterexample_g") {
      g = counterexample_of(s).integrand();
      g.cls = c.spec.cls;
    } else {
      g = make_integrand(c.spec);
    }
    const Compensator comp = c.under_q ? Compensator::Q(s.market.pair) : Compensator::P();
    const auto e = estimate_isometry(g, s.market.triplet, comp, mc_of(s, threads));
    reports.push_back(Json{{"name", c.name},
                           {"measure", c.under_q ? "Q" : "P"},
                           {"lhs", e.lhs},
                           {"lhs_se", e.lhs_se},
                           {"rhs", e.rhs},
                           {"rhs_se", e.rhs_se},
                           {"se", e.se},
                           {"z", e.se > 0.0 ? (e.lhs - e.rhs) / e.se : 0.0},
                           {"n_paths", e.n_paths},
                           {"seed", e.seed}});
  }
  out.json("isometry.json", reports);
}

void run_girsanov(const Scenario& s, Output& out, std::size_t threads) {
  const auto grid = s.grid();
  const DensityModel density(s.market.pair, s.market.triplet, grid);
  std::vector<std::size_t> idx;
  for (double t : s.checkpoints) idx.push_back(grid->index_of(t));
  const std::size_t n_check = std::min<std::size_t>(s.n_paths, 1000);
  struct Sample {
    std::vector<double> rho;
    double reciprocal = 0.0;
    double decomposition = 0.0;
  };
  const auto samples = parallel_map<Sample>(
      s.n_paths,
      [&](std::size_t i) {
        const auto path = simulate_path(s.market.triplet, grid, {s.seed, i});
        const auto d = density.path(path);
        Sample out;
        for (std::size_t k : idx) out.rho.push_back(d.rho[k]);
        if (i < n_check) {
          const auto inv = reciprocal_density(s.market.pair, path, s.market.triplet);
          for (std::size_t k = 0; k < grid->size(); ++k) {
            out.reciprocal = std::max(out.reciprocal, std::abs(d.rho[k] * inv.values[k] - 1.0));
          }
          out.decomposition = z_under_q_decomposition(s.market.pair, path, s.market.triplet).max_residual;
        }
        return out;
      },
      threads);
  Json checkpoints = Json::array();
  for (std::size_t c = 0; c < idx.size(); ++c) {
    std::vector<double> rho;
    for (const auto& x : samples) rho.push_back(x.rho[c]);
    const SampleStats st = sample_stats(rho);
    checkpoints.push_back(Json{{"t", s.checkpoints[c]}, {"mean_rho", st.mean}, {"se", st.std_error}});
  }
  double reciprocal = 0.0, decomposition = 0.0;
  for (const auto& x : samples) {
    reciprocal = std::max(reciprocal, x.reciprocal);
    decomposition = std::max(decomposition, x.decomposition);
  }
  out.json("girsanov.json", Json{{"pair", s.market.pair.name()},
                                 {"checkpoints", checkpoints},
                                 {"reciprocal_max_error", reciprocal},
                                 {"decomposition_max_residual", decomposition},
                                 {"identity_paths", n_check},
                                 {"n_paths", s.n_paths},
                                 {"seed", s.seed}});
}

void run_drift(const Scenario& s, Output& out, std::size_t threads) {
  const auto model = model_of(s);
  const auto cond = check_martingale_conditions(*model);
  Json cond2 = Json::array();
  for (std::size_t m = 0; m < cond.cond2.size(); ++m) {
    cond2.push_back(Json{{"T", s.maturities[m]}, {"value", cond.cond2[m]}, {"finite", static_cast<bool>(cond.cond2_finite[m])}});
  }

  std::vector<std::size_t> nodes;
  for (double T : s.drift_test_maturities) {
    nodes.push_back(static_cast<std::size_t>(std::find(s.maturities.begin(), s.maturities.end(), T) - s.maturities.begin()));
  }
  const auto test = discounted_martingale_test(*model, nodes, mc_of(s, threads));
  const auto grid = s.grid();
  Csv table("t,T,mean,se,initial,z");
  for (std::size_t k = 0; k < grid->size(); ++k) {
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const std::size_t at = k * nodes.size() + j;
      const double se = test.std_error[at];
      const double z = se > 0.0 ? (test.mean[at] - test.initial[j]) / se : 0.0;
      table.row((*grid)[k], s.maturities[nodes[j]], test.mean[at], se, test.initial[j], z);
    }
  }
  out.write("drift_martingale.csv", table.str());

  const auto surface = model->evolve(simulate_path(s.market.triplet, grid, {s.seed, 0}));
  Csv dump("t,T,f,P,P_hat");
  for (std::size_t k = 0; k < grid->size(); ++k) {
    for (std::size_t m = 0; m < s.maturities.size(); ++m) {
      const double t = (*grid)[k];
      const std::string bond = t <= s.maturities[m] ? format_double(surface.bond(k, m)) : "";
      dump.row(t, s.maturities[m], surface.forward(k, m), bond, surface.discounted(k, m));
    }
  }
  out.write("surface.csv", dump.str());

  out.json("drift.json", Json{{"conditions",
                               Json{{"cond1", cond.cond1},
                                    {"cond1_finite", cond.cond1_finite},
                                    {"cond2", cond2},
                                    {"drift_formula_residual", cond.drift_formula_residual},
                                    {"messages", cond.messages},
                                    {"ok", cond.ok()}}},
                              {"martingale_test",
                               Json{{"maturities", s.drift_test_maturities},
                                    {"max_abs_z", test.max_abs_z},
                                    {"passes", test.passes()},
                                    {"n_paths", test.n_paths},
                                    {"seed", test.seed}}}});
}

void run_hedge(const Scenario& s, Output& out, std::size_t threads) {
  const auto model = model_of(s);
  const HedgeScenario& h = s.hedge;
  std::vector<ClaimRepresentation> claims;
  for (const auto& name : h.claims) {
    if (name == "constant") claims.push_back(ClaimRepresentation::constant(h.constant_value));
    if (name == "bond_payoff") claims.push_back(ClaimRepresentation::bond_payoff(h.bond_node));
    if (name == "counterexample") {
      claims.push_back(build_counterexample_claim(counterexample_of(s), s.market, s.incompleteness.config.k0));
    }
  }
  const HedgeProblem problem = build_hedge_problem(*model, claims, HedgeBasis{h.nodes, h.buckets}, mc_of(s, threads));
  Json reports = Json::array();
  Csv samples("path,claim,X,hedge,residual");
  for (std::size_t c = 0; c < claims.size(); ++c) {
    const HedgeReport r = solve_hedge(problem, c, h.regularization);
    reports.push_back(Json{{"claim", h.claims[c]},
                           {"initial_cost", r.initial_cost},
                           {"coefficients", r.coefficients},
                           {"residual_mean", r.residual_mean},
                           {"residual_variance", r.residual_variance},
                           {"residual_l2", r.residual_l2},
                           {"claim_l2", r.claim_l2},
                           {"claim_std", r.claim_std},
                           {"regularization", r.regularization},
                           {"n_paths", r.n_paths}});
    for (std::size_t i = 0; i < std::min(h.sample_rows, problem.n_paths); ++i) {
      double value = r.initial_cost;
      for (std::size_t j = 0; j < r.coefficients.size(); ++j) value += r.coefficients[j] * problem.gain(i, j);
      samples.row(i, h.claims[c], problem.claim(i, c), value, problem.claim(i, c) - value);
    }
  }
  out.json("hedge.json", Json{{"maturities", [&] {
                                 std::vector<double> m;
                                 for (auto n : h.nodes) m.push_back(s.maturities[n]);
                                 return m;
                               }()},
                              {"buckets", h.buckets},
                              {"seed", s.seed},
                              {"reports", reports}});
  out.write("hedge_residuals.csv", samples.str());
}

void run_incompleteness(const Scenario& s, Output& out, std::size_t threads) {
  const auto model = model_of(s);
  const CounterexampleG g = counterexample_of(s);
  McConfig pilot = mc_of(s, threads);
  pilot.n_paths = std::min<std::size_t>(s.n_paths, 2000);
  const StopLevelSelection stop = select_stop_level(g, s.market, pilot);
  const IncompletenessReport r = incompleteness_experiment(g, *model, s.incompleteness.config, mc_of(s, threads));

  Json levels = Json{{"nodes", Json::array()}, {"buckets", Json::array()}, {"counterexample", Json::array()},
                     {"control", Json::array()}};
  for (const auto& l : r.levels) {
    levels["nodes"].push_back(l.nodes);
    levels["buckets"].push_back(l.buckets);
    levels["counterexample"].push_back(l.counterexample);
    levels["control"].push_back(l.control);
  }
  Json snapshots = Json::array();
  Csv table("snapshot,path,t,k,a1,a2,lhs,rhs,ratio");
  for (std::size_t j = 0; j < r.certificates.size(); ++j) {
    const auto& c = r.certificates[j];
    const auto& snap = r.snapshots[j];
    snapshots.push_back(Json{{"path", snap.path},
                             {"t", snap.t},
                             {"k_min", c.k_min},
                             {"ratio_growth", c.ratio.back() / c.ratio.front()}});
    for (std::size_t k = 0; k < c.n_pairs(); ++k) {
      table.row(j, snap.path, snap.t, k, c.probes[2 * k], c.probes[2 * k + 1], c.lhs[k], c.rhs[k], c.ratio[k]);
    }
  }
  const auto& first = r.certificates.front();
  out.json("incompleteness.json",
           Json{{"y0", r.witness.y0},
                {"epsilons", r.witness.epsilons},
                {"annulus_masses", r.witness.annulus_masses},
                {"lhs", first.lhs},
                {"rhs", first.rhs},
                {"ratio", first.ratio},
                {"k_min", first.k_min},
                {"tail_increasing", r.tail_increasing()},
                {"min_ratio_growth", r.min_ratio_growth()},
                {"residuals_by_level", levels},
                {"counterexample_l2", r.counterexample_l2},
                {"control_l2", r.control_l2},
                {"control_maturity", s.maturities[r.control_node]},
                {"separation", r.separation},
                {"k0", r.k0},
                {"compensator_rate", r.rate},
                {"stop_level", Json{{"k0", stop.k0},
                                    {"unstopped_fraction", stop.unstopped_fraction},
                                    {"n_paths", stop.n_paths},
                                    {"seed", stop.seed}}},
                {"snapshots", snapshots},
                {"n_paths", r.n_paths},
                {"seed", r.seed}});
  out.write("certificate.csv", table.str());
}

using CommandFn = void (*)(const Scenario&, Output&, std::size_t);

struct Command {
  const char* name;
  const char* section;
  CommandFn fn;
};

constexpr Command kCommands[] = {
    {"simulate", "levy", run_simulate},        {"isometry", "isometry", run_isometry},
    {"girsanov", "girsanov", run_girsanov},    {"drift", "market", run_drift},
    {"hedge", "hedge", run_hedge},             {"incompleteness", "incompleteness", run_incompleteness},
};

}  // namespace

RunManifest run_scenario(const std::string& command, const Scenario& scenario, const std::string& out_dir,
                         std::size_t threads) {
  if (std::find(run_commands().begin(), run_commands().end(), command) == run_commands().end()) {
    throw ValidationError("", "unknown command '" + command + "'");
  }
  RunManifest manifest;
  manifest.command = command;
  manifest.scenario_hash = scenario.hash;
  manifest.seed = scenario.seed;
  manifest.n_paths = scenario.n_paths;
  Output out(out_dir, manifest);
  for (const Command& c : kCommands) {
    if (command != "all" && command != c.name) continue;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.fn(scenario, out, threads);
    } catch (const ValidationError&) {
      throw;
    } catch (const Error& e) {
      throw SectionError(c.section, e);
    }
    manifest.timings.emplace_back(c.name, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }

  Json files = Json::array();
  for (const auto& f : manifest.files) files.push_back(Json{{"name", f.name}, {"fnv1a", hex(f.hash)}});
  std::ofstream(fs::path(out_dir) / "manifest.json", std::ios::binary | std::ios::trunc)
      << Json{{"version", kVersionTag},
              {"command", command},
              {"scenario_hash", hex(scenario.hash)},
              {"seed", scenario.seed},
              {"n_paths", scenario.n_paths},
              {"files", files}}
             .dump(2)
      << "\n";
  Json timings = Json::object();
  for (const auto& [name, seconds] : manifest.timings) timings[name] = seconds;
  std::ofstream(fs::path(out_dir) / "timings.json", std::ios::binary | std::ios::trunc) << timings.dump(2) << "\n";
  return manifest;
}

int exit_code(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return err->kind() == ErrorKind::Validation ? 2 : 3;
  return 1;
}

int run(const RunOptions& options, std::ostream& log) {
  try {
    Scenario s = load_scenario(options.scenario_path);
    if (options.seed) s.seed = *options.seed;
    if (options.paths) {
      if (*options.paths < 2) throw ValidationError("run.paths", "need at least 2 paths");
      s.n_paths = *options.paths;
    }
    const std::string out_dir = options.out.value_or(s.output);
    const std::size_t threads = options.threads > 0 ? options.threads : default_threads();
    const RunManifest m = run_scenario(options.command, s, out_dir, threads);
    for (const auto& [name, seconds] : m.timings) log << name << ": " << seconds << " s\n";
    log << "wrote " << m.files.size() << " files to " << out_dir << "\n";
    return 0;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return exit_code(e);
  }
}

}  // namespace levyhjm
