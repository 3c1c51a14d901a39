#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "levyhjm/errors.hpp"
#include "levyhjm/runner.hpp"
#include "levyhjm/scenario.hpp"

using namespace levyhjm;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"(
[run]
paths = 300
seed = 7
horizon = 1.0
steps = 64

[levy]
q = 1.0
[levy.measure]
kind = "double_exponential"
lambda = 1.5
p = 0.6
eta_plus = 1.5
eta_minus = 2.0

[girsanov]
phi = 0.1
[girsanov.psi]
kind = "linear"
theta0 = 0.05
theta1 = 0.1

[market]
maturities = 8
[market.vol]
kind = "constant"
sigma = 0.1

[hedge]
maturities = [0.5, 1.0]
buckets = 2

[incompleteness]
K = 6
levels = 3
snapshots = 3
)";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("levyhjm_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string validation_path(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ValidationError& e) {
    return e.path();
  }
  return "<none>";
}

}  // namespace

TEST_CASE("formatting and hashing primitives") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(1.0 / 3.0) == "0.33333333333333331");
  for (double x : {-2.5e-300, 1.0 / 3.0, 6.02214076e23, 0.020000000000000004}) CHECK(std::stod(format_double(x)) == x);
  CHECK(format_double(1.0 / 0.0) == "inf");
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("scenario defaults and cross-references") {
  auto s = parse_scenario(kSmall);
  CHECK(s.n_paths == 300);
  CHECK(s.maturities.size() == 9);
  CHECK(s.maturities.back() == 1.0);
  CHECK(s.hedge.nodes == std::vector<std::size_t>{4, 8});
  CHECK(s.hedge.bond_node == 8);
  CHECK(s.incompleteness.config.control_node == 8);
  CHECK(s.drift_test_maturities.size() == 5);
  CHECK(s.isometry.size() == 3);
  CHECK(s.hash == fnv1a(kSmall));
}

TEST_CASE("validation errors name the offending key") {
  const std::string base = kSmall;
  CHECK(validation_path(base + "\n[simulate]\nexport_paths = -1\n") == "simulate.export_paths");
  CHECK(validation_path("[levy]\nq = -1.0\n") == "levy.q");
  CHECK(validation_path("[levy.measure]\nkind = \"stable\"\n") == "levy.measure.kind");
  CHECK(validation_path("[levy.measure]\nkind = \"double_exponential\"\np = 1.5\n") == "levy.measure.p");
  CHECK(validation_path("[levy.measure]\nkind = \"atomic\"\nlocations = [0.0]\nrates = [1.0]\n") == "levy.measure");
  CHECK(validation_path("[run]\nsteps = 64\n[market]\nmaturities = [0.25, 0.3]\n") == "market.maturities[2]");
  CHECK(validation_path("[market]\nmaturities = 8\n[hedge]\nmaturities = [0.3]\n") == "hedge.maturities[0]");
  CHECK(validation_path("[hedge]\nbuckets = 3\n") == "hedge.buckets");
  CHECK(validation_path("[hedge]\nclaims = [\"swaption\"]\n") == "hedge.claims[0]");
  CHECK(validation_path("[market]\nmaturities = 8\n[incompleteness]\nlevels = 5\n") == "incompleteness.levels");
  CHECK(validation_path("[incompleteness]\neps1 = 2.0\n") == "incompleteness.eps1");
  CHECK(validation_path("[run]\npaths = \"many\"\n") == "run.paths");
  CHECK(validation_path("[run\npaths = 3\n") == "");
}

TEST_CASE("run exit codes") {
  const auto dir = scratch("exit");
  std::ostringstream log;
  RunOptions opt;
  opt.command = "simulate";
  opt.out = (dir / "out").string();

  opt.scenario_path = write_file(dir, "negative_q.toml", "[levy]\nq = -1.0\n").string();
  CHECK(run(opt, log) == 2);
  CHECK(log.str().find("levy.q") != std::string::npos);

  opt.scenario_path = (dir / "missing.toml").string();
  CHECK(run(opt, log) == 2);

  // exponential moment of the jump term diverges once 3 T exceeds eta_plus = 2
  opt.command = "drift";
  opt.scenario_path = write_file(dir, "divergent.toml",
                                 "[run]\npaths = 10\nsteps = 16\n[levy.measure]\nkind = \"double_exponential\"\n"
                                 "eta_plus = 2.0\n[market]\nmaturities = 4\n[market.vol]\nsigma = -3.0\n"
                                 "[drift]\ntest_maturities = [1.0]\n[incompleteness]\nlevels = 1\n")
                          .string();
  log.str("");
  CHECK(run(opt, log) == 3);
  CHECK(log.str().find("market") != std::string::npos);

  opt.command = "bogus";
  opt.scenario_path = write_file(dir, "small.toml", kSmall).string();
  CHECK(run(opt, log) == 2);
}

TEST_CASE("simulate with a pure Brownian triplet") {
  const auto dir = scratch("brownian");
  RunOptions opt;
  opt.command = "simulate";
  opt.scenario_path =
      write_file(dir, "bm.toml", "[run]\npaths = 50\nsteps = 32\n[levy]\nq = 1.0\n[incompleteness]\nlevels = 1\n").string();
  opt.out = (dir / "out").string();
  std::ostringstream log;
  REQUIRE(run(opt, log) == 0);
  CHECK(read_file(dir / "out" / "jumps.csv") == "path,time,size\n");
  std::istringstream rows(read_file(dir / "out" / "paths.csv"));
  std::string line;
  std::getline(rows, line);
  CHECK(line == "path,t,W,Z");
  std::size_t n = 0;
  while (std::getline(rows, line)) {
    std::istringstream cells(line);
    std::string path, t, w, z;
    std::getline(cells, path, ',');
    std::getline(cells, t, ',');
    std::getline(cells, w, ',');
    std::getline(cells, z, ',');
    CHECK(w == z);
    ++n;
  }
  CHECK(n == 8 * 33);
}

TEST_CASE("outputs are byte-identical across thread counts and match the manifest") {
  const auto dir = scratch("determinism");
  const auto scenario = write_file(dir, "small.toml", kSmall);
  std::ostringstream log;
  RunOptions opt;
  opt.command = "all";
  opt.scenario_path = scenario.string();
  opt.threads = 1;
  opt.out = (dir / "one").string();
  REQUIRE(run(opt, log) == 0);
  opt.threads = 3;
  opt.out = (dir / "three").string();
  REQUIRE(run(opt, log) == 0);

  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(dir / "one")) {
    const auto name = entry.path().filename().string();
    if (name == "timings.json") continue;
    CHECK_MESSAGE(read_file(entry.path()) == read_file(dir / "three" / name), name);
    ++compared;
  }
  CHECK(compared == 13);

  const std::string manifest = read_file(dir / "one" / "manifest.json");
  for (const char* name : {"paths.csv", "isometry.json", "girsanov.json", "drift.json", "surface.csv", "hedge.json",
                           "incompleteness.json", "certificate.csv"}) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(read_file(dir / "one" / name))));
    CHECK_MESSAGE(manifest.find(hex) != std::string::npos, name);
  }

  opt.seed = 8;
  opt.command = "simulate";
  opt.out = (dir / "reseeded").string();
  REQUIRE(run(opt, log) == 0);
  CHECK(read_file(dir / "reseeded" / "paths.csv") != read_file(dir / "one" / "paths.csv"));
}

TEST_CASE("incompleteness command reports a strictly increasing ratio tail") {
  const auto dir = scratch("incompleteness");
  RunOptions opt;
  opt.command = "incompleteness";
  opt.scenario_path = write_file(dir, "small.toml", kSmall).string();
  opt.out = (dir / "out").string();
  std::ostringstream log;
  REQUIRE(run(opt, log) == 0);
  const std::string report = read_file(dir / "out" / "incompleteness.json");
  CHECK(report.find("\"tail_increasing\": true") != std::string::npos);
  CHECK(report.find("\"residuals_by_level\"") != std::string::npos);
  CHECK(report.find("\"annulus_masses\"") != std::string::npos);
}
