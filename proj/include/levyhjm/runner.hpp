#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "levyhjm/scenario.hpp"

namespace levyhjm {

inline constexpr const char* kVersionTag = "levy-hjm 1.0.0";

/// Commands accepted by `run`.
const std::vector<std::string>& run_commands();

struct RunOptions {
  std::string command;
  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<std::string> out;
  std::size_t threads = 0;  // 0: default_threads()
};

struct OutputFile {
  std::string name;
  std::uint64_t hash = 0;  // FNV-1a of the bytes written
};

/// Deterministic record of a run. Wall-clock timings go to a separate
/// timings.json so that the manifest itself is reproducible.
struct RunManifest {
  std::string command;
  std::string scenario;
  std::uint64_t scenario_hash = 0;
  std::uint64_t seed = 0;
  std::size_t n_paths = 0;
  std::vector<OutputFile> files;
  std::vector<std::pair<std::string, double>> timings;  // seconds per experiment
};

/// Runs one command (or `all`) on a validated scenario, writing its outputs
/// under `out_dir`. Throws the library's errors.
RunManifest run_scenario(const std::string& command, const Scenario& scenario, const std::string& out_dir,
                         std::size_t threads);

/// 0 on success, 2 for validation errors, 3 for numerical errors, 1 otherwise.
int exit_code(const std::exception& e);

/// Loads the scenario, applies overrides, runs and reports to `log`. Never throws.
int run(const RunOptions& options, std::ostream& log);

/// %.17g, with "inf", "-inf" and "nan" for non-finite values.
std::string format_double(double x);

}  // namespace levyhjm
