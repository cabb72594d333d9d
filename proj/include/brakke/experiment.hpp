#pragma once

// Config-driven experiment runner behind brakke_lab.

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace brakke {

inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;

extern const char* const kCodeVersion;

struct RunOptions {
  // Empty means $BRAKKE_LAB_OUT, then ./brakke_lab_out.
  std::filesystem::path out_root;
  std::optional<std::uint64_t> seed;  // overrides the config's seed
};

std::filesystem::path resolve_out_root(const RunOptions& opts);

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;  // the measured quantity
  double limit = 0.0;  // what it was compared against
  std::string detail;

  nlohmann::json to_json() const;
};

struct ExperimentResult {
  std::string name;
  std::string kind;
  std::filesystem::path config;
  std::filesystem::path out_dir;
  int exit_code = kExitPass;
  std::string error;  // config error or failure message
  std::vector<CheckResult> checks;
  double seconds = 0.0;  // wall time, reported on the console only

  nlohmann::json to_json() const;
};

// Runs one experiment and writes manifest.json, report.json and the kind's
// data files under out_root/<name>. Config problems give exit code 2; failed
// checks give 1 with the reports still written.
ExperimentResult run_experiment(const std::filesystem::path& config, const RunOptions& opts = {});

struct SuiteResult {
  std::vector<ExperimentResult> rows;
  int exit_code = kExitPass;  // worst over the rows

  nlohmann::json to_json() const;
  std::string table() const;
};

// The suite file lists configs (paths relative to it) under `configs`. Runs
// them on up to `workers` threads and writes summary.json and summary.txt
// under the output root.
SuiteResult verify_all(const std::filesystem::path& suite, const RunOptions& opts = {}, int workers = 1);

}  // namespace brakke
