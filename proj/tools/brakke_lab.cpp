// brakke_lab: run one experiment config or a suite of them.

#include "brakke/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments for mean curvature flow with boundary"};
  app.require_subcommand(1);
  app.fallthrough();

  brakke::RunOptions opts;
  std::string out;
  std::int64_t seed = 0;
  int workers = 1;
  app.add_option("--out", out, "Output root (default $BRAKKE_LAB_OUT or ./brakke_lab_out)");
  auto* seed_opt = app.add_option("--seed", seed, "Override the seed in every config");
  app.add_option("--workers", workers, "Experiments run in parallel by verify")->check(CLI::PositiveNumber);

  std::string config;
  auto* run = app.add_subcommand("run", "Run one experiment config");
  run->add_option("config", config, "Experiment TOML file")->required();

  std::string suite;
  auto* verify = app.add_subcommand("verify", "Run every config listed in a suite file");
  verify->add_option("suite", suite, "Suite TOML file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : brakke::kExitConfigError;
  }
  opts.out_root = out;
  if (*seed_opt) opts.seed = static_cast<std::uint64_t>(seed);

  if (*run) {
    const auto r = brakke::run_experiment(config, opts);
    for (const auto& c : r.checks)
      std::printf("%-4s %s: %.6g (limit %.6g) %s\n", c.pass ? "ok" : "FAIL", c.name.c_str(), c.value, c.limit,
                  c.detail.c_str());
    if (!r.error.empty()) std::fprintf(stderr, "error: %s\n", r.error.c_str());
    std::printf("%s: exit %d (%.1f s) -> %s\n", r.name.c_str(), r.exit_code, r.seconds, r.out_dir.string().c_str());
    return r.exit_code;
  }
  const auto s = brakke::verify_all(suite, opts, workers);
  std::cout << s.table();
  for (const auto& r : s.rows)
    if (!r.error.empty()) std::fprintf(stderr, "%s: %s\n", r.name.c_str(), r.error.c_str());
  return s.exit_code;
}
