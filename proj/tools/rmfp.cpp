// rmfp: solve, certify and verify the one-dimensional ranking mean-field planning problem.
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rmfp/app.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Ranking mean-field planning solver"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::size_t threads = 0;
  std::uint64_t seed = 0;
  bool quiet = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "run configuration file")->required();
    sub->add_option("--out", out, "output directory (overrides run.out)");
    sub->add_option("--threads", threads,
                    "worker threads (overrides run.threads; MFP_THREADS is the fallback)");
    sub->add_option("--seed", seed, "seed for randomized checks (overrides run.seed)");
    sub->add_flag("--quiet", quiet, "suppress progress output");
  };
  auto* solve = app.add_subcommand("solve", "eps-continuation solve, reconstruction and plots");
  auto* verify = app.add_subcommand("verify", "full certificate battery");
  auto* mms = app.add_subcommand("mms", "manufactured-solution refinement study");
  auto* sweep = app.add_subcommand("sweep", "randomized property sweep driven by --seed");
  for (auto* sub : {solve, verify, mms, sweep}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : rmfp::kExitConfig;
  }

  rmfp::RunMode mode = rmfp::RunMode::Solve;
  if (*verify) mode = rmfp::RunMode::Verify;
  if (*mms) mode = rmfp::RunMode::Mms;
  if (*sweep) mode = rmfp::RunMode::Sweep;

  rmfp::RunOverrides overrides;
  overrides.quiet = quiet;
  auto* sub = app.get_subcommands().front();
  if (sub->count("--out")) overrides.out_dir = out;
  if (sub->count("--threads")) overrides.threads = threads;
  if (sub->count("--seed")) overrides.seed = seed;
  return rmfp::run(mode, config, overrides, std::cout, std::cerr);
}
