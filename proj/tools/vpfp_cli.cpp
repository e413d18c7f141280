#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "vpfp/errors.hpp"
#include "vpfp/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Linearized Vlasov-Poisson-Fokker-Planck: steady states, certified rates, simulations"};
  app.require_subcommand(1, 1);

  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int workers = 1;
  bool force = false;
  app.add_option("--config", config, "experiment config file")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out, "output directory (default: run.output)");
  auto* seed_opt = app.add_option("--seed", seed, "seed for profiles and randomized estimates");
  app.add_option("--workers", workers, "worker threads for eps sweeps")->check(CLI::PositiveNumber);
  app.add_flag("--force", force, "continue past failed assumption checks");

  app.fallthrough();
  for (const char* name : {"check-assumptions", "steady-state", "certify-rate", "simulate", "eps-sweep", "full"})
    app.add_subcommand(name);

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  vpfp::HarnessOptions opts;
  if (!out.empty()) opts.out_dir = out;
  if (seed_opt->count() > 0) opts.seed = seed;
  opts.workers = workers;
  opts.force = force;

  vpfp::RunReport rep;
  try {
    rep = vpfp::run_command(command, config, opts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  for (const auto& v : rep.verdicts)
    std::printf("%-40s %s  %s\n", v.name.c_str(), v.pass ? "pass" : (v.overridden ? "FORCED" : "FAIL"),
                v.detail.c_str());
  if (rep.fit)
    std::printf("lambda_fit = %.6g +- %.2g (r^2 %.6f)\n", rep.fit->rate, rep.fit->rate_halfwidth,
                rep.fit->r_squared);
  if (!rep.failed_stage.empty())
    std::fprintf(stderr, "stage '%s' failed: %s\n", rep.failed_stage.c_str(), rep.error.c_str());
  return rep.exit_code();
}
