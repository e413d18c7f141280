#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vpfp/chain.hpp"
#include "vpfp/config.hpp"
#include "vpfp/fit.hpp"

namespace vpfp {

struct HarnessOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  bool force = false;
};

struct VerdictEntry {
  std::string name;
  bool pass = false;
  std::string detail;
  bool overridden = false;  // assumption failures under --force
};

struct RatesBundle {
  double lambda_M = 0.0;
  double macro_gap = 0.0;
  double symmetrization_defect = 0.0;
  CMEstimate cm_direct;
  ChainConstants chain;
  HypocoConstants constants;        // configured C_M method
  HypocoConstants chain_constants;  // C_M from the chain bound
  EpsScaling eps_scaling;           // at the configured eps
  double scan_at_lambda = 0.0;
  double scan_at_105 = 0.0;
  bool scan_nonnegative = false;
  bool scan_tight = false;
  bool cap_binds = false;
};

// Everything an experiment shares across runs: read-only after construction.
struct Pipeline {
  ExperimentConfig config;
  AssumptionReport assumptions;
  std::shared_ptr<const SteadyState> steady;
  std::unique_ptr<OperatorSet> ops;
  std::unique_ptr<MacroOperator> macro;
  std::optional<RatesBundle> rates;
};

struct SweepRow {
  double eps = 0.0;
  EpsScaling scaling;
  double delta = 0.0;
  double lambda_fit = 0.0;
  DecayFit fit;
  std::string error;
};

struct RunReport {
  std::string command;
  std::string failed_stage;  // empty when every stage ran
  std::string error;
  std::optional<AssumptionReport> assumptions;
  std::optional<RatesBundle> rates;
  std::optional<DecayFit> fit;
  std::optional<DecayFit> companion_fit;
  double delta_used = 0.0;
  std::vector<SweepRow> sweep;
  std::vector<VerdictEntry> verdicts;
  std::vector<std::string> manifest;

  bool all_pass() const;
  int exit_code() const { return all_pass() ? 0 : 1; }
};

AssumptionReport run_assumption_check(const ExperimentConfig& config);
std::shared_ptr<const SteadyState> solve_steady(const ExperimentConfig& config);
RatesBundle compute_rates(const MacroOperator& macro, const ExperimentConfig& config);

// Rate on the H_delta series after dropping values below floor * value[0].
DecayFit fit_series(const std::vector<TimeSeriesRecord>& series, double floor = 1e-13,
                    bool use_norm = false);

// command: check-assumptions, steady-state, certify-rate, simulate, eps-sweep, full.
RunReport run_command(const std::string& command, const std::filesystem::path& config_path,
                      const HarnessOptions& opts);
RunReport run_experiment(const std::filesystem::path& config_path, const HarnessOptions& opts = {});
RunReport eps_sweep(const std::filesystem::path& config_path, const HarnessOptions& opts = {});

// One parabolic simulation per eps, sharing the pipeline; rows in eps_list order.
std::vector<SweepRow> run_eps_sweep(const Pipeline& pipe, const std::vector<double>& eps_list,
                                    int workers, std::vector<SimulationResult>* results = nullptr);

}  // namespace vpfp
