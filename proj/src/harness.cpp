#include "vpfp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <thread>

#include "json.hpp"
#include "vpfp/errors.hpp"

namespace vpfp {

using nlohmann::json;
namespace fs = std::filesystem;

bool RunReport::all_pass() const {
  if (!failed_stage.empty()) return false;
  return std::all_of(verdicts.begin(), verdicts.end(),
                     [](const VerdictEntry& v) { return v.pass || v.overridden; });
}

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

json to_json(const AssumptionReport& r) {
  json j;
  j["admissible"] = r.admissible();
  j["sigma_V"] = num(r.sigma_V);
  j["theta_3b"] = num(r.theta_3b);
  j["theta_5"] = num(r.theta_5);
  j["Lambda_V"] = num(r.Lambda_V);
  j["log_gradient_bound"] = num(r.log_gradient_bound);
  j["grad_sq_weight_sup"] = num(r.grad_sq_weight_sup);
  j["dgrad_sq_weight_sup"] = num(r.dgrad_sq_weight_sup);
  json es = json::array();
  for (const auto& e : r.entries) {
    json w = json::array();
    for (double x : e.witness) w.push_back(num(x));
    es.push_back({{"name", e.name},
                  {"radii", e.radii},
                  {"witness", w},
                  {"threshold", num(e.threshold)},
                  {"verdict", to_string(e.verdict)},
                  {"note", e.note}});
  }
  j["entries"] = es;
  return j;
}

json to_json(const HypocoConstants& h) {
  return {{"lambda_m", h.lambda_m},     {"lambda_M", h.lambda_M},         {"C_M", h.C_M},
          {"method", to_string(h.method)}, {"delta_star", h.delta_star}, {"chosen_delta", h.chosen_delta},
          {"lambda", h.lambda},         {"d", h.d},                       {"c_nonlinear", h.c_nonlinear()}};
}

json to_json(const EpsScaling& e) {
  return {{"eps", e.eps},
          {"delta_eps", e.delta_eps},
          {"zeta", e.zeta},
          {"eta", e.eta},
          {"small_eps_admissible", e.small_eps_admissible}};
}

json to_json(const ChainConstants& c) {
  return {{"C_star", c.C_star},       {"C", c.C},
          {"C_circ", c.C_circ},       {"Lambda_star", c.Lambda_star},
          {"Lambda_circ", c.Lambda_circ}, {"kappa1", c.kappa1},
          {"kappa2", c.kappa2},       {"kappa3", c.kappa3},
          {"kappa4", c.kappa4},       {"K_gradient", c.K_gradient},
          {"kappa", c.kappa},         {"lambda_chain", c.lambda_chain},
          {"C_M_bound", c.C_M_bound}, {"R", c.R},
          {"G_R", c.G_R},             {"excluded_nodes", c.excluded_nodes}};
}

json to_json(const RatesBundle& r) {
  json j;
  j["constants"] = to_json(r.constants);
  j["chain_certified"] = to_json(r.chain_constants);
  j["eps_scaling"] = to_json(r.eps_scaling);
  j["chain"] = to_json(r.chain);
  j["lambda_M"] = r.lambda_M;
  j["macroscopic_gap"] = r.macro_gap;
  j["symmetrization_defect"] = r.symmetrization_defect;
  j["C_M_direct"] = {{"value", r.cm_direct.value},
                     {"flux_part", r.cm_direct.flux_part},
                     {"mode2_part", r.cm_direct.mode2_part},
                     {"iterations", r.cm_direct.iterations}};
  j["scan"] = {{"min_at_lambda", r.scan_at_lambda},
               {"min_at_1.05_lambda", r.scan_at_105},
               {"nonnegative", r.scan_nonnegative},
               {"tight", r.scan_tight},
               {"cap_binds", r.cap_binds}};
  return j;
}

json to_json(const DecayFit& f) {
  return {{"rate", f.rate},
          {"intercept", f.intercept},
          {"r_squared", num(f.r_squared)},
          {"r_squared_defined", f.r_squared_defined},
          {"rate_halfwidth", f.rate_halfwidth},
          {"points", f.points}};
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string eps_tag(double eps) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", eps);
  return buf;
}

// X_{n+1} <= X_n + tol X_0 along the series; returns the largest excess over X_0.
double worst_increase(const std::vector<TimeSeriesRecord>& s,
                      const std::function<double(const TimeSeriesRecord&)>& get) {
  double worst = -std::numeric_limits<double>::infinity();
  if (s.size() < 2) return 0.0;
  const double x0 = std::abs(get(s.front()));
  for (std::size_t i = 1; i < s.size(); ++i)
    worst = std::max(worst, (get(s[i]) - get(s[i - 1])) / std::max(x0, 1e-300));
  return worst;
}

void add(RunReport& rep, std::string name, bool pass, std::string detail, bool overridden = false) {
  rep.verdicts.push_back({std::move(name), pass, std::move(detail), overridden});
}

void linear_verdicts(RunReport& rep, const SimulationResult& res, const DecayFit& fit, double delta,
                     double lambda_cert, bool parabolic, double eta) {
  const auto& s = res.series;
  add(rep, "simulation_completed", res.error.empty(), res.error.empty() ? "ok" : res.error);
  const double inc = worst_increase(s, [](const TimeSeriesRecord& r) { return r.H_delta; });
  add(rep, "H_delta_monotone", inc <= 1e-8, fmt("largest relative increase %.3e (tolerance 1e-8)", inc));
  double mass = 0.0;
  bool band = true;
  for (const auto& r : s) {
    mass = std::max(mass, r.mass_defect);
    const double lo = (2.0 - delta) / 4.0 * r.norm_sq, hi = (2.0 + delta) / 4.0 * r.norm_sq;
    if (r.H_delta < lo * (1.0 - 1e-12) || r.H_delta > hi * (1.0 + 1e-12)) band = false;
  }
  add(rep, "mass_defect", mass <= 1e-9, fmt("max |sum c0 rho dx| %.3e", mass));
  add(rep, "H_delta_equivalence_band", band, fmt("delta = %.6g", delta));
  if (parabolic) {
    add(rep, "rate_above_0.8_eta", fit.rate >= 0.8 * eta,
        fmt("lambda_fit %.6g, eta %.6g", fit.rate, eta));
    return;
  }
  add(rep, "rate_above_0.9_certified", fit.rate >= 0.9 * lambda_cert,
      fmt("lambda_fit %.6g, certified %.6g", fit.rate, lambda_cert));
  // H(t_{n+1}) <= H(t_n) exp(-0.9 lambda (t_{n+1} - t_n)) once t >= 1
  double rate_worst = 0.0;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i - 1].t < 1.0) continue;
    const double allowed = s[i - 1].H_delta * std::exp(-0.9 * lambda_cert * (s[i].t - s[i - 1].t));
    rate_worst = std::max(rate_worst, s[i].H_delta / allowed);
  }
  add(rep, "H_delta_stepwise_rate", rate_worst <= 1.0 + 1e-8,
      fmt("max H(t+) / (H(t) exp(-0.9 lambda dt)) %.6g", rate_worst));
  bool env = !s.empty();
  double worst = 0.0;
  const double pref = (2.0 + delta) / (2.0 - delta);
  for (const auto& r : s) {
    const double bound = pref * s.front().norm_sq * std::exp(-fit.rate * r.t);
    worst = std::max(worst, r.norm_sq / bound);
    if (r.norm_sq > bound * (1.0 + 1e-12)) env = false;
  }
  add(rep, "norm_envelope", env, fmt("max |h|^2 / envelope %.6g", worst));
}

}  // namespace

AssumptionReport run_assumption_check(const ExperimentConfig& config) {
  return check_confinement_assumptions(config.potential(), config.mass,
                                       ProbeGrid::for_radius(config.domain_radius));
}

std::shared_ptr<const SteadyState> solve_steady(const ExperimentConfig& config) {
  return std::make_shared<const SteadyState>(
      solve_poisson_boltzmann(config.potential(), config.mass, Grid1D(config.N, config.X_max)));
}

RatesBundle compute_rates(const MacroOperator& macro, const ExperimentConfig& config) {
  const auto& s = macro.steady();
  RatesBundle r;
  r.symmetrization_defect = macro.ops().symmetrization_defect();
  r.lambda_M = estimate_lambda_M(s, s.grid);
  r.macro_gap = macroscopic_gap(macro);
  r.cm_direct = estimate_C_M_direct(macro, config.seed);
  r.chain = estimate_chain_constants(s, s.grid);
  const double C_M = config.cm_method == CMMethod::direct_operator_norm ? r.cm_direct.value : r.chain.C_M_bound;
  r.constants = certify_rate(r.lambda_M, C_M, config.cm_method, config.delta_policy, config.delta);
  r.chain_constants = certify_rate(r.lambda_M, r.chain.C_M_bound, CMMethod::chain_bound,
                                   config.delta_policy == DeltaPolicy::explicit_value
                                       ? DeltaPolicy::half_delta_star
                                       : config.delta_policy);
  r.eps_scaling = compute_eps_scaled(1.0, r.lambda_M, C_M, config.eps);
  const auto& h = r.constants;
  r.scan_at_lambda = quadratic_form_scan(h.lambda_m, h.lambda_M, h.C_M, h.chosen_delta, h.lambda);
  r.scan_at_105 = quadratic_form_scan(h.lambda_m, h.lambda_M, h.C_M, h.chosen_delta, 1.05 * h.lambda);
  r.scan_nonnegative = r.scan_at_lambda >= -1e-12;
  r.cap_binds = h.lambda >= 2.0 * (h.lambda_m - h.chosen_delta) * (1.0 - 1e-12);
  r.scan_tight = r.cap_binds || r.scan_at_105 < 0.0;
  return r;
}

DecayFit fit_series(const std::vector<TimeSeriesRecord>& series, double floor, bool use_norm) {
  std::vector<double> t, v;
  if (series.empty()) throw InsufficientDataError("empty series");
  const double v0 = use_norm ? series.front().norm_sq : series.front().H_delta;
  for (const auto& r : series) {
    const double x = use_norm ? r.norm_sq : r.H_delta;
    if (x < floor * v0) break;
    t.push_back(r.t);
    v.push_back(x);
  }
  return fit_decay_rate(t, v);
}

std::vector<SweepRow> run_eps_sweep(const Pipeline& pipe, const std::vector<double>& eps_list,
                                    int workers, std::vector<SimulationResult>* results) {
  if (!pipe.rates) throw DomainError("eps sweep needs certified constants");
  const auto& rc = pipe.rates->constants;
  const int n = static_cast<int>(eps_list.size());
  std::vector<SweepRow> rows(n);
  std::vector<SimulationResult> res(n);
  std::atomic<int> next{0};
  auto work = [&]() {
    for (int i = next++; i < n; i = next++) {
      SweepRow& row = rows[i];
      row.eps = eps_list[i];
      row.scaling = compute_eps_scaled(rc.lambda_m, rc.lambda_M, rc.C_M, row.eps);
      row.delta = row.scaling.zeta * row.eps;
      try {
        SimulationParams p;
        p.mode = RunMode::parabolic;
        p.eps = row.eps;
        p.delta = row.delta;
        p.dt = pipe.config.dt;
        p.t_end = pipe.config.t_end;
        p.record_every = pipe.config.record_every;
        p.profile = pipe.config.profile;
        res[i] = simulate(*pipe.macro, p);
        row.error = res[i].error;
        row.fit = fit_series(res[i].series);
        row.lambda_fit = row.fit.rate;
      } catch (const std::exception& e) {
        row.error = e.what();
        row.lambda_fit = std::numeric_limits<double>::quiet_NaN();
      }
    }
  };
  const int w = std::clamp(workers, 1, std::max(1, n));
  std::vector<std::thread> pool;
  for (int k = 1; k < w; ++k) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (results) *results = std::move(res);
  return rows;
}

RunReport run_command(const std::string& command, const fs::path& config_path, const HarnessOptions& opts) {
  static const std::vector<std::string> known = {"check-assumptions", "steady-state", "certify-rate",
                                                 "simulate",          "eps-sweep",    "full"};
  if (std::find(known.begin(), known.end(), command) == known.end())
    throw DomainError("unknown command '" + command + "'");
  RunReport rep;
  rep.command = command;
  Pipeline pipe;
  fs::path out = opts.out_dir.value_or("out");

  auto stage = [&](const char* name, auto&& fn) {
    if (!rep.failed_stage.empty()) return false;
    try {
      fn();
      return true;
    } catch (const std::exception& e) {
      rep.failed_stage = name;
      rep.error = e.what();
      return false;
    }
  };
  auto file = [&](const std::string& name) {
    rep.manifest.push_back(name);
    return out / name;
  };

  stage("config", [&] {
    pipe.config = load_config(config_path);
    if (opts.seed) {
      pipe.config.seed = *opts.seed;
      pipe.config.profile.seed = *opts.seed;
    }
    if (!opts.out_dir) out = pipe.config.output;
    fs::create_directories(out);
  });
  const auto& cfg = pipe.config;
  const bool want_sim = command == "simulate" || command == "full";
  const bool want_sweep = command == "eps-sweep";

  stage("assumptions", [&] {
    pipe.assumptions = run_assumption_check(cfg);
    rep.assumptions = pipe.assumptions;
    const bool ok = pipe.assumptions.admissible();
    std::string detail = ok ? "all pass" : "";
    for (const auto& e : pipe.assumptions.entries)
      if (e.verdict != Verdict::pass) detail += e.name + "=" + to_string(e.verdict) + " ";
    add(rep, "assumptions_admissible", ok, detail, !ok && opts.force);
    if (command == "check-assumptions") write_json(to_json(pipe.assumptions), file("assumptions.json"));
    if (!ok && !opts.force) throw DomainError("potential fails the admissibility checks (use --force)");
  });

  if (command != "check-assumptions") {
    stage("steady_state", [&] {
      pipe.steady = solve_steady(cfg);
      write_steady_state(*pipe.steady, out);
      rep.manifest.push_back("steady_state.csv");
      rep.manifest.push_back("steady_state.json");
      const double res = steady_residual(*pipe.steady);
      add(rep, "steady_residual", res <= 1e-6, fmt("sup |-phi'' - rho| = %.3e", res));
    });
  }

  if (command != "check-assumptions" && command != "steady-state") {
    stage("operators", [&] {
      pipe.ops = std::make_unique<OperatorSet>(build_operators(pipe.steady, HermiteBasis(cfg.K)));
      pipe.macro = std::make_unique<MacroOperator>(*pipe.ops);
    });
    stage("rates", [&] {
      pipe.rates = compute_rates(*pipe.macro, cfg);
      rep.rates = pipe.rates;
      write_json(to_json(*pipe.rates), file("rates.json"));
      const auto& r = *pipe.rates;
      add(rep, "form_nonnegative_at_lambda", r.scan_nonnegative, fmt("min %.3e", r.scan_at_lambda));
      add(rep, "form_tight_at_1.05_lambda", r.scan_tight,
          r.cap_binds ? "sign cap binds" : fmt("min %.3e", r.scan_at_105));
      add(rep, "C_M_at_least_half", r.cm_direct.value >= 0.5, fmt("C_M %.6g", r.cm_direct.value));
      add(rep, "chain_bound_above_direct", r.chain.C_M_bound >= r.cm_direct.value,
          fmt("chain %.6g, direct %.6g", r.chain.C_M_bound, r.cm_direct.value));
    });
  }

  if (want_sim) {
    SimulationResult res;
    stage("simulate", [&] {
      const auto& rc = pipe.rates->constants;
      SimulationParams p;
      p.mode = cfg.mode;
      p.eps = cfg.mode == RunMode::nonlinear ? 1.0 : cfg.eps;
      p.delta = cfg.mode == RunMode::parabolic ? pipe.rates->eps_scaling.zeta * cfg.eps : rc.chosen_delta;
      p.dt = cfg.dt;
      p.t_end = cfg.t_end;
      p.record_every = cfg.record_every;
      p.profile = cfg.profile;
      p.verbose_dissipation = cfg.verbose_dissipation;
      p.c_nonlinear = rc.c_nonlinear();
      rep.delta_used = p.delta;
      res = simulate(*pipe.macro, p);
      const std::string tag = to_string(cfg.mode);
      write_series_csv(res.series, file("series_" + tag + ".csv").string());
      if (cfg.mode == RunMode::nonlinear)
        write_nonlinear_csv(res.series, file("nonlinear_diagnostics.csv").string());
      if (cfg.verbose_dissipation) write_dissipation_csv(res.series, file("dissipation_terms.csv").string());
      add(rep, "boundary_leakage", !res.boundary_flag,
          fmt("rho_star mass beyond 0.9 X_max %.3e", res.steady_tail_mass));
    });
    stage("fit", [&] {
      rep.fit = fit_series(res.series);
      const auto& rc = pipe.rates->constants;
      if (cfg.mode != RunMode::nonlinear) {
        linear_verdicts(rep, res, *rep.fit, rep.delta_used, rc.lambda, cfg.mode == RunMode::parabolic,
                        pipe.rates->eps_scaling.eta);
        return;
      }
      const auto& s = res.series;
      add(rep, "simulation_completed", res.error.empty(), res.error.empty() ? "ok" : res.error);
      const double inc = worst_increase(s, [](const TimeSeriesRecord& r) { return r.free_energy; });
      add(rep, "free_energy_monotone", inc <= 1e-8, fmt("largest relative increase %.3e", inc));
      bool psi_ok = true, qb = true;
      double qworst = 0.0;
      for (const auto& r : s) {
        if (r.psi_prime_sup * r.psi_prime_sup > 4.0 * cfg.mass * r.free_energy * (1.0 + 1e-12)) psi_ok = false;
        if (std::abs(r.q_pairing) > r.q_bound * (1.0 + 1e-9) + 1e-300) qb = false;
        if (r.q_bound > 0.0) qworst = std::max(qworst, std::abs(r.q_pairing) / r.q_bound);
      }
      add(rep, "psi_prime_controlled_by_free_energy", psi_ok, "psi'^2 <= 4 M F at every record");
      add(rep, "Q_pairing_bound", qb, fmt("max |<Q h, h>| / bound %.4g", qworst));
      if (cfg.profile.amplitude <= 0.01) {
        SimulationParams p;
        p.mode = RunMode::linear;
        p.delta = rep.delta_used;
        p.dt = cfg.dt;
        p.t_end = cfg.t_end;
        p.record_every = cfg.record_every;
        p.profile = cfg.profile;
        const auto lin = simulate(*pipe.macro, p);
        write_series_csv(lin.series, file("series_linear_companion.csv").string());
        rep.companion_fit = fit_series(lin.series);
        const double rel = std::abs(rep.fit->rate - rep.companion_fit->rate) / rep.companion_fit->rate;
        add(rep, "nonlinear_rate_matches_linear", rel <= 0.05,
            fmt("nonlinear %.6g, linear %.6g, relative gap %.3e", rep.fit->rate, rep.companion_fit->rate, rel));
      }
    });
  }

  if (want_sweep) {
    stage("eps_sweep", [&] {
      if (cfg.eps_list.empty()) throw DomainError("eps-sweep needs run.eps_list");
      std::vector<SimulationResult> results;
      rep.sweep = run_eps_sweep(pipe, cfg.eps_list, opts.workers, &results);
      std::ofstream csv(file("eps_sweep.csv"));
      csv << "eps,delta_eps,zeta,eta,lambda_fit\n";
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0, worst = std::numeric_limits<double>::infinity();
      bool all_ok = true;
      for (std::size_t i = 0; i < rep.sweep.size(); ++i) {
        const auto& row = rep.sweep[i];
        char line[256];
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g\n", row.eps, row.scaling.delta_eps,
                      row.scaling.zeta, row.scaling.eta, row.lambda_fit);
        csv << line;
        write_series_csv(results[i].series, file("series_eps_" + eps_tag(row.eps) + ".csv").string());
        if (!row.error.empty() || !std::isfinite(row.lambda_fit)) {
          all_ok = false;
          add(rep, "sweep_eps_" + eps_tag(row.eps) + "_completed", false, row.error);
          continue;
        }
        lo = std::min(lo, row.lambda_fit);
        hi = std::max(hi, row.lambda_fit);
        worst = std::min(worst, row.lambda_fit / row.scaling.eta);
      }
      add(rep, "sweep_rates_above_0.8_eta", all_ok && worst >= 0.8,
          fmt("min lambda_fit / eta %.6g", worst));
      if (rep.sweep.size() > 1)
        add(rep, "sweep_spread_within_3", all_ok && hi <= 3.0 * lo,
            fmt("lambda_fit range [%.6g, %.6g], ratio %.4g", lo, hi, hi / lo));
    });
  }

  // Report and plot template are written whenever the output directory exists.
  if (fs::exists(out)) {
    try {
      json j;
      j["command"] = rep.command;
      j["config"] = config_path.string();
      j["failed_stage"] = rep.failed_stage.empty() ? json(nullptr) : json(rep.failed_stage);
      j["error"] = rep.error;
      if (rep.assumptions) j["assumptions"] = to_json(*rep.assumptions);
      if (pipe.steady)
        j["steady_state"] = {{"mass", pipe.steady->mass},
                             {"residual", pipe.steady->residual},
                             {"iterations", pipe.steady->iterations},
                             {"N", pipe.steady->grid.size()},
                             {"X_max", pipe.steady->grid.radius()}};
      if (rep.rates) j["rates"] = to_json(*rep.rates);
      if (rep.fit) j["fit"] = to_json(*rep.fit);
      if (rep.companion_fit) j["companion_fit"] = to_json(*rep.companion_fit);
      j["delta_used"] = rep.delta_used;
      if (!rep.sweep.empty()) {
        json rows = json::array();
        for (const auto& r : rep.sweep)
          rows.push_back({{"eps", r.eps},
                          {"scaling", to_json(r.scaling)},
                          {"delta", r.delta},
                          {"lambda_fit", num(r.lambda_fit)},
                          {"fit", to_json(r.fit)},
                          {"error", r.error}});
        j["eps_sweep"] = rows;
      }
      json vs = json::array();
      for (const auto& v : rep.verdicts)
        vs.push_back({{"name", v.name}, {"pass", v.pass}, {"overridden", v.overridden}, {"detail", v.detail}});
      j["verdicts"] = vs;
      j["all_pass"] = rep.all_pass();
      if (want_sim && !cfg.output.empty()) {
        std::ofstream gp(file("plot.gp"));
        const std::string series = "series_" + std::string(to_string(cfg.mode)) + ".csv";
        gp << "set datafile separator ','\nset logscale y\nset key autotitle columnhead\n"
           << "set xlabel 't'\nplot '" << series << "' using 1:2 with lines, '' using 1:3 with lines\n";
      }
      rep.manifest.push_back("report.json");
      j["manifest"] = rep.manifest;
      write_json(j, out / "report.json");
    } catch (const std::exception& e) {
      if (rep.failed_stage.empty()) {
        rep.failed_stage = "report";
        rep.error = e.what();
      }
    }
  }
  return rep;
}

RunReport run_experiment(const fs::path& config_path, const HarnessOptions& opts) {
  return run_command("full", config_path, opts);
}

RunReport eps_sweep(const fs::path& config_path, const HarnessOptions& opts) {
  return run_command("eps-sweep", config_path, opts);
}

}  // namespace vpfp
