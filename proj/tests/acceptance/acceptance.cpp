// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "support.hpp"
#include "vpfp/errors.hpp"
#include "vpfp/harness.hpp"

using namespace vpfp;
namespace fs = std::filesystem;
namespace oracle = testing::oracle;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

int failures = 0;

void criterion(int id, const char* title, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.require(secs <= budget_s, fmt("runtime %.1f s (budget %.0f s)", secs, budget_s));
  if (!o.pass) ++failures;
  std::printf("%s criterion %d: %s | %s\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str());
  std::fflush(stdout);
}

const VerdictEntry* find(const RunReport& r, const std::string& name) {
  for (const auto& v : r.verdicts)
    if (v.name == name) return &v;
  return nullptr;
}

void require_verdict(Outcome& o, const RunReport& r, const std::string& name) {
  const auto* v = find(r, name);
  o.require(v && v->pass, name + (v ? " (" + v->detail + ")" : " missing"));
}

fs::path out_root() { return fs::current_path() / "acceptance_out"; }

fs::path config(const char* name) { return fs::path(VPFP_SOURCE_DIR) / "configs" / name; }

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  fs::create_directories(out_root());

  criterion(1, "steady state", 5.0, [] {
    Outcome o;
    const auto tiny = testing::steady(2.0, 1e-6, 128, 8.0);
    double worst = 0.0;
    for (int i = 0; i < 128; ++i) {
      const double x = tiny->grid.node(i);
      worst = std::max(worst, std::abs(tiny->rho[i] / (1e-6 * std::exp(-x * x) / std::sqrt(M_PI)) - 1.0));
    }
    o.require(worst <= 1e-4, fmt("zero-coupling max relative deviation %.2e", worst));
    for (double alpha : {2.0, 3.0}) {
      const auto spec = PotentialSpec::power_law(alpha, 8.0);
      const Grid1D g(128, 8.0);
      PoissonBoltzmannOptions opts;
      const auto a = solve_poisson_boltzmann(spec, 1.0, g, opts);
      Vec half(128);
      for (int i = 0; i < 128; ++i) half[i] = 0.5 * spec.eval(g.node(i)).V;
      opts.initial_phi = half;
      const auto b = solve_poisson_boltzmann(spec, 1.0, g, opts);
      const double res = steady_residual(a);
      const double gap = (a.rho - b.rho).cwiseAbs().maxCoeff();
      o.require(res <= 1e-6, fmt("alpha %g residual %.2e", alpha, res));
      o.require(gap <= 10 * opts.tol, fmt("alpha %g initialisations differ by %.2e", alpha, gap));
    }
    return o;
  });

  criterion(2, "structural operator identities", 10.0, [] {
    Outcome o;
    const auto& r = testing::reference();
    std::mt19937_64 gen(101);
    double skew = 0.0, diss = -1e300, idem = 0.0, selfadj = 0.0, lam_m = 0.0, fourth = 0.0;
    std::uniform_real_distribution<double> U(-5.0, 5.0);
    for (int t = 0; t < 100; ++t) {
      const PhaseState h = testing::random_state(r.ops, gen), g = testing::random_state(r.ops, gen);
      const double n = norm_sq(h);
      skew = std::max(skew, std::abs(scalar_product(r.ops.apply_T(h), h)) / n);
      diss = std::max(diss, scalar_product(r.ops.apply_L(h), h) / n);
      const PhaseState p = r.ops.apply_Pi(h);
      idem = std::max(idem, (r.ops.apply_Pi(p).coeffs() - p.coeffs()).cwiseAbs().maxCoeff());
      selfadj = std::max(selfadj, std::abs(scalar_product(p, g) - scalar_product(h, r.ops.apply_Pi(g))) /
                                      std::sqrt(n * norm_sq(g)));
      // microscopic coercivity with constant exactly 1, attained on mode 1
      PhaseState m1 = r.ops.zero_state();
      m1.coeffs().row(1) = h.coeffs().row(1);
      lam_m = std::max(lam_m, std::abs(-scalar_product(r.ops.apply_L(m1), m1) / norm_sq(m1) - 1.0));
      const PhaseState perp = h - p;
      if (-scalar_product(r.ops.apply_L(h), h) < l2_product(perp, perp) * (1 - 1e-12)) lam_m = 1.0;
      const double a = U(gen);
      fourth = std::max(fourth, std::abs(fourth_moment_form(a) - 2 * a * a) / std::max(1.0, 2 * a * a));
    }
    o.require(skew <= 1e-10, fmt("max |<Th,h>|/|h|^2 %.2e", skew));
    o.require(diss <= 0.0, fmt("max <Lh,h>/|h|^2 %.2e", diss));
    o.require(idem <= 1e-12 && selfadj <= 1e-12, fmt("Pi idempotence %.1e, self-adjointness %.1e", idem, selfadj));
    o.require(lam_m <= 1e-12, fmt("lambda_m deviation %.1e", lam_m));
    o.require(fourth <= 1e-12, fmt("fourth moment form deviation %.1e", fourth));
    return o;
  });

  criterion(3, "A-operator bounds", 30.0, [] {
    Outcome o;
    const auto& r = testing::reference();
    std::mt19937_64 gen(103);
    double worstA = -1e300, worstTA = -1e300;
    for (int t = 0; t < 100; ++t) {
      const PhaseState h = t % 2 ? testing::random_state(r.ops, gen) : testing::smooth_state(r.ops, gen);
      const double p = std::sqrt(norm_sq(h - r.ops.apply_Pi(h)));
      const PhaseState Ah = r.macro.apply_A_state(h);
      worstA = std::max(worstA, std::sqrt(norm_sq(Ah)) - 0.5 * p);
      worstTA = std::max(worstTA, std::sqrt(norm_sq(r.ops.apply_T(Ah))) - p);
    }
    o.require(worstA <= 1e-8, fmt("max |Ah| - |(Id-Pi)h|/2 = %.2e", worstA));
    o.require(worstTA <= 1e-8, fmt("max |TAh| - |(Id-Pi)h| = %.2e", worstTA));
    return o;
  });

  criterion(4, "Poincare constant", 20.0, [] {
    Outcome o;
    const double a = estimate_lambda_M(*testing::steady(2.0, 1e-6, 64, 8.0));
    const double b = estimate_lambda_M(*testing::steady(2.0, 1e-6, 128, 8.0));
    const double c = estimate_lambda_M(*testing::steady(2.0, 1e-6, 256, 8.0));
    const double ref = oracle::sturm_liouville_gap([](double x) { return x * x; }, 256, 8.0);
    o.require(std::abs(c / 2.0 - 1.0) <= 0.02, fmt("C_star %.6f (independent eigensolve %.6f)", c, ref));
    const double order = std::log2(std::abs(a - b) / std::abs(b - c));
    o.require(order >= 1.8, fmt("three-grid order %.3f", order));
    return o;
  });

  criterion(5, "rate formulas", 1.0, [] {
    Outcome o;
    const double ds = compute_delta_star(1, 1, 1);
    o.require(ds == 2.0 / 3.0, fmt("delta_star(1,1,1) = %.17g", ds));
    const double l = compute_decay_rate(1, 1, 1, 0.5);
    const double ref = 2.0 / 15.0 * (7 - std::sqrt(34.0));
    o.require(std::abs(l - ref) <= 1e-10, fmt("lambda(1,1,1,0.5) = %.12f vs %.12f", l, ref));
    const double at = quadratic_form_scan(1, 1, 1, 0.5, l), above = quadratic_form_scan(1, 1, 1, 0.5, 1.05 * l);
    o.require(at >= -1e-12 && above < 0.0, fmt("form scan min %.2e at lambda, %.2e at 1.05 lambda", at, above));
    return o;
  });

  criterion(6, "linear decay, bundled alpha = 2 config", 180.0, [] {
    Outcome o;
    HarnessOptions opts;
    opts.out_dir = out_root() / "linear";
    const auto rep = run_command("full", config("alpha2_linear.toml"), opts);
    o.require(rep.failed_stage.empty(), "pipeline " + (rep.failed_stage.empty() ? "complete" : rep.failed_stage + ": " + rep.error));
    require_verdict(o, rep, "H_delta_monotone");
    require_verdict(o, rep, "rate_above_0.9_certified");
    require_verdict(o, rep, "norm_envelope");
    return o;
  });

  criterion(7, "diffusion-limit uniformity", 600.0, [] {
    Outcome o;
    HarnessOptions opts;
    opts.out_dir = out_root() / "eps_sweep";
    opts.workers = 4;
    const auto rep = run_command("eps-sweep", config("alpha2_linear.toml"), opts);
    o.require(rep.failed_stage.empty(), "sweep " + (rep.failed_stage.empty() ? "complete" : rep.failed_stage + ": " + rep.error));
    std::string rows;
    for (const auto& s : rep.sweep) rows += fmt(" eps %g: %.4g", s.eps, s.lambda_fit);
    o.require(true, "lambda_fit" + rows);
    require_verdict(o, rep, "sweep_rates_above_0.8_eta");
    require_verdict(o, rep, "sweep_spread_within_3");
    return o;
  });

  criterion(8, "diffusion-limit trajectory", 300.0, [] {
    Outcome o;
    const auto& r = testing::reference();
    const auto& s = *r.s;
    // mode-0 bump plus mode-1 flux: the initial layer leaves an O(eps) density shift
    PhaseState h0 = r.ops.zero_state();
    for (int i = 0; i < 128; ++i) h0(0, i) = std::exp(-2.0 * std::pow(s.grid.node(i) - 0.5, 2));
    for (int f = 0; f < 127; ++f) h0(1, f) = std::exp(-2.0 * std::pow(s.grid.face(f) + 0.5, 2));
    project_zero_average(h0);
    const Vec u0 = h0.coeffs().row(0).transpose();
    const auto macro = r.macro.solve_drift_diffusion(MacroField{FieldRole::density, u0, true}, 1.0, 1e-4,
                                                     DiffusionScheme::implicit_euler, 10000);
    const Vec u_end = macro.back().values;
    auto distance = [&](double eps) {
      SimulationParams p;
      p.mode = RunMode::parabolic;
      p.eps = eps;
      p.delta = 0.0;
      p.t_end = 1.0;
      p.record_every = 1000000;
      p.initial = h0;
      const auto res = simulate(r.macro, p);
      if (!res.error.empty()) throw Error(res.error);
      const Vec d = res.final_state.coeffs().row(0).transpose() - u_end;
      return std::sqrt(r.macro.product(d, d));
    };
    const double d2 = distance(0.2), d1 = distance(0.1), d05 = distance(0.05);
    const double ratio = d2 / d1;
    o.require(ratio >= 1.33 && ratio <= 3.0,
              fmt("|u^eps(1) - u(1)|: eps 0.2 %.3e, eps 0.1 %.3e, ratio %.3f", d2, d1, ratio));
    o.require(true, fmt("eps 0.05 %.3e, ratio 0.1/0.05 %.3f", d05, d1 / d05));
    return o;
  });

  criterion(9, "nonlinear d = 1", 300.0, [] {
    Outcome o;
    HarnessOptions opts;
    opts.out_dir = out_root() / "nonlinear";
    const auto rep = run_command("full", config("alpha2_nonlinear.toml"), opts);
    o.require(rep.failed_stage.empty(), "pipeline " + (rep.failed_stage.empty() ? "complete" : rep.failed_stage + ": " + rep.error));
    require_verdict(o, rep, "free_energy_monotone");
    require_verdict(o, rep, "psi_prime_controlled_by_free_energy");
    require_verdict(o, rep, "nonlinear_rate_matches_linear");
    require_verdict(o, rep, "Q_pairing_bound");
    return o;
  });

  criterion(10, "inequality suite", 120.0, [] {
    Outcome o;
    const auto& r = testing::reference();
    const auto& s = *r.s;
    const int n = s.grid.size();
    const double dx = s.grid.dx();
    std::mt19937_64 gen(110);
    std::uniform_real_distribution<double> U(-1.0, 1.0), C(-3.0, 3.0), Wd(0.5, 2.5);

    // BLW on smooth compactly supported w
    double blw = -1e300;
    for (int t = 0; t < 50; ++t) {
      const double c = C(gen), w = Wd(gen);
      double a[4];
      for (double& x : a) x = U(gen);
      Vec f = Vec::Zero(n);
      for (int i = 0; i < n; ++i) {
        const double z = (s.grid.node(i) - c) / w;
        if (std::abs(z) < 1.0)
          f[i] = std::exp(-1.0 / (1.0 - z * z)) * (a[0] + a[1] * z + a[2] * std::sin(3 * z) + a[3] * std::cos(5 * z));
      }
      double hess = 0.0, div = 0.0, drift = 0.0;
      for (int i = 1; i + 1 < n; ++i) hess += std::pow((f[i + 1] - 2 * f[i] + f[i - 1]) / (dx * dx), 2) * s.rho[i] * dx;
      Vec flux(n - 1);
      for (int k = 0; k + 1 < n; ++k) {
        const double g = (f[k + 1] - f[k]) / dx;
        flux[k] = s.rho_face[k] * g;
        drift += std::pow(s.dW_face[k] * g, 2) * s.rho_face[k] * dx;
      }
      for (int i = 0; i < n; ++i) {
        const double d = ((i + 1 < n ? flux[i] : 0.0) - (i > 0 ? flux[i - 1] : 0.0)) / dx;
        div += d * d / s.rho[i] * dx;
      }
      const double rhs = 6 * div + 8 * drift;
      blw = std::max(blw, (hess - rhs) / rhs);
    }
    o.require(blw <= 1e-6, fmt("BLW: max (lhs - rhs)/rhs %.3e", blw));

    // weighted Poincare inequalities with the estimated constants
    const auto ch = estimate_chain_constants(s, s.grid);
    const Vec g2 = s.dW.cwiseProduct(s.dW);
    double p1 = -1e300, p2 = -1e300;
    for (int t = 0; t < 50; ++t) {
      const PhaseState st = t % 2 ? testing::random_state(r.ops, gen) : testing::smooth_state(r.ops, gen);
      const Vec u = st.coeffs().row(0).transpose();
      const Vec gu = r.ops.grad(u);
      double k1 = 0.0, m1 = 0.0, k2 = 0.0, m2 = 0.0;
      for (int k = 0; k + 1 < n; ++k) {
        k1 += s.rho_face[k] * gu[k] * gu[k] * dx;
        k2 += 0.5 * (g2[k] + g2[k + 1]) * s.rho_face[k] * gu[k] * gu[k] * dx;
      }
      for (int i = 0; i < n; ++i) {
        m1 += g2[i] * u[i] * u[i] * s.rho[i] * dx;
        m2 += g2[i] * g2[i] * u[i] * u[i] * s.rho[i] * dx;
      }
      p1 = std::max(p1, (ch.C * m1 - k1) / k1);
      p2 = std::max(p2, (ch.C_circ * m2 - k2) / k2);
    }
    o.require(p1 <= 1e-6, fmt("C = %.4g: max (C rhs - lhs)/lhs %.2e", ch.C, p1));
    o.require(p2 <= 1e-6, fmt("C_circ = %.4g: max (C_circ rhs - lhs)/lhs %.2e", ch.C_circ, p2));

    // elliptic energy bounds for u_g - (1/rho)(rho w_g')' = u_h
    double c1 = -1e300, c2 = -1e300;
    const double K = 1.0 + 2.0 * s.rho.maxCoeff();
    for (int t = 0; t < 50; ++t) {
      const PhaseState st = t % 2 ? testing::random_state(r.ops, gen) : testing::smooth_state(r.ops, gen);
      const Vec uh = st.coeffs().row(0).transpose();
      const double pi2 = r.macro.product(uh, uh);
      const auto sol = r.macro.solve_elliptic(uh);
      const Vec gw = r.ops.grad(sol.w_g.values), gu = r.ops.grad(sol.u_g.values);
      double ew = 0.0, eu = 0.0;
      for (int k = 0; k + 1 < n; ++k) {
        ew += s.rho_face[k] * gw[k] * gw[k] * dx;
        eu += s.rho_face[k] * gu[k] * gu[k] * dx;
      }
      const double lhs = r.macro.product(sol.u_g.values, sol.u_g.values) + 2 * ew;
      c1 = std::max(c1, lhs / pi2 - 1.0);
      c2 = std::max(c2, eu / (K * pi2) - 1.0);
    }
    o.require(c1 <= 1e-6, fmt("energy bound: max lhs/|Pi h|^2 - 1 = %.2e", c1));
    o.require(c2 <= 1e-6, fmt("gradient bound with K = %.4f: max ratio - 1 = %.2e", K, c2));
    return o;
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
