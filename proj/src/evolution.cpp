#include "vpfp/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "vpfp/errors.hpp"

namespace vpfp {

double max_stable_dt(const OperatorSet& ops, double eps) {
  const double dx = ops.steady().grid.dx();
  const double v_eff = std::sqrt(2.0 * ops.modes());
  return std::min(0.4 * eps * dx / v_eff, 2.8 * eps / ops.transport_norm());
}

namespace {

// out += scale * Q[y]
void add_Q(const OperatorSet& ops, const PhaseState& y, PhaseState& out, double scale) {
  const auto& s = ops.steady();
  const int n = s.grid.size();
  const int K = ops.modes();
  const Vec m = cumulative_mass(s.grid, y.coeffs().row(0).transpose().cwiseProduct(s.rho));
  const Coeffs& c = y.coeffs();
  Coeffs& o = out.coeffs();
  for (int k = 1; k < K; ++k) {
    const double r = scale * ops.basis().root(k);
    if (k % 2) {
      for (int f = 0; f + 1 < n; ++f) o(k, f) += r * m[f] * 0.5 * (c(k - 1, f) + c(k - 1, f + 1));
    } else {
      for (int i = 0; i < n; ++i) {
        const double left = i > 0 ? m[i - 1] * c(k - 1, i - 1) : 0.0;
        const double right = i + 1 < n ? m[i] * c(k - 1, i) : 0.0;
        o(k, i) += r * 0.5 * (left + right);
      }
    }
  }
}

}  // namespace

PhaseState apply_Q(const OperatorSet& ops, const PhaseState& h) {
  PhaseState out = ops.zero_state(h.eps());
  add_Q(ops, h, out, 1.0);
  out.set_time(h.time());
  return out;
}

Stepper::Stepper(const OperatorSet& ops, bool nonlinear)
    : ops_(ops),
      nonlinear_(nonlinear),
      k1_(ops.zero_state()),
      k2_(ops.zero_state()),
      k3_(ops.zero_state()),
      k4_(ops.zero_state()),
      tmp_(ops.zero_state()) {}

void Stepper::rhs(const PhaseState& y, PhaseState& out) {
  ops_.apply_T_into(y, out);
  out *= -1.0;
  if (nonlinear_) add_Q(ops_, y, out, 1.0);
  out *= 1.0 / y.eps();
}

void Stepper::collide(PhaseState& h, double tau) const {
  const double e2 = h.eps() * h.eps();
  for (int k = 1; k < h.modes(); ++k) h.coeffs().row(k) *= std::exp(-k * tau / e2);
}

void Stepper::advance(PhaseState& h, double dt) {
  const double eps = h.eps();
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  const double limit = max_stable_dt(ops_, eps);
  if (dt > limit * (1.0 + 1e-12))
    throw StabilityError("dt = " + std::to_string(dt) + " exceeds the CFL limit " +
                         std::to_string(limit));
  if (nonlinear_ && eps != 1.0) throw DomainError("nonlinear steps are defined for eps = 1 only");
  const double t0 = h.time();

  collide(h, 0.5 * dt);
  rhs(h, k1_);
  tmp_ = h;
  tmp_.axpy(0.5 * dt, k1_);
  rhs(tmp_, k2_);
  tmp_ = h;
  tmp_.axpy(0.5 * dt, k2_);
  rhs(tmp_, k3_);
  tmp_ = h;
  tmp_.axpy(dt, k3_);
  rhs(tmp_, k4_);
  h.axpy(dt / 6.0, k1_);
  h.axpy(dt / 3.0, k2_);
  h.axpy(dt / 3.0, k3_);
  h.axpy(dt / 6.0, k4_);
  collide(h, 0.5 * dt);

  if (!h.finite()) throw BlowUpError("non-finite coefficients after a step", t0);
  // The transport telescopes exactly; only rounding moves the average.
  drift_ += std::abs(weighted_average(h));
  project_zero_average(h);
  h.set_time(t0 + dt);
}

PhaseState step_linear(const OperatorSet& ops, const PhaseState& h, double dt, double eps) {
  PhaseState out = h;
  out.set_eps(eps);
  Stepper(ops, false).advance(out, dt);
  return out;
}

PhaseState step_nonlinear(const OperatorSet& ops, const PhaseState& h, double dt) {
  const VelocityLattice lattice(ops.basis());
  const auto lo = lattice_minimum(lattice, h);
  if (lo.value < -1e-8) throw PositivityError("1 + h is negative on the velocity lattice", lo.x, lo.v);
  PhaseState out = h;
  Stepper(ops, true).advance(out, dt);
  return out;
}

VelocityLattice::VelocityLattice(const HermiteBasis& basis, int points)
    : rule_(GaussHermite::make(points > 0 ? points : basis.size())) {
  const int K = basis.size();
  const int nv = this->points();
  H_.resize(nv, K);
  dH_.resize(nv, K);
  for (int j = 0; j < nv; ++j) {
    const auto vals = basis.eval_all(rule_.nodes[j]);
    for (int k = 0; k < K; ++k) {
      H_(j, k) = vals[k];
      dH_(j, k) = k > 0 ? basis.root(k) * vals[k - 1] : 0.0;
    }
  }
}

Eigen::MatrixXd VelocityLattice::nodal(const PhaseState& h) const {
  const int n = h.points();
  Eigen::MatrixXd c = h.coeffs();
  for (int k = 1; k < h.modes(); k += 2) {
    for (int i = n - 1; i >= 0; --i) {
      const double right = i + 1 < n ? h(k, i) : 0.0;
      const double left = i > 0 ? h(k, i - 1) : 0.0;
      c(k, i) = 0.5 * (left + right);
    }
  }
  return c;
}

Eigen::MatrixXd VelocityLattice::values(const PhaseState& h) const { return H_ * nodal(h); }

Eigen::MatrixXd VelocityLattice::v_derivative(const PhaseState& h) const { return dH_ * nodal(h); }

LatticeMinimum lattice_minimum(const VelocityLattice& lattice, const PhaseState& h) {
  const Eigen::MatrixXd f = lattice.values(h);
  Eigen::Index j = 0, i = 0;
  const double lo = f.minCoeff(&j, &i);
  return {1.0 + lo, h.steady().grid.node(static_cast<int>(i)), lattice.node(static_cast<int>(j))};
}

double evaluate_H_delta(const MacroOperator& macro, const PhaseState& h, double delta) {
  if (!(delta >= 0.0) || !(delta < 2.0)) throw DomainError("delta must lie in [0, 2)");
  const double half = 0.5 * norm_sq(h);
  if (delta == 0.0) return half;
  return half + delta * scalar_product(macro.apply_A_state(h), h);
}

DissipationTerms dissipation_terms(const MacroOperator& macro, const PhaseState& h, double delta,
                                   double eps) {
  const auto& ops = macro.ops();
  DissipationTerms d;
  const PhaseState Lh = ops.apply_L(h);
  const PhaseState Pih = ops.apply_Pi(h);
  d.L_term = -scalar_product(Lh, h);
  d.ATPi = scalar_product(macro.apply_A_state(ops.apply_T(Pih)), h);
  d.TA = scalar_product(ops.apply_T(macro.apply_A_state(h)), h);
  d.ATperp = scalar_product(macro.apply_A_state(ops.apply_T(h - Pih)), h);
  d.AL = scalar_product(macro.apply_A_state(Lh), h);
  d.total = (d.L_term / eps + delta * (d.ATPi + d.ATperp - d.TA) - delta * d.AL / eps) / eps;
  return d;
}

FreeEnergy nonlinear_free_energy(const VelocityLattice& lattice, const PhaseState& h) {
  const auto& s = h.steady();
  const double dx = s.grid.dx();
  const Eigen::MatrixXd f = lattice.values(h);
  const Eigen::MatrixXd df = lattice.v_derivative(h);
  FreeEnergy out;
  double ent = 0.0, fis = 0.0;
  for (int i = 0; i < f.cols(); ++i) {
    double e = 0.0, q = 0.0;
    for (int j = 0; j < f.rows(); ++j) {
      const double g = 1.0 + f(j, i);
      if (!(g > 0.0)) throw DomainError("free energy needs 1 + h > 0 on the velocity lattice");
      e += lattice.weight(j) * (g * std::log1p(f(j, i)) - f(j, i));
      q += lattice.weight(j) * df(j, i) * df(j, i) / g;
    }
    ent += e * s.rho[i] * dx;
    fis += q * s.rho[i] * dx;
  }
  const Vec m = psi_prime(h);
  out.free_energy = ent + 0.5 * m.squaredNorm() * dx;
  out.fisher = fis;
  out.psi_prime_sup = m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
  return out;
}

FreeEnergy nonlinear_free_energy(const OperatorSet& ops, const PhaseState& h) {
  return nonlinear_free_energy(VelocityLattice(ops.basis()), h);
}

const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::linear: return "linear";
    case RunMode::parabolic: return "parabolic";
    case RunMode::nonlinear: return "nonlinear";
  }
  return "?";
}

const char* to_string(ProfileKind k) {
  switch (k) {
    case ProfileKind::gaussian_bump: return "gaussian_bump";
    case ProfileKind::mode_seed: return "mode_seed";
    case ProfileKind::random: return "random";
  }
  return "?";
}

PhaseState make_initial_state(const OperatorSet& ops, const InitialProfile& p, double eps) {
  PhaseState h = ops.zero_state(eps);
  const int n = h.points();
  auto fill = [&](int k, auto&& fn) {
    if (k < 0 || k >= h.modes()) throw DomainError("profile mode outside the Hermite basis");
    const int len = k % 2 ? n - 1 : n;
    for (int i = 0; i < len; ++i) h(k, i) = p.amplitude * fn(h.position(k, i));
  };
  switch (p.kind) {
    case ProfileKind::gaussian_bump:
      if (!(p.sigma > 0.0)) throw DomainError("gaussian_bump needs sigma > 0");
      fill(p.mode, [&](double x) { return std::exp(-0.5 * (x - p.x0) * (x - p.x0) / (p.sigma * p.sigma)); });
      break;
    case ProfileKind::mode_seed:
      fill(p.k, [&](double x) { return std::cos(p.wavenumber * x); });
      break;
    case ProfileKind::random: {
      std::mt19937_64 gen(p.seed);
      std::uniform_real_distribution<double> U(-1.0, 1.0);
      for (int k = 0; k < h.modes(); ++k) fill(k, [&](double) { return U(gen); });
      break;
    }
  }
  project_zero_average(h);
  return h;
}

SimulationResult simulate(const MacroOperator& macro, const SimulationParams& params) {
  const auto& ops = macro.ops();
  const auto& s = ops.steady();
  const int n = s.grid.size();
  const double dx = s.grid.dx();
  const bool nonlinear = params.mode == RunMode::nonlinear;
  const double eps = params.mode == RunMode::nonlinear ? 1.0 : params.eps;
  if (nonlinear && params.eps != 1.0) throw DomainError("nonlinear runs use eps = 1");
  if (!(params.t_end > 0.0)) throw DomainError("t_end must be positive");
  if (params.record_every < 1) throw DomainError("record_every must be positive");

  SimulationResult res;
  PhaseState h = params.initial ? *params.initial : make_initial_state(ops, params.profile, eps);
  h.set_eps(eps);
  h.set_time(0.0);
  project_zero_average(h);

  const VelocityLattice lattice(ops.basis());
  if (nonlinear) {
    const auto lo = lattice_minimum(lattice, h);
    if (lo.value < 1e-12) {
      // Shrink the perturbation until 1 + h >= 1e-12; zero average is kept.
      h *= (1.0 - 1e-12) / (1.0 - lo.value);
      ++res.clip_events;
    }
  }

  const double limit = max_stable_dt(ops, eps);
  double dt = params.dt > 0.0 ? params.dt : 0.9 * limit;
  const int steps = std::max(1, static_cast<int>(std::ceil(params.t_end / dt - 1e-9)));
  dt = params.t_end / steps;
  res.dt = dt;

  for (int i = 0; i < n; ++i)
    if (std::abs(s.grid.node(i)) > 0.9 * s.grid.radius()) res.steady_tail_mass += s.rho[i] * dx;
  res.boundary_flag = res.steady_tail_mass > 1e-8;

  const int K = ops.modes();
  double drift = 0.0;
  auto record = [&](const PhaseState& st) {
    TimeSeriesRecord r;
    r.t = st.time();
    r.norm_sq = norm_sq(st);
    r.H_delta = evaluate_H_delta(macro, st, params.delta);
    r.mass_defect = std::abs(weighted_average(st)) + drift;
    const Vec m = psi_prime(st);
    r.psi_prime_sup = m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
    r.macro_norm_sq = norm_sq(ops.apply_Pi(st));
    r.micro_dissipation = -scalar_product(ops.apply_L(st), st);
    const double l2 = l2_product(st, st);
    r.closure_ratio = l2 > 0.0 ? l2_product(st, st, K - 2) / l2 : 0.0;
    double outer = 0.0, all = 0.0;
    for (int i = 0; i < n; ++i) {
      const double a = std::abs(st(0, i)) * s.rho[i];
      all += a;
      if (std::abs(s.grid.node(i)) > 0.8 * s.grid.radius()) outer += a;
    }
    r.outer_mass_ratio = all > 0.0 ? outer / all : 0.0;
    if (nonlinear) {
      const auto fe = nonlinear_free_energy(lattice, st);
      r.free_energy = fe.free_energy;
      r.fisher = fe.fisher;
      r.q_pairing = scalar_product(apply_Q(ops, st), st);
      r.q_bound = params.c_nonlinear * r.psi_prime_sup * std::sqrt(std::max(r.micro_dissipation, 0.0)) *
                  std::sqrt(r.macro_norm_sq);
    }
    if (params.verbose_dissipation) r.terms = dissipation_terms(macro, st, params.delta, eps);
    if (!res.series.empty()) {
      const auto& prev = res.series.back();
      r.D_delta = -(r.H_delta - prev.H_delta) / (r.t - prev.t);
    }
    res.max_closure_ratio = std::max(res.max_closure_ratio, r.closure_ratio);
    res.series.push_back(r);
  };

  try {
    record(h);
    Stepper stepper(ops, nonlinear);
    for (int k = 1; k <= steps; ++k) {
      if (nonlinear) {
        const auto lo = lattice_minimum(lattice, h);
        if (lo.value < -1e-8)
          throw PositivityError("1 + h is negative on the velocity lattice", lo.x, lo.v);
      }
      stepper.advance(h, dt);
      drift = stepper.removed_drift();
      res.steps = k;
      if (k % params.record_every == 0 || k == steps) record(h);
    }
  } catch (const Error& e) {
    res.error = e.what();
  }
  res.final_state = h;
  return res;
}

namespace {

std::string field(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  return out;
}

}  // namespace

void write_series_csv(const std::vector<TimeSeriesRecord>& series, const std::string& path) {
  auto out = open_csv(path);
  out << "t,norm_sq,H_delta,D_delta,free_energy,fisher,psi_prime_sup,mass_defect\n";
  for (const auto& r : series)
    out << field(r.t) << ',' << field(r.norm_sq) << ',' << field(r.H_delta) << ',' << field(r.D_delta)
        << ',' << field(r.free_energy) << ',' << field(r.fisher) << ',' << field(r.psi_prime_sup) << ','
        << field(r.mass_defect) << '\n';
}

void write_nonlinear_csv(const std::vector<TimeSeriesRecord>& series, const std::string& path) {
  auto out = open_csv(path);
  out << "t,q_pairing,q_bound,micro_dissipation,macro_norm_sq,psi_prime_sup,free_energy\n";
  for (const auto& r : series)
    out << field(r.t) << ',' << field(r.q_pairing) << ',' << field(r.q_bound) << ','
        << field(r.micro_dissipation) << ',' << field(r.macro_norm_sq) << ',' << field(r.psi_prime_sup)
        << ',' << field(r.free_energy) << '\n';
}

void write_dissipation_csv(const std::vector<TimeSeriesRecord>& series, const std::string& path) {
  auto out = open_csv(path);
  out << "t,L_term,ATPi,TA,ATperp,AL,total\n";
  for (const auto& r : series) {
    if (!r.terms) continue;
    const auto& d = *r.terms;
    out << field(r.t) << ',' << field(d.L_term) << ',' << field(d.ATPi) << ',' << field(d.TA) << ','
        << field(d.ATperp) << ',' << field(d.AL) << ',' << field(d.total) << '\n';
  }
}

}  // namespace vpfp
