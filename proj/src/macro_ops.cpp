#include "vpfp/macro_ops.hpp"

#include <cmath>
#include <functional>

#include "vpfp/errors.hpp"

namespace vpfp {

namespace {

struct CgResult {
  Vec x;
  int iterations;
  bool converged;
};

// Conjugate gradients for an operator that is self-adjoint and positive in dot().
CgResult conjugate_gradient(const std::function<Vec(const Vec&)>& apply,
                            const std::function<double(const Vec&, const Vec&)>& dot, const Vec& b,
                            double tol, int max_iter) {
  Vec x = Vec::Zero(b.size());
  Vec r = b;
  Vec p = r;
  double rr = dot(r, r);
  const double stop = tol * tol * std::max(rr, 1e-300);
  int it = 0;
  if (rr == 0.0) return {x, 0, true};
  for (; it < max_iter; ++it) {
    const Vec ap = apply(p);
    const double alpha = rr / dot(p, ap);
    x += alpha * p;
    r -= alpha * ap;
    const double rr_new = dot(r, r);
    if (rr_new <= stop) return {x, it + 1, true};
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  return {x, it, false};
}

}  // namespace

MacroOperator::MacroOperator(const OperatorSet& ops, int dense_limit) : ops_(ops) {
  const auto& s = ops_.steady();
  const int n = s.grid.size();
  if (n > dense_limit) return;
  const double h = s.grid.dx();
  // Columns of G (u + psi_u) on faces: unit vector e_j gives (e_{j}' differences) - rho_j h on f >= j.
  S_.resize(n, n);
  Vec col(n - 1);
  for (int j = 0; j < n; ++j) {
    col.setZero();
    if (j >= 1) col[j - 1] += 1.0 / h;
    if (j + 1 < n) col[j] -= 1.0 / h;
    for (int f = j; f + 1 < n; ++f) col[f] -= s.rho[j] * h;
    S_.col(j) = ops_.grad_adjoint(col);
  }
  lu_.compute(Eigen::MatrixXd::Identity(n, n) + S_);
  rcond_ = lu_.rcond();
  if (!(rcond_ > 1e-14)) throw NumericError("Id + (T Pi)^*(T Pi) is numerically singular", rcond_);
  dense_ = true;
}

double MacroOperator::product(const Vec& u, const Vec& v) const {
  const auto& s = ops_.steady();
  const Vec ru = u.cwiseProduct(s.rho), rv = v.cwiseProduct(s.rho);
  return ru.dot(v) * s.grid.dx() + poisson_pairing(s.grid, ru, rv);
}

double MacroOperator::average(const Vec& u) const {
  const auto& s = ops_.steady();
  return u.dot(s.rho) * s.grid.dx();
}

void MacroOperator::require_zero_average(const Vec& u, const char* what) const {
  const auto& s = ops_.steady();
  const double size = std::sqrt(s.mass * u.cwiseProduct(u).dot(s.rho) * s.grid.dx());
  if (std::abs(average(u)) > 1e-10 * std::max(size, 1e-300))
    throw DomainError(std::string(what) + " needs a zero-average profile");
}

Vec MacroOperator::potential_of(const Vec& u) const {
  const auto& s = ops_.steady();
  MacroField rho{FieldRole::density, u.cwiseProduct(s.rho), false};
  return poisson_solve_1d(rho, integrate(s.grid, rho.values), s.grid).values;
}

Vec MacroOperator::apply_S(const Vec& u) const {
  const auto& s = ops_.steady();
  const Vec gw = ops_.grad(u) - cumulative_mass(s.grid, u.cwiseProduct(s.rho));
  return ops_.grad_adjoint(gw);
}

MacroField MacroOperator::apply_TPi_star_TPi(const MacroField& u) const {
  require_zero_average(u.values, "apply_TPi_star_TPi");
  return MacroField{FieldRole::density, apply_S(u.values), true};
}

EllipticSolveResult MacroOperator::finish(Vec u, const Vec& rhs, int iterations) const {
  EllipticSolveResult r;
  const Vec psi = potential_of(u);
  r.defect = (u + apply_S(u) - rhs).cwiseAbs().maxCoeff();
  r.iterations = iterations;
  r.w_g = MacroField{FieldRole::generic, u + psi, false};
  r.psi_g = MacroField{FieldRole::potential, psi, false};
  r.u_g = MacroField{FieldRole::density, std::move(u), false};
  const double size = std::sqrt(product(r.u_g.values, r.u_g.values));
  r.u_g.zero_average = std::abs(average(r.u_g.values)) <= 1e-10 * std::max(size, 1e-300);
  return r;
}

EllipticSolveResult MacroOperator::solve_elliptic(const Vec& rhs) const {
  return solve_elliptic(rhs, dense_ ? EllipticMethod::dense : EllipticMethod::krylov);
}

EllipticSolveResult MacroOperator::solve_elliptic(const Vec& rhs, EllipticMethod method) const {
  const int n = ops_.steady().grid.size();
  if (rhs.size() != n) throw ShapeError("right-hand side does not match the grid");
  if (method == EllipticMethod::dense) {
    if (!dense_) throw DomainError("dense factorisation not assembled for this grid size");
    return finish(lu_.solve(rhs), rhs, 1);
  }
  require_zero_average(rhs, "Krylov elliptic solve");
  const auto cg = conjugate_gradient([this](const Vec& v) { Vec out = v + apply_S(v); return out; },
                                     [this](const Vec& a, const Vec& b) { return product(a, b); },
                                     rhs, 1e-10, 20 * n);
  auto r = finish(cg.x, rhs, cg.iterations);
  if (!cg.converged) throw NumericError("conjugate gradients did not converge", r.defect);
  return r;
}

EllipticSolveResult MacroOperator::apply_A(const PhaseState& h) const {
  if (!has_zero_average(h)) throw DomainError("A needs a zero-average state");
  const int n = ops_.steady().grid.size();
  if (h.modes() < 2) return finish(Vec::Zero(n), Vec::Zero(n), 0);
  const Vec c1 = h.coeffs().row(1).head(n - 1).transpose();
  return solve_elliptic(ops_.grad_adjoint(c1));
}

PhaseState MacroOperator::apply_A_state(const PhaseState& h) const {
  PhaseState out(h.steady_ptr(), h.modes(), h.eps());
  out.coeffs().row(0) = apply_A(h).u_g.values.transpose();
  out.set_time(h.time());
  return out;
}

std::vector<MacroField> MacroOperator::solve_drift_diffusion(const MacroField& u0, double t_end,
                                                             double dt, DiffusionScheme scheme,
                                                             int record_every) const {
  require_zero_average(u0.values, "drift-diffusion solver");
  if (!(dt > 0.0) || !(t_end >= 0.0)) throw DomainError("drift-diffusion needs dt > 0, t_end >= 0");
  if (record_every < 1) throw DomainError("record_every must be positive");
  const auto& s = ops_.steady();
  const int n = s.grid.size();
  const int steps = static_cast<int>(std::ceil(t_end / dt - 1e-12));
  const double step = steps > 0 ? t_end / steps : dt;

  std::function<Vec(const Vec&)> advance;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  if (scheme == DiffusionScheme::explicit_euler) {
    const double h = s.grid.dx();
    if (step >= 0.5 * h * h) throw StabilityError("explicit drift-diffusion step violates dt < dx^2/2");
    // Largest eigenvalue of S by power iteration, with a safety factor.
    Vec x = Vec::Ones(n);
    x -= Vec::Constant(n, average(x) / s.mass);
    x.array() += s.grid.nodes().array();
    x -= Vec::Constant(n, average(x) / s.mass);
    double lam = 0.0;
    for (int it = 0; it < 200; ++it) {
      const Vec sx = apply_S(x);
      lam = std::max(lam, product(x, sx) / product(x, x));
      x = sx / std::sqrt(product(sx, sx));
    }
    if (step * 1.05 * lam > 2.0)
      throw StabilityError("explicit drift-diffusion step exceeds 2/|S|");
    advance = [this, step](const Vec& u) { Vec out = u - step * apply_S(u); return out; };
  } else if (dense_) {
    lu.compute(Eigen::MatrixXd::Identity(n, n) + step * S_);
    advance = [&lu](const Vec& u) { Vec out = lu.solve(u); return out; };
  } else {
    advance = [this, step, n](const Vec& u) {
      auto cg = conjugate_gradient(
          [this, step](const Vec& v) { Vec out = v + step * apply_S(v); return out; },
          [this](const Vec& a, const Vec& b) { return product(a, b); }, u, 1e-12, 20 * n);
      if (!cg.converged) throw NumericError("implicit drift-diffusion solve did not converge", 0.0);
      return cg.x;
    };
  }

  std::vector<MacroField> out;
  Vec u = u0.values;
  out.push_back(MacroField{FieldRole::density, u, true});
  for (int k = 1; k <= steps; ++k) {
    u = advance(u);
    if (!u.allFinite()) throw BlowUpError("drift-diffusion produced non-finite values", (k - 1) * step);
    if (k % record_every == 0 || k == steps) out.push_back(MacroField{FieldRole::density, u, true});
  }
  return out;
}

MacroField apply_TPi_star_TPi(const MacroOperator& macro, const MacroField& u) {
  return macro.apply_TPi_star_TPi(u);
}

EllipticSolveResult apply_A(const MacroOperator& macro, const PhaseState& h) {
  return macro.apply_A(h);
}

std::vector<MacroField> solve_drift_diffusion(const MacroOperator& macro, const MacroField& u0,
                                              double t_end, double dt) {
  return macro.solve_drift_diffusion(u0, t_end, dt);
}

}  // namespace vpfp
