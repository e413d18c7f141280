#include "vpfp/operators.hpp"

#include <cmath>
#include <random>

#include "vpfp/errors.hpp"

namespace vpfp {

OperatorSet::OperatorSet(std::shared_ptr<const SteadyState> steady, const HermiteBasis& basis)
    : steady_(std::move(steady)), basis_(basis) {
  if (!steady_) throw DomainError("operators need a steady state");
  const auto& s = *steady_;
  const int n = s.grid.size();
  const double h = s.grid.dx();
  if (s.rho.size() != n || s.rho_face.size() != n - 1 || s.W.size() != n)
    throw ShapeError("steady state fields do not match the grid");
  g_lo_ = Vec::Zero(n);
  g_hi_ = Vec::Zero(n);
  d_lo_ = Vec::Zero(n - 1);
  d_hi_ = Vec::Zero(n - 1);
  // Ratios of adjacent weights from W, which stays finite where rho underflows.
  for (int i = 0; i < n; ++i) {
    if (i > 0) g_lo_[i] = std::exp(0.5 * (s.W[i] - s.W[i - 1])) / h;
    if (i + 1 < n) g_hi_[i] = std::exp(0.5 * (s.W[i] - s.W[i + 1])) / h;
  }
  for (int f = 0; f + 1 < n; ++f) {
    d_lo_[f] = std::exp(0.5 * (s.W[f + 1] - s.W[f])) / h;
    d_hi_[f] = std::exp(0.5 * (s.W[f] - s.W[f + 1])) / h;
  }

  std::mt19937_64 gen(20240611);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  PhaseState x = zero_state();
  for (int k = 0; k < modes(); ++k)
    for (int i = 0; i < (k % 2 ? n - 1 : n); ++i) x(k, i) = U(gen);
  project_zero_average(x);
  const double n0 = norm_sq(x);
  sym_defect_ = std::abs(scalar_product(apply_T(x), x)) / n0;

  // Power iteration on T^* T = -T^2.
  PhaseState tx = zero_state(), ttx = zero_state();
  x *= 1.0 / std::sqrt(n0);
  double est = 0.0;
  for (int it = 0; it < 300; ++it) {
    apply_T_into(x, tx);
    est = std::max(est, norm_sq(tx));
    apply_T_into(tx, ttx);
    ttx *= -1.0;
    const double nn = std::sqrt(norm_sq(ttx));
    if (!(nn > 0.0)) break;
    x = ttx;
    x *= 1.0 / nn;
  }
  t_norm_ = 1.05 * std::sqrt(est);
}

PhaseState OperatorSet::zero_state(double eps) const { return PhaseState(steady_, modes(), eps); }

void OperatorSet::check(const PhaseState& h) const {
  if (h.steady_ptr() != steady_) throw ShapeError("state belongs to a different steady state");
  if (h.modes() != modes() || h.points() != steady_->grid.size())
    throw ShapeError("state dimensions do not match the operator set");
}

void OperatorSet::apply_T_into(const PhaseState& hs, PhaseState& out) const {
  check(hs);
  check(out);
  const auto& s = *steady_;
  const int n = s.grid.size();
  const int K = modes();
  const double h = s.grid.dx();
  const double ih = 1.0 / h;
  const Coeffs& c = hs.coeffs();
  Coeffs& o = out.coeffs();
  if (&c == &o) throw DomainError("apply_T_into cannot run in place");

  for (int k = 0; k < K; ++k) {
    const double up = basis_.root(k);          // from mode k-1
    const double down = basis_.root(k + 1);    // from mode k+1
    const bool has_up = k >= 1;
    const bool has_down = k + 1 < K;
    const double* lo = has_up ? c.row(k - 1).data() : nullptr;
    const double* hi = has_down ? c.row(k + 1).data() : nullptr;
    double* r = o.row(k).data();
    if (k % 2 == 0) {
      for (int i = 0; i < n; ++i) {
        double v = 0.0;
        if (has_up) {
          const double right = i < n - 1 ? lo[i] : 0.0;
          const double left = i > 0 ? lo[i - 1] : 0.0;
          v += up * (right - left) * ih;
        }
        if (has_down) {
          const double left = i > 0 ? g_lo_[i] * hi[i - 1] : 0.0;
          const double right = i < n - 1 ? g_hi_[i] * hi[i] : 0.0;
          v -= down * (left - right);
        }
        r[i] = v;
      }
    } else {
      for (int f = 0; f + 1 < n; ++f) {
        double v = up * (lo[f + 1] - lo[f]) * ih;
        if (has_down) v -= down * (d_lo_[f] * hi[f] - d_hi_[f] * hi[f + 1]);
        r[f] = v;
      }
      r[n - 1] = 0.0;
    }
  }
  // v dpsi/dx enters mode 1 as psi' = -m.
  if (K > 1) {
    double acc = 0.0;
    const double* c0 = c.row(0).data();
    double* r1 = o.row(1).data();
    for (int f = 0; f + 1 < n; ++f) {
      acc += c0[f] * s.rho[f] * h;
      r1[f] -= acc;
    }
  }
  out.set_eps(hs.eps());
  out.set_time(hs.time());
}

PhaseState OperatorSet::apply_T(const PhaseState& h) const {
  PhaseState out = zero_state(h.eps());
  apply_T_into(h, out);
  return out;
}

PhaseState OperatorSet::apply_L(const PhaseState& h) const {
  check(h);
  PhaseState out = h;
  for (int k = 0; k < modes(); ++k) out.coeffs().row(k) *= -static_cast<double>(k);
  return out;
}

PhaseState OperatorSet::apply_Pi(const PhaseState& h) const {
  check(h);
  PhaseState out = zero_state(h.eps());
  out.coeffs().row(0) = h.coeffs().row(0);
  out.set_time(h.time());
  return out;
}

Vec OperatorSet::grad(const Vec& u) const {
  const int n = steady_->grid.size();
  if (u.size() != n) throw ShapeError("grad expects a nodal field");
  Vec g(n - 1);
  for (int f = 0; f + 1 < n; ++f) g[f] = (u[f + 1] - u[f]) / steady_->grid.dx();
  return g;
}

Vec OperatorSet::grad_adjoint(const Vec& c) const {
  const int n = steady_->grid.size();
  if (c.size() != n - 1) throw ShapeError("grad_adjoint expects a face field");
  Vec u(n);
  for (int i = 0; i < n; ++i) {
    const double left = i > 0 ? g_lo_[i] * c[i - 1] : 0.0;
    const double right = i < n - 1 ? g_hi_[i] * c[i] : 0.0;
    u[i] = left - right;
  }
  return u;
}

Vec OperatorSet::div(const Vec& c) const {
  const int n = steady_->grid.size();
  if (c.size() != n - 1) throw ShapeError("div expects a face field");
  Vec u(n);
  for (int i = 0; i < n; ++i) {
    const double right = i < n - 1 ? c[i] : 0.0;
    const double left = i > 0 ? c[i - 1] : 0.0;
    u[i] = (right - left) / steady_->grid.dx();
  }
  return u;
}

Vec OperatorSet::div_adjoint(const Vec& u) const {
  const int n = steady_->grid.size();
  if (u.size() != n) throw ShapeError("div_adjoint expects a nodal field");
  Vec c(n - 1);
  for (int f = 0; f + 1 < n; ++f) c[f] = d_lo_[f] * u[f] - d_hi_[f] * u[f + 1];
  return c;
}

OperatorSet build_operators(std::shared_ptr<const SteadyState> steady, const HermiteBasis& basis) {
  if (!steady) throw DomainError("operators need a steady state");
  if (!(steady->residual < 1e-4))
    throw DomainError("steady state residual " + std::to_string(steady->residual) +
                      " is above 1e-4");
  return OperatorSet(std::move(steady), basis);
}

}  // namespace vpfp
