#include "vpfp/rates.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "vpfp/chain.hpp"
#include "vpfp/errors.hpp"

namespace vpfp {

const char* to_string(CMMethod m) {
  return m == CMMethod::direct_operator_norm ? "direct_operator_norm" : "chain_bound";
}

double HypocoConstants::c_nonlinear() const { return 1.0 + std::sqrt(2.0 * (d + 2)); }

double compute_delta_star(double lambda_m, double lambda_M, double C_M) {
  if (!(lambda_m > 0.0) || !(lambda_M > 0.0)) throw DomainError("lambda_m and lambda_M must be positive");
  if (!(C_M >= 0.0)) throw DomainError("C_M must be nonnegative");
  const double third = 4.0 * lambda_m * lambda_M / (4.0 * lambda_M + C_M * C_M * (1.0 + lambda_M));
  return std::min({2.0, lambda_m, third});
}

double rate_discriminant(double lambda_m, double lambda_M, double C_M, double delta, double lambda) {
  const double a = lambda_m - delta;
  const double b = delta * lambda_M / (1.0 + lambda_M);
  const double p = C_M + 0.5 * lambda;
  return delta * delta * p * p - 4.0 * (a - 0.5 * lambda) * (b - 0.5 * lambda);
}

double compute_decay_rate(double lambda_m, double lambda_M, double C_M, double delta) {
  const double ds = compute_delta_star(lambda_m, lambda_M, C_M);
  if (!(delta > 0.0) || !(delta < ds)) throw DomainError("delta must lie in (0, delta_star)");
  const double a = lambda_m - delta;
  const double b = delta * lambda_M / (1.0 + lambda_M);
  // h = A l^2 + B l + C0 with A < 0, C0 < 0 below delta_star.
  const double A = 0.25 * delta * delta - 1.0;
  const double B = delta * delta * C_M + 2.0 * (a + b);
  const double C0 = delta * delta * C_M * C_M - 4.0 * a * b;
  const double disc = B * B - 4.0 * A * C0;
  double lambda;
  if (C0 >= 0.0) {
    lambda = 0.0;
  } else if (disc < 0.0) {
    lambda = 2.0 * a;
  } else {
    lambda = 2.0 * C0 / (-B - std::sqrt(disc));
  }
  // Sign condition a - l/2 > 0; never binds for h(delta, 2a) > 0, kept as a guard.
  if (lambda >= 2.0 * a) lambda = std::nextafter(2.0 * a, 0.0);
  return lambda;
}

double quadratic_form_scan(double lambda_m, double lambda_M, double C_M, double delta,
                           double lambda, int directions) {
  const double a = lambda_m - delta - 0.5 * lambda;
  const double b = delta * lambda_M / (1.0 + lambda_M) - 0.5 * lambda;
  const double c = delta * (C_M + 0.5 * lambda);
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < directions; ++k) {
    const double t = 2.0 * std::numbers::pi * k / directions;
    const double X = std::cos(t), Y = std::sin(t);
    worst = std::min(worst, a * X * X + b * Y * Y - c * X * Y);
  }
  return worst;
}

EpsScaling compute_eps_scaled(double lambda_m, double lambda_M, double C_M, double eps) {
  EpsScaling e;
  e.eps = eps;
  const double C2 = C_M * C_M;
  e.delta_eps = 4.0 * lambda_m * lambda_M * eps / (4.0 * lambda_M * eps * eps + C2 * (1.0 + lambda_M));
  e.zeta = 2.0 * lambda_m * lambda_M / (C2 * (1.0 + lambda_M));
  e.eta = lambda_m * lambda_M * lambda_M / (C2 * (1.0 + lambda_M) * (1.0 + lambda_M));
  const double K = 2.0 * e.zeta;
  const double e2 = eps * eps;
  const double lhs = lambda_m * lambda_m * std::pow(K, 4) * e2 * e2 +
                     K * C2 * C_M * (4.0 * K * lambda_m + 3.0 * C_M * (K + 4.0)) * e2 -
                     2.0 * C2 * C2 * C2;
  e.small_eps_admissible = lhs < 0.0;
  return e;
}

double optimize_delta(double lambda_m, double lambda_M, double C_M) {
  const double ds = compute_delta_star(lambda_m, lambda_M, C_M);
  auto f = [&](double d) { return compute_decay_rate(lambda_m, lambda_M, C_M, d); };
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = 1e-9 * ds, hi = (1.0 - 1e-9) * ds;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-14 * ds; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = f(x1);
    }
  }
  return 0.5 * (lo + hi);
}

HypocoConstants certify_rate(double lambda_M, double C_M, CMMethod method, DeltaPolicy policy,
                             double explicit_delta, int d) {
  HypocoConstants hc;
  hc.lambda_m = 1.0;
  hc.lambda_M = lambda_M;
  hc.C_M = C_M;
  hc.method = method;
  hc.d = d;
  hc.delta_star = compute_delta_star(hc.lambda_m, lambda_M, C_M);
  switch (policy) {
    case DeltaPolicy::half_delta_star: hc.chosen_delta = 0.5 * hc.delta_star; break;
    case DeltaPolicy::optimize: hc.chosen_delta = optimize_delta(hc.lambda_m, lambda_M, C_M); break;
    case DeltaPolicy::explicit_value: hc.chosen_delta = explicit_delta; break;
  }
  hc.lambda = compute_decay_rate(hc.lambda_m, lambda_M, C_M, hc.chosen_delta);
  return hc;
}

namespace {

// Thomas solve for a symmetric tridiagonal system (diag, off) x = r.
Vec thomas(const Vec& diag, const Vec& off, Vec r) {
  const int n = static_cast<int>(diag.size());
  Vec d = diag;
  for (int i = 1; i < n; ++i) {
    const double w = off[i - 1] / d[i - 1];
    d[i] -= w * off[i - 1];
    r[i] -= w * r[i - 1];
  }
  Vec x(n);
  x[n - 1] = r[n - 1] / d[n - 1];
  for (int i = n - 2; i >= 0; --i) x[i] = (r[i] - off[i] * x[i + 1]) / d[i];
  return x;
}

}  // namespace

double estimate_lambda_M(const SteadyState& state, const Grid1D& grid) {
  const int n = grid.size();
  if (state.grid.size() != n) throw ShapeError("grid does not match the steady state");
  const double h = grid.dx();
  // D^{-1/2} K D^{-1/2} with K = G^T diag(rho_f h) G, D = diag(rho h).
  // Weight ratios come from W to stay finite in the far tail.
  Vec diag = Vec::Zero(n), off(n - 1);
  for (int f = 0; f + 1 < n; ++f) {
    const double left = std::exp(0.5 * (state.W[f] - state.W[f + 1]));   // rho_face / rho_f
    const double right = std::exp(0.5 * (state.W[f + 1] - state.W[f]));  // rho_face / rho_{f+1}
    diag[f] += left / (h * h);
    diag[f + 1] += right / (h * h);
    off[f] = -1.0 / (h * h);
  }
  Vec q0 = (0.5 * (-state.W.array())).exp();
  q0 /= q0.norm();
  const double sigma = -1e-4 * diag.mean();
  Vec shifted = diag.array() - sigma;

  Vec y = grid.nodes();
  y -= q0.dot(y) * q0;
  y /= y.norm();
  double mu = 0.0;
  double change = 1.0;
  const int max_iter = 20000;
  int it = 0;
  for (; it < max_iter; ++it) {
    Vec z = thomas(shifted, off, y);
    z -= q0.dot(z) * q0;
    z /= z.norm();
    // Rayleigh quotient of the unshifted operator.
    Vec az = diag.cwiseProduct(z);
    az.head(n - 1) += off.cwiseProduct(z.tail(n - 1));
    az.tail(n - 1) += off.cwiseProduct(z.head(n - 1));
    const double mu_new = z.dot(az);
    change = std::abs(mu_new - mu) / std::abs(mu_new);
    mu = mu_new;
    y = z;
    // Rayleigh quotients converge quadratically, so 1e-10 here means ~1e-8 on the vector.
    if (it > 3 && change < 1e-10) break;
  }
  if (it == max_iter) throw NumericError("inverse iteration for C_star stagnated", change);
  if (!(mu > 0.0)) throw NumericError("nonpositive Poincare constant", mu);
  return mu;
}

double estimate_lambda_M(const SteadyState& state) { return estimate_lambda_M(state, state.grid); }

double macroscopic_gap(const MacroOperator& macro) {
  const auto& s = macro.steady();
  const int n = s.grid.size();
  const double h = s.grid.dx();
  // Scaled coordinates y = sqrt(rho h) u: the L^2 part of the H product is |y|^2.
  // P y gives sqrt(h) m(rho u) on faces; L y gives sqrt(rho_f h) G w on faces.
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n - 1, n), L = Eigen::MatrixXd::Zero(n - 1, n);
  for (int j = 0; j < n; ++j) {
    const double sj = std::sqrt(s.rho[j] * h);
    for (int f = j; f + 1 < n; ++f) {
      P(f, j) = std::sqrt(h) * sj;
      L(f, j) = -std::sqrt(s.rho_face[f] * h) * sj;
    }
    if (j >= 1) L(j - 1, j) += std::exp(0.25 * (s.W[j] - s.W[j - 1])) / h;
    if (j + 1 < n) L(j, j) -= std::exp(0.25 * (s.W[j] - s.W[j + 1])) / h;
  }
  const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n) + P.transpose() * P;
  const Eigen::MatrixXd Ks = L.transpose() * L;
  // Restrict to y orthogonal to sqrt(rho h).
  Vec q0 = (0.5 * (-s.W.array())).exp();
  q0 /= q0.norm();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(q0);
  const Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd Z = Q.rightCols(n - 1);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Z.transpose() * Ks * Z,
                                                              Z.transpose() * M * Z);
  if (es.info() != Eigen::Success) throw NumericError("macroscopic gap eigensolve failed", 0.0);
  return es.eigenvalues()[0];
}

namespace {

struct PowerResult {
  double norm;
  int iterations;
};

// Largest singular value of B : (R^m, <.,.>_in) -> (R^n, <.,.>_out) from B^* B.
template <class ApplyBstarB, class Rayleigh>
PowerResult power_norm(Vec x, ApplyBstarB&& bsb, Rayleigh&& ray, auto&& in_norm, int max_iter,
                       double tol) {
  x /= in_norm(x);
  double prev = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const double r = ray(x);
    Vec y = bsb(x);
    const double ny = in_norm(y);
    if (!(ny > 0.0)) return {0.0, it};
    x = y / ny;
    if (it > 2 && std::abs(r - prev) <= tol * std::abs(r)) return {std::sqrt(r), it + 1};
    prev = r;
  }
  throw NumericError("power iteration for C_M did not converge", std::abs(ray(x) - prev));
}

}  // namespace

CMEstimate estimate_C_M_direct(const MacroOperator& macro, std::uint64_t seed, int max_iter,
                               double tol) {
  const auto& ops = macro.ops();
  const auto& s = macro.steady();
  const int n = s.grid.size();
  const double h = s.grid.dx();
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);

  auto face_norm = [&](const Vec& c) { return std::sqrt(c.cwiseProduct(c).dot(s.rho_face) * h); };
  auto node_norm = [&](const Vec& u) { return std::sqrt(u.cwiseProduct(u).dot(s.rho) * h); };
  auto solve = [&](const Vec& r) { return macro.solve_elliptic(r).u_g.values; };
  // B1 c = (Id + S)^{-1} G^* c,  B1^* u = G v - m(rho v) with v = (Id + S)^{-1} u.
  auto B1 = [&](const Vec& c) { return solve(ops.grad_adjoint(c)); };
  auto B1star = [&](const Vec& u) {
    const Vec v = solve(u);
    return Vec(ops.grad(v) - cumulative_mass(s.grid, v.cwiseProduct(s.rho)));
  };
  const double r2 = std::sqrt(2.0);

  Vec x1(n - 1), x2(n);
  for (auto& v : x1) v = U(gen);
  for (auto& v : x2) v = U(gen);

  const auto p1 = power_norm(
      x1, [&](const Vec& c) { return B1star(B1(c)); },
      [&](const Vec& c) {
        const Vec u = B1(c);
        return macro.product(u, u) / std::pow(face_norm(c), 2);
      },
      face_norm, max_iter, tol);
  // B2 c = B1(-sqrt2 D^* c),  B2^* u = -sqrt2 D B1^* u.
  auto B2 = [&](const Vec& c) { return B1(-r2 * ops.div_adjoint(c)); };
  const auto p2 = power_norm(
      x2, [&](const Vec& c) { return Vec(-r2 * ops.div(B1star(B2(c)))); },
      [&](const Vec& c) {
        const Vec u = B2(c);
        return macro.product(u, u) / std::pow(node_norm(c), 2);
      },
      node_norm, max_iter, tol);

  CMEstimate est;
  est.flux_part = p1.norm;
  est.mode2_part = p2.norm;
  est.value = std::hypot(p1.norm, p2.norm);
  est.iterations = p1.iterations + p2.iterations;
  return est;
}

double estimate_C_M(const MacroOperator& macro, CMMethod method, const ChainConstants* chain) {
  if (method == CMMethod::direct_operator_norm) return estimate_C_M_direct(macro).value;
  if (chain) return chain->C_M_bound;
  return estimate_chain_constants(macro.steady(), macro.steady().grid).C_M_bound;
}

}  // namespace vpfp
