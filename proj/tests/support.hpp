#pragma once

// Shared fixtures and independent reference computations for the tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "vpfp/chain.hpp"
#include "vpfp/evolution.hpp"
#include "vpfp/fit.hpp"
#include "vpfp/rates.hpp"

namespace testing {

using vpfp::Vec;

inline std::shared_ptr<const vpfp::SteadyState> steady(double alpha, double mass, int N, double X) {
  return std::make_shared<const vpfp::SteadyState>(
      vpfp::solve_poisson_boltzmann(vpfp::PotentialSpec::power_law(alpha, X), mass, vpfp::Grid1D(N, X)));
}

// alpha = 2, M = 1 on [-8, 8], N = 128, K = 16; built once per binary.
struct Reference {
  std::shared_ptr<const vpfp::SteadyState> s;
  vpfp::OperatorSet ops;
  vpfp::MacroOperator macro;

  Reference(double alpha, double mass, int N, double X, int K)
      : s(steady(alpha, mass, N, X)), ops(s, vpfp::HermiteBasis(K)), macro(ops) {}
};

inline const Reference& reference() {
  static const Reference r(2.0, 1.0, 128, 8.0, 16);
  return r;
}

// Nonlinear-sized reference: X = 5, same dx.
inline const Reference& reference_x5() {
  static const Reference r(2.0, 1.0, 80, 5.0, 16);
  return r;
}

// Uniform(-1, 1) entries on every live slot, optionally projected to zero average.
// Entries are damped by sqrt(rho) so that the state has O(1) norm.
inline vpfp::PhaseState random_state(const vpfp::OperatorSet& ops, std::mt19937_64& gen, bool zero_avg = true,
                                     double scale = 1.0) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const auto& s = ops.steady();
  const int n = s.grid.size();
  vpfp::PhaseState h = ops.zero_state();
  for (int k = 0; k < ops.modes(); ++k)
    for (int i = 0; i < (k % 2 ? n - 1 : n); ++i) h(k, i) = scale * U(gen);
  if (zero_avg) vpfp::project_zero_average(h);
  return h;
}

// Smooth random state: a few low Fourier modes in x per Hermite mode, decaying in k.
inline vpfp::PhaseState smooth_state(const vpfp::OperatorSet& ops, std::mt19937_64& gen, double scale = 1.0,
                                     int kmax = -1) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const auto& s = ops.steady();
  const int n = s.grid.size();
  const double X = s.grid.radius();
  vpfp::PhaseState h = ops.zero_state();
  const int K = kmax < 0 ? ops.modes() : kmax;
  for (int k = 0; k < K; ++k) {
    double a[4];
    for (double& c : a) c = U(gen) / (1.0 + k);
    for (int i = 0; i < (k % 2 ? n - 1 : n); ++i) {
      const double x = h.position(k, i) / X;
      h(k, i) = scale * (a[0] + a[1] * std::cos(M_PI * x) + a[2] * std::sin(M_PI * x) + a[3] * x * x);
    }
  }
  vpfp::project_zero_average(h);
  return h;
}

namespace oracle {

// min{2, lambda_m, 4 lambda_m lambda_M / (4 lambda_M + C^2 (1 + lambda_M))} by hand arithmetic.
inline double delta_star(double lm, double lM, double C) {
  return std::min({2.0, lm, 4.0 * lm * lM / (4.0 * lM + C * C * (1.0 + lM))});
}

// Smallest eigenvalue of the symmetric 2x2 matrix of the rate quadratic form.
inline double form_min_eig(double lm, double lM, double C, double delta, double lambda) {
  const double a = lm - delta - 0.5 * lambda;
  const double b = delta * lM / (1.0 + lM) - 0.5 * lambda;
  const double off = -0.5 * delta * (C + 0.5 * lambda);
  const double tr = a + b, det = a * b - off * off;
  return 0.5 * (tr - std::sqrt(std::max(0.0, tr * tr - 4.0 * det)));
}

// Largest lambda with the form nonnegative on (0, lambda] and lm - delta - lambda/2 > 0,
// by a fine march followed by bisection.
inline double decay_rate(double lm, double lM, double C, double delta) {
  const double cap = 2.0 * (lm - delta);
  double lo = 0.0;
  const int n = 20000;
  for (int i = 1; i <= n; ++i) {
    const double l = cap * i / n;
    if (form_min_eig(lm, lM, C, delta, l) < 0.0 || l >= cap) break;
    lo = l;
  }
  double hi = std::min(cap, lo + cap / n);
  if (form_min_eig(lm, lM, C, delta, hi) >= 0.0) return hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (form_min_eig(lm, lM, C, delta, mid) >= 0.0 ? lo : hi) = mid;
  }
  return lo;
}

// Ordinary least squares of log(v) on t in long double; returns -slope.
inline double ls_rate(const std::vector<double>& t, const std::vector<double>& v, std::size_t lo,
                      std::size_t hi) {
  long double st = 0, sy = 0, stt = 0, sty = 0;
  const long double m = hi - lo;
  for (std::size_t i = lo; i < hi; ++i) {
    const long double y = std::log((long double)v[i]);
    st += t[i];
    sy += y;
    stt += (long double)t[i] * t[i];
    sty += t[i] * y;
  }
  return -(double)((m * sty - st * sy) / (m * stt - st * st));
}

// Spectral gap of -(1/rho)(rho u')' with rho = exp(-W) on an independent vertex-centred
// grid of [-X, X] with Neumann ends: symmetric dense eigensolve.
inline double sturm_liouville_gap(const std::function<double(double)>& W, int n, double X) {
  const double h = 2.0 * X / (n - 1);
  Eigen::VectorXd x(n), r(n), rf(n - 1), mass(n);
  for (int i = 0; i < n; ++i) {
    x[i] = -X + i * h;
    r[i] = std::exp(-W(x[i]));
    mass[i] = r[i] * h * ((i == 0 || i == n - 1) ? 0.5 : 1.0);
  }
  for (int i = 0; i + 1 < n; ++i) rf[i] = std::exp(-W(x[i] + 0.5 * h));
  Eigen::MatrixXd Kst = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    const double w = rf[i] / h;
    Kst(i, i) += w;
    Kst(i + 1, i + 1) += w;
    Kst(i, i + 1) -= w;
    Kst(i + 1, i) -= w;
  }
  // M^{-1/2} K M^{-1/2}
  const Eigen::VectorXd is = mass.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd S = is.asDiagonal() * Kst * is.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  return es.eigenvalues()[1];
}

// Nodes and weights of the Gauss-Hermite rule for the standard normal via Golub-Welsch.
inline void gauss_hermite(int n, std::vector<double>& x, std::vector<double>& w) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) J(i, i + 1) = J(i + 1, i) = std::sqrt(i + 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    x[i] = es.eigenvalues()[i];
    w[i] = es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
  }
}

// Normalised Hermite polynomial He_k(v)/sqrt(k!) by the three-term recurrence.
inline double hermite(int k, double v) {
  double p0 = 1.0, p1 = v;
  if (k == 0) return 1.0;
  for (int j = 1; j < k; ++j) {
    const double p2 = v * p1 - j * p0;
    p0 = p1;
    p1 = p2;
  }
  double f = 1.0;
  for (int j = 2; j <= k; ++j) f *= j;
  return p1 / std::sqrt(f);
}

}  // namespace oracle
}  // namespace testing
