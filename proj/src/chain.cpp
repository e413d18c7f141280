#include "vpfp/chain.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "vpfp/errors.hpp"
#include "vpfp/rates.hpp"

namespace vpfp {

double weighted_poincare(const SteadyState& s, const Vec& face_weight, const Vec& node_weight) {
  const int n = s.grid.size();
  if (face_weight.size() != n - 1 || node_weight.size() != n)
    throw ShapeError("weighted_poincare: weight sizes do not match the grid");
  const double h = s.grid.dx();
  // y = sqrt(rho h) u. Stiffness sum_f a_f rho_f h (G u)_f^2 becomes tridiagonal in y.
  Eigen::MatrixXd Kq = Eigen::MatrixXd::Zero(n, n);
  for (int f = 0; f + 1 < n; ++f) {
    const double a = face_weight[f] / (h * h);
    Kq(f, f) += a * std::exp(0.5 * (s.W[f] - s.W[f + 1]));
    Kq(f + 1, f + 1) += a * std::exp(0.5 * (s.W[f + 1] - s.W[f]));
    Kq(f, f + 1) -= a;
    Kq(f + 1, f) -= a;
  }
  const Eigen::MatrixXd Bq = node_weight.asDiagonal();
  Vec q0 = (0.5 * (-s.W.array())).exp();
  q0 /= q0.norm();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(q0);
  const Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd Z = Q.rightCols(n - 1);
  // Largest nu of B z = nu K z; K is definite on the complement of q0.
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Z.transpose() * Bq * Z,
                                                              Z.transpose() * Kq * Z);
  if (es.info() != Eigen::Success) throw NumericError("weighted Poincare eigensolve failed", 0.0);
  const double nu = es.eigenvalues().maxCoeff();
  if (!(nu > 0.0)) throw NumericError("weighted Poincare: vanishing right-hand weight", nu);
  return 1.0 / nu;
}

ChainConstants estimate_chain_constants(const SteadyState& s, const Grid1D& grid) {
  const int n = grid.size();
  if (s.grid.size() != n) throw ShapeError("grid does not match the steady state");
  const double h = grid.dx();
  const double M = s.mass;
  ChainConstants c;

  c.C_star = estimate_lambda_M(s, grid);

  const Vec g2 = s.dW.cwiseProduct(s.dW);
  Vec face_g2(n - 1);
  for (int f = 0; f + 1 < n; ++f) face_g2[f] = 0.5 * (g2[f] + g2[f + 1]);
  c.C = weighted_poincare(s, Vec::Ones(n - 1), g2);
  c.C_circ = weighted_poincare(s, face_g2, g2.cwiseProduct(g2));

  // Only int u_g phi rho enters, and u_g has zero average: phi is centred first.
  const double phibar = s.phi.dot(s.rho) * h / M;
  const Vec dphi = s.phi.array() - phibar;
  c.kappa1 = dphi.cwiseProduct(dphi).dot(s.rho) * h;

  const double rho_max = s.rho.maxCoeff();
  const double lap2 = s.d2W.cwiseProduct(s.d2W).dot(s.rho) * h;
  const double grad2 = g2.dot(s.rho) * h;
  c.kappa2 = (lap2 / c.C_star + grad2) * rho_max + c.kappa1 / (M * M) * lap2;

  double g2rho = 0.0, dg2rho = 0.0;
  for (int i = 0; i < n; ++i) {
    g2rho = std::max(g2rho, g2[i] * s.rho[i]);
    const double dg = 2.0 * s.dW[i] * s.d2W[i];
    dg2rho = std::max(dg2rho, dg * dg * s.rho[i]);
  }
  c.kappa3 = std::sqrt(g2rho);
  c.kappa4 = std::sqrt(dg2rho);
  c.K_gradient = 1.0 + 2.0 * rho_max;

  c.R = 0.5 * grid.radius();
  c.Lambda_star = 0.0;
  c.Lambda_circ = 0.0;
  c.G_R = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = grid.node(i);
    if (std::abs(x) <= c.R) {
      c.G_R = std::max(c.G_R, std::abs(2.0 * s.dW[i] * s.d2W[i]));
      continue;
    }
    if (std::abs(s.dW[i]) < 1e-12) {
      ++c.excluded_nodes;
      continue;
    }
    c.Lambda_star = std::max(c.Lambda_star, 0.5 * (g2[i] - s.d2W[i]) / g2[i]);
    c.Lambda_circ = std::max(c.Lambda_circ, std::abs(2.0 * s.d2W[i] / s.dW[i]));
  }

  // X2^2 <= b X2 P + c P^2 once X1^2 <= (K/C) P^2 is inserted.
  const double K = c.K_gradient;
  const double r = std::sqrt(K / c.C);
  const double b = c.kappa3 + c.Lambda_circ * r + 1.0 / std::sqrt(c.C_circ);
  const double q = c.kappa4 * r + K * c.G_R;
  const double root = 0.5 * (b + std::sqrt(b * b + 4.0 * q));
  c.kappa = root * root;
  c.lambda_chain = c.Lambda_star * (c.kappa + g2rho);
  const double s1 = std::sqrt(1.0 + c.lambda_chain) - 1.0;
  c.C_M_bound = std::sqrt(2.0 * (6.0 * (K + 1.5) + 8.0 * s1 * s1)) + 0.5;
  return c;
}

}  // namespace vpfp
