#include "vpfp/hermite.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "vpfp/errors.hpp"

namespace vpfp {

HermiteBasis::HermiteBasis(int modes) : k_(modes), roots_(modes + 1) {
  if (modes < 4) throw DomainError("Hermite basis needs K >= 4");
  for (int k = 0; k <= modes; ++k) roots_[k] = std::sqrt(static_cast<double>(k));
}

std::vector<double> HermiteBasis::eval_all(double v) const {
  // v H_k = sqrt(k+1) H_{k+1} + sqrt(k) H_{k-1}
  std::vector<double> h(k_);
  h[0] = 1.0;
  if (k_ > 1) h[1] = v;
  for (int k = 1; k + 1 < k_; ++k) h[k + 1] = (v * h[k] - roots_[k] * h[k - 1]) / roots_[k + 1];
  return h;
}

double HermiteBasis::eval(int k, double v) const {
  if (k < 0 || k >= k_) throw DomainError("Hermite degree out of range");
  return eval_all(v)[k];
}

GaussHermite GaussHermite::make(int points) {
  if (points < 1) throw DomainError("Gauss-Hermite rule needs at least one point");
  // Golub-Welsch on the Jacobi matrix of the normalised recurrence.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(points, points);
  for (int k = 1; k < points; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  GaussHermite g;
  g.nodes.resize(points);
  g.weights.resize(points);
  for (int i = 0; i < points; ++i) {
    g.nodes[i] = es.eigenvalues()[i];
    const double q = es.eigenvectors()(0, i);
    g.weights[i] = q * q;
  }
  return g;
}

double fourth_moment_form(double a) {
  static const GaussHermite rule = GaussHermite::make(8);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double v = rule.nodes[i];
    const double q = a * v * v - a;
    s += rule.weights[i] * q * q;
  }
  return s;
}

}  // namespace vpfp
