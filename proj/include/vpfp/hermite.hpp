#pragma once

#include <vector>

namespace vpfp {

// Normalised probabilists' Hermite polynomials, orthonormal for the Maxwellian
// weight (2 pi)^{-1/2} exp(-v^2/2). Degrees 0..K-1.
class HermiteBasis {
 public:
  explicit HermiteBasis(int modes);

  int size() const { return k_; }
  // sqrt(k) for k = 0..K.
  double root(int k) const { return roots_[k]; }
  // Values of all K basis functions at v.
  std::vector<double> eval_all(double v) const;
  double eval(int k, double v) const;

 private:
  int k_;
  std::vector<double> roots_;
};

// Gauss-Hermite rule for the normalised Maxwellian; weights sum to one.
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;

  static GaussHermite make(int points);
};

// int (a v^2 - a)^2 M(v) dv by Gauss-Hermite quadrature.
double fourth_moment_form(double a);

}  // namespace vpfp
