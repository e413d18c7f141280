#pragma once

#include <Eigen/Dense>

namespace vpfp {

using Vec = Eigen::VectorXd;

// Cell-centred uniform grid on [-X, X]: x_i = -X + (i + 1/2) dx, dx = 2X/N.
// N is even, so the origin sits on a cell face and never on a node.
// Faces x_{i+1/2}, i = 0..N-2, are the interior cell boundaries.
class Grid1D {
 public:
  Grid1D() = default;
  Grid1D(int n, double radius);

  int size() const { return n_; }
  double radius() const { return radius_; }
  double dx() const { return dx_; }
  double node(int i) const { return -radius_ + (i + 0.5) * dx_; }
  double face(int i) const { return -radius_ + (i + 1.0) * dx_; }
  Vec nodes() const;
  Vec faces() const;

 private:
  int n_ = 0;
  double radius_ = 0.0;
  double dx_ = 0.0;
};

// Quadrature on the grid: sum of nodal values times dx.
double integrate(const Grid1D& grid, const Vec& f);

enum class FieldRole { density, potential, flux, cumulative, generic };

struct MacroField {
  FieldRole role = FieldRole::generic;
  Vec values;
  // Meaningful for density fields only: weighted average vanishes within 1e-10.
  bool zero_average = false;
};

}  // namespace vpfp
