#include "vpfp/grid.hpp"

#include "vpfp/errors.hpp"

namespace vpfp {

Grid1D::Grid1D(int n, double radius) : n_(n), radius_(radius) {
  if (n < 16) throw DomainError("grid needs N >= 16");
  if (n % 2 != 0) throw DomainError("grid needs an even N so that no node sits at the origin");
  if (!(radius > 0.0)) throw DomainError("grid radius must be positive");
  dx_ = 2.0 * radius / n;
}

Vec Grid1D::nodes() const {
  Vec x(n_);
  for (int i = 0; i < n_; ++i) x[i] = node(i);
  return x;
}

Vec Grid1D::faces() const {
  Vec x(n_ - 1);
  for (int i = 0; i + 1 < n_; ++i) x[i] = face(i);
  return x;
}

double integrate(const Grid1D& grid, const Vec& f) {
  if (f.size() != grid.size()) throw ShapeError("field size does not match the grid");
  return f.sum() * grid.dx();
}

}  // namespace vpfp
