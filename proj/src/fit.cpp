#include "vpfp/fit.hpp"

#include <cmath>
#include <limits>

#include "vpfp/errors.hpp"

namespace vpfp {

DecayFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& value,
                        const FitWindow& window) {
  if (t.size() != value.size()) throw ShapeError("fit_decay_rate: t and value differ in length");
  const int n = static_cast<int>(t.size());
  if (n < 10) throw InsufficientDataError("fit_decay_rate needs at least 10 points");
  for (double v : value)
    if (!(v > 0.0)) throw DomainError("fit_decay_rate needs positive values");
  const int lo = static_cast<int>(std::floor(window.skip_head * n));
  const int hi = n - static_cast<int>(std::floor(window.skip_tail * n));
  const int m = hi - lo;
  if (m < 3) throw InsufficientDataError("fit window holds fewer than 3 points");

  double st = 0.0, sy = 0.0;
  for (int i = lo; i < hi; ++i) {
    st += t[i];
    sy += std::log(value[i]);
  }
  const double tm = st / m, ym = sy / m;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (int i = lo; i < hi; ++i) {
    const double dt = t[i] - tm, dy = std::log(value[i]) - ym;
    stt += dt * dt;
    sty += dt * dy;
    syy += dy * dy;
  }
  if (!(stt > 0.0)) throw InsufficientDataError("fit window has no spread in t");

  DecayFit f;
  f.points = m;
  const double slope = sty / stt;
  f.rate = -slope;
  f.intercept = ym - slope * tm;
  const double sse = std::max(syy - slope * sty, 0.0);
  // Constant to rounding: treat as degenerate.
  if (syy <= 1e-28 * m) {
    f.rate = 0.0;
    f.intercept = ym;
    f.r_squared = std::numeric_limits<double>::quiet_NaN();
    f.r_squared_defined = false;
  } else {
    f.r_squared = 1.0 - sse / syy;
  }
  f.rate_halfwidth = m > 2 ? 1.96 * std::sqrt(sse / (m - 2) / stt) : 0.0;
  return f;
}

}  // namespace vpfp
