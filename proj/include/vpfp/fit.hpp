#pragma once

#include <vector>

namespace vpfp {

struct FitWindow {
  double skip_head = 0.10;  // fraction of points dropped at the start
  double skip_tail = 0.05;  // and at the end
};

struct DecayFit {
  double rate = 0.0;       // minus the slope of log(value) against t
  double intercept = 0.0;  // of log(value)
  double r_squared = 0.0;  // NaN when the window is constant
  bool r_squared_defined = true;
  double rate_halfwidth = 0.0;  // 1.96 standard errors of the slope
  int points = 0;
};

// Least squares on (t, log value) over the window. Needs >= 10 points, all values > 0.
DecayFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& value,
                        const FitWindow& window = {});

}  // namespace vpfp
