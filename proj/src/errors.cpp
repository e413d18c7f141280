#include "vpfp/errors.hpp"

#include <utility>

namespace vpfp {

IterationDivergedError::IterationDivergedError(const std::string& what, std::vector<double> history)
    : Error(what), history_(std::move(history)) {}

NumericError::NumericError(const std::string& what, double residual)
    : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}

BlowUpError::BlowUpError(const std::string& what, double last_good_time)
    : Error(what + " (last good time " + std::to_string(last_good_time) + ")"),
      last_good_time_(last_good_time) {}

PositivityError::PositivityError(const std::string& what, double x, double v)
    : Error(what + " at x=" + std::to_string(x) + ", v=" + std::to_string(v)), x_(x), v_(v) {}

ConfigError::ConfigError(const std::string& what, int line)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

}  // namespace vpfp
