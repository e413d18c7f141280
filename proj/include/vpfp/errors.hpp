#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace vpfp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the admissible range of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Density handed to the Poisson inverse does not carry the declared mass.
class InconsistentDensityError : public Error {
 public:
  using Error::Error;
};

class IterationDivergedError : public Error {
 public:
  IterationDivergedError(const std::string& what, std::vector<double> history);
  const std::vector<double>& residual_history() const { return history_; }

 private:
  std::vector<double> history_;
};

// Eigen-iteration stagnation, singular solves, power-iteration failure.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, double residual);
  double residual() const { return residual_; }

 private:
  double residual_;
};

class StabilityError : public Error {
 public:
  using Error::Error;
};

class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, double last_good_time);
  double last_good_time() const { return last_good_time_; }

 private:
  double last_good_time_;
};

class PositivityError : public Error {
 public:
  PositivityError(const std::string& what, double x, double v);
  double x() const { return x_; }
  double v() const { return v_; }

 private:
  double x_;
  double v_;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line);
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace vpfp
