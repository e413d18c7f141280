#pragma once

#include <filesystem>
#include <memory>

#include <Eigen/Dense>

#include "vpfp/steady_state.hpp"

namespace vpfp {

using Coeffs = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// h(x, v) = sum_k c_k(x) H_k(v). Even modes live at the grid nodes, odd modes at
// the interior faces x_{i+1/2} (entries 0..N-2; entry N-1 is kept at zero).
class PhaseState {
 public:
  PhaseState() = default;
  PhaseState(std::shared_ptr<const SteadyState> steady, int modes, double eps = 1.0);

  int modes() const { return static_cast<int>(c_.rows()); }
  int points() const { return static_cast<int>(c_.cols()); }
  const SteadyState& steady() const { return *steady_; }
  const std::shared_ptr<const SteadyState>& steady_ptr() const { return steady_; }
  double eps() const { return eps_; }
  void set_eps(double eps);
  double time() const { return time_; }
  void set_time(double t) { time_ = t; }

  Coeffs& coeffs() { return c_; }
  const Coeffs& coeffs() const { return c_; }
  double& operator()(int k, int i) { return c_(k, i); }
  double operator()(int k, int i) const { return c_(k, i); }

  // Position where entry i of mode k lives.
  double position(int k, int i) const;
  bool same_space(const PhaseState& other) const;
  bool finite() const { return c_.allFinite(); }

  PhaseState& operator+=(const PhaseState& o);
  PhaseState& operator-=(const PhaseState& o);
  PhaseState& operator*=(double a);
  // this += a * o
  void axpy(double a, const PhaseState& o);

 private:
  std::shared_ptr<const SteadyState> steady_;
  Coeffs c_;
  double eps_ = 1.0;
  double time_ = 0.0;
};

PhaseState operator+(PhaseState a, const PhaseState& b);
PhaseState operator-(PhaseState a, const PhaseState& b);
PhaseState operator*(double s, PhaseState a);

// sum_i c_0(x_i) rho(x_i) dx
double weighted_average(const PhaseState& h);
// Tolerance used for the zero-average test, relative to the size of c_0.
double average_tolerance(const PhaseState& h);
bool has_zero_average(const PhaseState& h);
void project_zero_average(PhaseState& h);

// L^2(f_star dx dv) part of the scalar product, modes from k_min on.
double l2_product(const PhaseState& a, const PhaseState& b, int k_min = 0);
// L^2 part plus the Poisson energy int psi_a' psi_b' dx.
double scalar_product(const PhaseState& a, const PhaseState& b);
double norm_sq(const PhaseState& h);

// psi_h' = -m(c_0 rho) at the interior faces.
Vec psi_prime(const PhaseState& h);

// Columns x, c0..c{K-1}; odd modes are sampled at x + dx/2.
void write_snapshot(const PhaseState& h, const std::filesystem::path& csv);

}  // namespace vpfp
