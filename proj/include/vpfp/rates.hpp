#pragma once

#include <cstdint>
#include <string>

#include "vpfp/macro_ops.hpp"

namespace vpfp {

enum class CMMethod { direct_operator_norm, chain_bound };
const char* to_string(CMMethod m);

struct HypocoConstants {
  double lambda_m = 1.0;
  double lambda_M = 0.0;
  double C_M = 0.0;
  CMMethod method = CMMethod::direct_operator_norm;
  double delta_star = 0.0;
  double chosen_delta = 0.0;
  double lambda = 0.0;
  int d = 1;
  // Constant 1 + sqrt(2(d+2)) of the nonlinear estimate.
  double c_nonlinear() const;
};

struct EpsScaling {
  double eps = 1.0;
  double delta_eps = 0.0;
  double zeta = 0.0;
  double eta = 0.0;
  bool small_eps_admissible = false;
};

double compute_delta_star(double lambda_m, double lambda_M, double C_M);

// Smaller positive root of the discriminant h(delta, lambda); 0 < delta < delta_star.
double compute_decay_rate(double lambda_m, double lambda_M, double C_M, double delta);

// h(delta, lambda) = delta^2 (C + lambda/2)^2 - 4 (a - lambda/2)(b - lambda/2).
double rate_discriminant(double lambda_m, double lambda_M, double C_M, double delta, double lambda);

// Minimum over `directions` unit vectors (X, Y) of
// (a - l/2) X^2 + (b - l/2) Y^2 - delta (C + l/2) X Y.
double quadratic_form_scan(double lambda_m, double lambda_M, double C_M, double delta,
                           double lambda, int directions = 360);

EpsScaling compute_eps_scaled(double lambda_m, double lambda_M, double C_M, double eps);

// delta maximising the decay rate on (0, delta_star), golden-section search.
double optimize_delta(double lambda_m, double lambda_M, double C_M);

enum class DeltaPolicy { half_delta_star, optimize, explicit_value };

HypocoConstants certify_rate(double lambda_M, double C_M, CMMethod method, DeltaPolicy policy,
                             double explicit_delta = 0.0, int d = 1);

// Smallest nonzero eigenvalue of the rho-weighted stiffness/mass pencil
// (inverse iteration with deflation of constants, tolerance 1e-8).
double estimate_lambda_M(const SteadyState& state, const Grid1D& grid);
double estimate_lambda_M(const SteadyState& state);

// Smallest eigenvalue of (T Pi)^*(T Pi) on zero-average profiles in the
// scalar product with Poisson energy.
double macroscopic_gap(const MacroOperator& macro);

struct CMEstimate {
  double value = 0.0;
  double flux_part = 0.0;   // norm of c_1 -> A(c_1 in mode 1), the AL piece
  double mode2_part = 0.0;  // norm of c_2 -> A T(c_2 in mode 2), the AT(Id-Pi) piece
  int iterations = 0;
};

struct ChainConstants;

CMEstimate estimate_C_M_direct(const MacroOperator& macro, std::uint64_t seed = 7,
                               int max_iter = 5000, double tol = 1e-6);
double estimate_C_M(const MacroOperator& macro, CMMethod method, const ChainConstants* chain = nullptr);

}  // namespace vpfp
