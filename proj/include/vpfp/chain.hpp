#pragma once

#include "vpfp/steady_state.hpp"

namespace vpfp {

// Constants of the explicit chain bounding the norm of A T (Id - Pi).
struct ChainConstants {
  double C_star = 0.0;       // Poincare constant with weight rho
  double C = 0.0;            // int u'^2 rho >= C int u^2 W'^2 rho, zero average
  double C_circ = 0.0;       // int u'^2 W'^2 rho >= C_circ int u^2 W'^4 rho, zero average
  double Lambda_star = 0.0;  // sup of (W'^2 - W'') / (2 W'^2), outer half of the grid
  double Lambda_circ = 0.0;  // sup of |(W'^2)'| / W'^2, outer half of the grid
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double kappa3 = 0.0;
  double kappa4 = 0.0;
  double K_gradient = 0.0;     // 1 + 2 max rho
  double kappa = 0.0;        // X_2^2 <= kappa |Pi h|^2
  double lambda_chain = 0.0;
  double C_M_bound = 0.0;
  double R = 0.0;            // inner radius, half the domain
  double G_R = 0.0;          // sup over |x| <= R of |(W'^2)'|
  int excluded_nodes = 0;    // outer nodes skipped because W' vanishes there
};

// Smallest constant of int u'^2 a rho >= c int u^2 b rho over zero-average u.
// a lives on faces (N-1 values), b on nodes.
double weighted_poincare(const SteadyState& state, const Vec& face_weight, const Vec& node_weight);

ChainConstants estimate_chain_constants(const SteadyState& state, const Grid1D& grid);

}  // namespace vpfp
