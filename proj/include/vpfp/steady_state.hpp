#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "vpfp/grid.hpp"
#include "vpfp/potential.hpp"

namespace vpfp {

// Cumulative mass m at the interior faces: m_{i+1/2} = sum_{j<=i} rho_j dx.
Vec cumulative_mass(const Grid1D& grid, const Vec& rho);

// phi' = M/2 - m on faces, phi fixed by max phi = 0.
MacroField poisson_solve_1d(const MacroField& rho, double total_mass, const Grid1D& grid);

// int psi_1' psi_2' dx for two zero-mass densities, i.e. sum over faces of m_1 m_2 dx.
double poisson_pairing(const Grid1D& grid, const Vec& rho1, const Vec& rho2);

struct SteadyState {
  Grid1D grid;
  double mass = 0.0;
  double residual = 0.0;
  double alpha = 0.0;  // NaN for tabulated potentials
  int iterations = 0;
  Vec rho;       // nodes
  Vec phi;       // nodes, normalised so that sum exp(-V-phi) dx = M
  Vec W;         // V + phi
  Vec dW;        // W' at nodes
  Vec d2W;       // W'' = V'' - rho at nodes
  Vec rho_face;  // geometric mean of adjacent nodes
  Vec dW_face;   // (W_{i+1} - W_i)/dx
  std::vector<double> residual_history;
};

struct PoissonBoltzmannOptions {
  double tol = 1e-10;
  int max_iter = 5000;
  double damping = 0.5;
  int aitken_start = 10;
  std::optional<Vec> initial_phi;
};

SteadyState solve_poisson_boltzmann(const PotentialSpec& spec, double mass, const Grid1D& grid,
                                    const PoissonBoltzmannOptions& opts = {});

// Sup norm of -phi'' - rho by second differences with the boundary slopes +-M/2.
double steady_residual(const SteadyState& state);

// Derived fields from (grid, mass, rho, phi, W, dW, d2W); used by the solver and by loaders.
void finalize_faces(SteadyState& state);

// steady_state.csv plus steady_state.json in dir.
void write_steady_state(const SteadyState& state, const std::filesystem::path& dir);
SteadyState read_steady_state(const std::filesystem::path& dir);

}  // namespace vpfp
