#pragma once

#include <vector>

#include <Eigen/LU>

#include "vpfp/operators.hpp"

namespace vpfp {

struct EllipticSolveResult {
  MacroField u_g;
  MacroField psi_g;
  MacroField w_g;  // u_g + psi_g
  int iterations = 0;
  double defect = 0.0;
};

enum class EllipticMethod { dense, krylov };
enum class DiffusionScheme { implicit_euler, explicit_euler };

// Macroscopic elliptic machinery on zero-average nodal fields u (profiles of
// mode 0). S = (T Pi)^* (T Pi) acts as G^* G (u + psi_u) with psi_u' = -m(rho u).
class MacroOperator {
 public:
  // Dense LU of Id + S is assembled for N <= dense_limit, CG is used above it.
  explicit MacroOperator(const OperatorSet& ops, int dense_limit = 1024);

  const OperatorSet& ops() const { return ops_; }
  const SteadyState& steady() const { return ops_.steady(); }

  // sum u v rho dx + int psi_u' psi_v' dx
  double product(const Vec& u, const Vec& v) const;
  double average(const Vec& u) const;
  Vec potential_of(const Vec& u) const;
  Vec apply_S(const Vec& u) const;
  MacroField apply_TPi_star_TPi(const MacroField& u) const;

  EllipticSolveResult solve_elliptic(const Vec& rhs) const;
  EllipticSolveResult solve_elliptic(const Vec& rhs, EllipticMethod method) const;
  // A h = (Id + S)^{-1} G^* c_1; zero-average h required.
  EllipticSolveResult apply_A(const PhaseState& h) const;
  // A h as a phase state (profile in mode 0).
  PhaseState apply_A_state(const PhaseState& h) const;
  double condition_estimate() const { return rcond_; }

  // du/dt = -S u from u0, recorded every record_every steps (first and last always kept).
  std::vector<MacroField> solve_drift_diffusion(const MacroField& u0, double t_end, double dt,
                                                DiffusionScheme scheme = DiffusionScheme::implicit_euler,
                                                int record_every = 1) const;

 private:
  void require_zero_average(const Vec& u, const char* what) const;
  EllipticSolveResult finish(Vec u, const Vec& rhs, int iterations) const;

  OperatorSet ops_;
  Eigen::MatrixXd S_;  // dense S when assembled
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  bool dense_ = false;
  double rcond_ = 0.0;
};

MacroField apply_TPi_star_TPi(const MacroOperator& macro, const MacroField& u);
EllipticSolveResult apply_A(const MacroOperator& macro, const PhaseState& h);
std::vector<MacroField> solve_drift_diffusion(const MacroOperator& macro, const MacroField& u0,
                                              double t_end, double dt);

}  // namespace vpfp
