#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "vpfp/hermite.hpp"
#include "vpfp/macro_ops.hpp"

namespace vpfp {

// Largest step accepted by the steppers: min of 0.4 eps dx / sqrt(2K) and 2.8 eps / |T|.
double max_stable_dt(const OperatorSet& ops, double eps);

// Strang splitting: exact collision half step, RK4 transport, exact collision half step.
// The parabolic form is integrated, dh/dt = (-T h + L h / eps) / eps.
class Stepper {
 public:
  Stepper(const OperatorSet& ops, bool nonlinear);

  // In place. Throws StabilityError before touching h, BlowUpError on non-finite output.
  void advance(PhaseState& h, double dt);
  bool nonlinear() const { return nonlinear_; }
  // Sum of the rounding drift of the weighted average removed after each step.
  double removed_drift() const { return drift_; }

 private:
  void rhs(const PhaseState& y, PhaseState& out);
  void collide(PhaseState& h, double dt) const;

  const OperatorSet& ops_;
  bool nonlinear_;
  double drift_ = 0.0;
  PhaseState k1_, k2_, k3_, k4_, tmp_;
};

PhaseState step_linear(const OperatorSet& ops, const PhaseState& h, double dt, double eps);
// eps = 1 only; requires 1 + h >= -1e-8 on the velocity lattice.
PhaseState step_nonlinear(const OperatorSet& ops, const PhaseState& h, double dt);

// Q[h] = psi_h' (d_v h - v h): mode k receives m sqrt(k) c_{k-1}, with m = -psi_h'.
// Odd modes average c_{k-1} to faces, even modes average m c_{k-1} to nodes.
PhaseState apply_Q(const OperatorSet& ops, const PhaseState& h);

// K-point Gauss-Hermite collocation lattice in v times the grid nodes (values and
// coefficients are in bijection); odd modes are averaged to the nodes.
class VelocityLattice {
 public:
  explicit VelocityLattice(const HermiteBasis& basis, int points = 0);

  int points() const { return static_cast<int>(rule_.nodes.size()); }
  double node(int j) const { return rule_.nodes[j]; }
  double weight(int j) const { return rule_.weights[j]; }
  // values(j, i) = h(x_i, v_j)
  Eigen::MatrixXd values(const PhaseState& h) const;
  Eigen::MatrixXd v_derivative(const PhaseState& h) const;

 private:
  Eigen::MatrixXd nodal(const PhaseState& h) const;
  GaussHermite rule_;
  Eigen::MatrixXd H_;   // H_(j, k) = H_k(v_j)
  Eigen::MatrixXd dH_;  // derivative in v
};

struct LatticeMinimum {
  double value = 0.0;  // min of 1 + h
  double x = 0.0;
  double v = 0.0;
};
LatticeMinimum lattice_minimum(const VelocityLattice& lattice, const PhaseState& h);

double evaluate_H_delta(const MacroOperator& macro, const PhaseState& h, double delta);

// Pieces of -dH_delta/dt for dh/dt = (-T h + L h / eps) / eps.
struct DissipationTerms {
  double L_term = 0.0;    // -<Lh, h>
  double ATPi = 0.0;      // <A T Pi h, h>
  double TA = 0.0;        // <T A h, h>
  double ATperp = 0.0;    // <A T (Id - Pi) h, h>
  double AL = 0.0;        // <A L h, h>
  double total = 0.0;
};
DissipationTerms dissipation_terms(const MacroOperator& macro, const PhaseState& h, double delta,
                                   double eps = 1.0);

struct FreeEnergy {
  double free_energy = 0.0;
  double fisher = 0.0;
  double psi_prime_sup = 0.0;
};
FreeEnergy nonlinear_free_energy(const VelocityLattice& lattice, const PhaseState& h);
FreeEnergy nonlinear_free_energy(const OperatorSet& ops, const PhaseState& h);

enum class RunMode { linear, parabolic, nonlinear };
const char* to_string(RunMode m);

enum class ProfileKind { gaussian_bump, mode_seed, random };
const char* to_string(ProfileKind k);

struct InitialProfile {
  ProfileKind kind = ProfileKind::gaussian_bump;
  double x0 = 0.5;
  double sigma = 0.5;
  int mode = 0;             // gaussian_bump: mode carrying the bump
  int k = 0;                // mode_seed: mode index
  double wavenumber = 1.0;  // mode_seed: cos(wavenumber x)
  std::uint64_t seed = 1;   // random
  double amplitude = 1.0;
};

// Profile placed in the requested mode and projected to zero average.
PhaseState make_initial_state(const OperatorSet& ops, const InitialProfile& p, double eps = 1.0);

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct TimeSeriesRecord {
  double t = 0.0;
  double norm_sq = 0.0;
  double H_delta = 0.0;
  double D_delta = kNaN;
  double free_energy = kNaN;
  double fisher = kNaN;
  double psi_prime_sup = 0.0;
  double mass_defect = 0.0;
  // Extra monitors.
  double macro_norm_sq = 0.0;    // |Pi h|^2
  double micro_dissipation = 0.0;  // -<Lh, h>
  double q_pairing = kNaN;       // <Q[h], h>
  double q_bound = kNaN;         // c |psi'|_inf sqrt(-<Lh,h>) |Pi h|
  double closure_ratio = 0.0;    // energy in the last two modes over the L2 energy
  double outer_mass_ratio = 0.0; // share of |rho_h| in the outer 10% of the grid
  std::optional<DissipationTerms> terms;
};

struct SimulationParams {
  RunMode mode = RunMode::linear;
  double eps = 1.0;
  double delta = 0.0;
  double dt = 0.0;  // 0 picks 0.9 of max_stable_dt
  double t_end = 10.0;
  int record_every = 10;
  InitialProfile profile;
  bool verbose_dissipation = false;
  std::optional<PhaseState> initial;  // overrides profile
  double c_nonlinear = 1.0 + 2.449489742783178;  // 1 + sqrt(2(d+2)), d = 1
};

struct SimulationResult {
  std::vector<TimeSeriesRecord> series;
  PhaseState final_state;
  double dt = 0.0;
  int steps = 0;
  int clip_events = 0;
  double steady_tail_mass = 0.0;  // rho_star mass in the outer 10% of the grid
  bool boundary_flag = false;     // steady_tail_mass > 1e-8
  double max_closure_ratio = 0.0;
  std::string error;              // empty on success
};

SimulationResult simulate(const MacroOperator& macro, const SimulationParams& params);

// (t, norm_sq, ...) as CSV with the monitor columns; empty fields for NaN.
void write_series_csv(const std::vector<TimeSeriesRecord>& series, const std::string& path);
void write_nonlinear_csv(const std::vector<TimeSeriesRecord>& series, const std::string& path);
void write_dissipation_csv(const std::vector<TimeSeriesRecord>& series, const std::string& path);

}  // namespace vpfp
