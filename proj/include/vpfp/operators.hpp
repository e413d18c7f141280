#pragma once

#include <memory>

#include "vpfp/hermite.hpp"
#include "vpfp/phase_state.hpp"

namespace vpfp {

// Discrete T, L, Pi on the staggered Hermite/position grid.
//
// Mode k-1 feeds mode k through sqrt(k) X_k and mode k+1 feeds mode k through
// -sqrt(k+1) X_{k+1}^*, where X_k is the node-to-face difference G for odd k and
// the face-to-node difference D for even k; adjoints are taken in the rho- and
// rho_face-weighted products, so T is exactly skew in the discrete scalar product.
class OperatorSet {
 public:
  OperatorSet(std::shared_ptr<const SteadyState> steady, const HermiteBasis& basis);

  const SteadyState& steady() const { return *steady_; }
  const std::shared_ptr<const SteadyState>& steady_ptr() const { return steady_; }
  const HermiteBasis& basis() const { return basis_; }
  int modes() const { return basis_.size(); }

  PhaseState zero_state(double eps = 1.0) const;

  PhaseState apply_T(const PhaseState& h) const;
  // out = T h; out must live in the same space as h.
  void apply_T_into(const PhaseState& h, PhaseState& out) const;
  PhaseState apply_L(const PhaseState& h) const;
  PhaseState apply_Pi(const PhaseState& h) const;

  // Node-to-face gradient G (size N-1 out).
  Vec grad(const Vec& u) const;
  // Weighted adjoint of G, about -(1/rho)(rho c)'.
  Vec grad_adjoint(const Vec& c) const;
  // Face-to-node difference D.
  Vec div(const Vec& c) const;
  // Weighted adjoint of D, about -(u' - W'u).
  Vec div_adjoint(const Vec& u) const;

  // Upper estimate of the operator norm of T in the scalar product.
  double transport_norm() const { return t_norm_; }
  // |<Th, h>| / ||h||^2 on a fixed pseudo-random probe; zero up to rounding.
  double symmetrization_defect() const { return sym_defect_; }

 private:
  void check(const PhaseState& h) const;

  std::shared_ptr<const SteadyState> steady_;
  HermiteBasis basis_;
  Vec g_lo_, g_hi_;  // G^* stencil: (g_lo c_{i-1/2} - g_hi c_{i+1/2})
  Vec d_lo_, d_hi_;  // D^* stencil: (d_lo u_i - d_hi u_{i+1})
  double t_norm_ = 0.0;
  double sym_defect_ = 0.0;
};

// Pre: steady residual below 1e-4.
OperatorSet build_operators(std::shared_ptr<const SteadyState> steady, const HermiteBasis& basis);

}  // namespace vpfp
