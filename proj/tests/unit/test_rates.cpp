#include <cmath>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "vpfp/errors.hpp"

using namespace vpfp;
using testing::reference;
namespace oracle = testing::oracle;

TEST_CASE("delta_star examples") {
  CHECK(compute_delta_star(1, 1, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(compute_delta_star(0.1, 10, 10) == doctest::Approx(4.0 / 1140.0).epsilon(1e-14));
  CHECK(compute_delta_star(5, 1, 0) == 2.0);
  CHECK_THROWS_AS(compute_delta_star(0, 1, 1), DomainError);
  CHECK_THROWS_AS(compute_delta_star(1, 1, -1), DomainError);
}

TEST_CASE("decay rate examples") {
  CHECK(compute_decay_rate(1, 1, 1, 0.5) == doctest::Approx(2.0 / 15.0 * (7 - std::sqrt(34.0))).epsilon(1e-10));
  CHECK(compute_decay_rate(1, 1, 1, 1e-9) <= 1e-8);
  // small C_M: the smaller root of h, just below the cap 2(1 - 0.9) = 0.2
  const double l = compute_decay_rate(1, 10, 0.01, 0.9);
  CHECK(l == doctest::Approx(oracle::decay_rate(1, 10, 0.01, 0.9)).epsilon(1e-9));
  CHECK(l == doctest::Approx(0.19360).epsilon(1e-4));
  CHECK(l < 0.2);
  CHECK(rate_discriminant(1, 10, 0.01, 0.9, l) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(oracle::form_min_eig(1, 10, 0.01, 0.9, l * (1 - 1e-9)) >= 0.0);
  CHECK_THROWS_AS(compute_decay_rate(1, 1, 1, 0.7), DomainError);
}

TEST_CASE("decay rate agrees with the 2x2 eigenvalue oracle on seeded constants") {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> U(0.05, 5.0), F(0.05, 0.95);
  for (int t = 0; t < 200; ++t) {
    const double lM = U(gen), C = U(gen);
    const double ds = compute_delta_star(1.0, lM, C);
    CHECK(ds == doctest::Approx(oracle::delta_star(1.0, lM, C)).epsilon(1e-15));
    const double d = F(gen) * ds;
    const double l = compute_decay_rate(1.0, lM, C, d);
    CHECK(l == doctest::Approx(oracle::decay_rate(1.0, lM, C, d)).epsilon(1e-8));
    CHECK(quadratic_form_scan(1.0, lM, C, d, l) >= -1e-12);
  }
}

TEST_CASE("form scan confirms the (1,1,1,0.5) rate is sharp") {
  const double l = compute_decay_rate(1, 1, 1, 0.5);
  CHECK(quadratic_form_scan(1, 1, 1, 0.5, l) >= -1e-12);
  CHECK(quadratic_form_scan(1, 1, 1, 0.5, 1.05 * l) < 0.0);
  CHECK(quadratic_form_scan(1, 1, 1, 0.5, l) == doctest::Approx(oracle::form_min_eig(1, 1, 1, 0.5, l)).epsilon(1e-3));
}

TEST_CASE("eps scaling examples") {
  const auto a = compute_eps_scaled(1, 1, 1, 0.1);
  CHECK(a.delta_eps == doctest::Approx(0.4 / 2.04).epsilon(1e-14));
  CHECK(a.zeta == doctest::Approx(1.0));
  CHECK(a.eta == doctest::Approx(0.25));
  CHECK(compute_eps_scaled(1, 1, 1, 1).delta_eps == doctest::Approx(2.0 / 3.0));
  const auto s = compute_eps_scaled(1, 1, 1, 1e-4);
  CHECK(std::abs(s.delta_eps / 1e-4 - 2 * s.zeta) <= 1e-6);
  for (double e : {1.0, 0.3, 0.1, 0.03})
    CHECK(compute_eps_scaled(1, 1, 1, e).delta_eps == doctest::Approx(4 * e / (4 * e * e + 2)).epsilon(1e-14));
}

TEST_CASE("certify_rate policies") {
  const auto h = certify_rate(1.6, 1.5, CMMethod::direct_operator_norm, DeltaPolicy::half_delta_star);
  CHECK(h.chosen_delta == doctest::Approx(0.5 * h.delta_star));
  CHECK(h.lambda == doctest::Approx(compute_decay_rate(1, 1.6, 1.5, h.chosen_delta)));
  CHECK(h.c_nonlinear() == doctest::Approx(1 + std::sqrt(6.0)));
  const auto o = certify_rate(1.6, 1.5, CMMethod::direct_operator_norm, DeltaPolicy::optimize);
  CHECK(o.lambda >= h.lambda);
  // optimum against a dense scan
  double best = 0.0;
  for (int i = 1; i < 2000; ++i) best = std::max(best, compute_decay_rate(1, 1.6, 1.5, o.delta_star * i / 2000));
  CHECK(o.lambda == doctest::Approx(best).epsilon(1e-4));
  const auto e = certify_rate(1.6, 1.5, CMMethod::direct_operator_norm, DeltaPolicy::explicit_value, 0.1);
  CHECK(e.chosen_delta == 0.1);
  CHECK_THROWS(certify_rate(1.6, 1.5, CMMethod::direct_operator_norm, DeltaPolicy::explicit_value, 5.0));
}

TEST_CASE("Poincare constant of the quadratic in the zero-coupling limit") {
  const auto s = testing::steady(2.0, 1e-6, 256, 8.0);
  const double c = estimate_lambda_M(*s);
  const double ref = oracle::sturm_liouville_gap([](double x) { return x * x; }, 256, 8.0);
  CHECK(ref == doctest::Approx(2.0).epsilon(0.02));
  CHECK(c == doctest::Approx(2.0).epsilon(0.02));
  CHECK(c == doctest::Approx(ref).epsilon(0.02));
  CHECK(c > 0.0);
  // Richardson over three grids
  const double a = estimate_lambda_M(*testing::steady(2.0, 1e-6, 64, 8.0));
  const double b = estimate_lambda_M(*testing::steady(2.0, 1e-6, 128, 8.0));
  CHECK(std::log2(std::abs(a - b) / std::abs(b - c)) >= 1.8);
  CHECK(std::abs(b - c) / c < 0.01);
  // same constant as the weighted Poincare with unit weights
  CHECK(weighted_poincare(*s, Vec::Ones(255), Vec::Ones(256)) == doctest::Approx(c).epsilon(1e-6));
}

TEST_CASE("C_M estimates") {
  const auto& r = reference();
  const auto a = estimate_C_M_direct(r.macro, 7);
  const auto b = estimate_C_M_direct(r.macro, 7);
  CHECK(a.value == b.value);
  CHECK(a.value >= 0.5);
  // mode-1 trial state: |A L h| / |(Id - Pi) h| is at most 1/2
  PhaseState m1 = r.ops.zero_state();
  for (int f = 0; f < 127; ++f) m1(1, f) = std::sin(0.05 * f) * std::sqrt(r.s->rho_face[f]);
  const double ratio = std::sqrt(norm_sq(r.macro.apply_A_state(r.ops.apply_L(m1))) / norm_sq(m1));
  CHECK(ratio <= 0.5 + 1e-12);
  const auto chain = estimate_chain_constants(*r.s, r.s->grid);
  CHECK(chain.C_M_bound >= a.value);
  CHECK(estimate_C_M(r.macro, CMMethod::chain_bound, &chain) == doctest::Approx(chain.C_M_bound));
  CHECK(estimate_C_M(r.macro, CMMethod::direct_operator_norm) == doctest::Approx(a.value).epsilon(1e-5));
}

TEST_CASE("chain constants") {
  const auto tiny = testing::steady(2.0, 1e-6, 128, 8.0);
  const auto ct = estimate_chain_constants(*tiny, tiny->grid);
  CHECK(ct.kappa1 <= 1e-10);
  const auto& r = reference();
  const auto c = estimate_chain_constants(*r.s, r.s->grid);
  CHECK(c.K_gradient == 1.0 + 2.0 * r.s->rho.maxCoeff());
  for (double v : {c.C_star, c.C, c.Lambda_star, c.Lambda_circ, c.kappa1, c.kappa2, c.kappa3, c.kappa4, c.kappa,
                   c.lambda_chain, c.C_M_bound}) {
    CHECK(std::isfinite(v));
    CHECK(v > 0.0);
  }
  CHECK(c.C_circ >= 0.0);
  CHECK(c.C_star == doctest::Approx(estimate_lambda_M(*r.s)).epsilon(1e-6));
}

TEST_CASE("macroscopic gap is positive") {
  const auto& r = reference();
  const double g = macroscopic_gap(r.macro);
  CHECK(g > 0.0);
  CHECK(g == doctest::Approx(1.99359).epsilon(1e-4));
}
