#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "vpfp/errors.hpp"
#include "vpfp/potential.hpp"

using namespace vpfp;

TEST_CASE("power law values and derivatives") {
  const auto p2 = PotentialSpec::power_law(2.0, 8.0).eval(2.0);
  CHECK(p2.V == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(p2.dV == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(p2.d2V == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_FALSE(p2.singular_origin);

  const auto p3 = PotentialSpec::power_law(3.0, 8.0).eval(-1.0);
  CHECK(p3.V == doctest::Approx(1.0));
  CHECK(p3.dV == doctest::Approx(-3.0));
  CHECK(p3.d2V == doctest::Approx(6.0));

  const auto p15 = PotentialSpec::power_law(1.5, 8.0).eval(0.0);
  CHECK(p15.V == 0.0);
  CHECK(p15.dV == 0.0);
  CHECK(p15.singular_origin);
}

TEST_CASE("power law derivatives match centred differences on seeded points") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> A(1.5, 4.0), Xs(-6.0, 6.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double alpha = A(gen);
    double x = Xs(gen);
    if (std::abs(x) < 0.1) x += 0.5;
    const auto spec = PotentialSpec::power_law(alpha, 8.0);
    const double e = 1e-5;
    const auto p = spec.eval(x);
    const double dV = (spec.eval(x + e).V - spec.eval(x - e).V) / (2 * e);
    const double d2V = (spec.eval(x + e).dV - spec.eval(x - e).dV) / (2 * e);
    CHECK(p.V == doctest::Approx(std::pow(std::abs(x), alpha)).epsilon(1e-12));
    CHECK(p.dV == doctest::Approx(dV).epsilon(1e-7));
    CHECK(p.d2V == doctest::Approx(d2V).epsilon(1e-6));
    CHECK(eval_potential(spec, -x).V == doctest::Approx(p.V));
  }
}

TEST_CASE("Schrodinger potential of the quadratic") {
  const auto spec = PotentialSpec::power_law(2.0, 8.0);
  for (double x : {0.3, 1.0, 2.5, -4.0}) CHECK(schrodinger_potential(spec, x) == doctest::Approx(x * x - 1.0));
}

TEST_CASE("probe grid radii") {
  const auto g = ProbeGrid::for_radius(8.0);
  const auto r = g.radii();
  REQUIRE(r.size() == 5);
  CHECK(r.back() == doctest::Approx(8.0));
  CHECK(r.front() == doctest::Approx(0.5));
  for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i] == doctest::Approx(2 * r[i - 1]));
}

TEST_CASE("quadratic confinement is admissible, V3a witness is x^2 - 1") {
  const auto rep = check_confinement_assumptions(PotentialSpec::power_law(2.0, 8.0), 1.0, ProbeGrid::for_radius(8.0));
  CHECK(rep.admissible());
  const auto& v3a = rep.at("V3a");
  CHECK(v3a.verdict == Verdict::pass);
  for (std::size_t i = 0; i < v3a.radii.size(); ++i)
    CHECK(v3a.witness[i] == doctest::Approx(v3a.radii[i] * v3a.radii[i] - 1.0));
  CHECK(rep.sigma_V == doctest::Approx(15.0));  // min of x^2 - 1 over [4, 8]
  CHECK(rep.Lambda_V == doctest::Approx(0.5 * (256.0 - 2.0) / 256.0));
}

TEST_CASE("cubic confinement passes every check") {
  const auto rep = check_confinement_assumptions(PotentialSpec::power_law(3.0, 8.0), 1.0, ProbeGrid::for_radius(8.0));
  for (const auto& e : rep.entries) {
    INFO(e.name);
    CHECK(e.verdict == Verdict::pass);
  }
  CHECK(rep.admissible());
}

TEST_CASE("linear confinement with M = 2 is rejected") {
  const auto rep = check_confinement_assumptions(PotentialSpec::power_law(1.0, 8.0), 2.0, ProbeGrid::for_radius(8.0));
  CHECK_FALSE(rep.admissible());
  const auto& v4 = rep.at("V4");
  // (M - 2V')^2 - 2V'' = 0 on the tail
  for (double w : v4.witness) CHECK(w == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(v4.verdict != Verdict::pass);
  CHECK(rep.at("V1").verdict == Verdict::fail);
}

TEST_CASE("quadratic V5 witness 6V''/V'^2 = 3/x^2") {
  const auto rep = check_confinement_assumptions(PotentialSpec::power_law(2.0, 8.0), 1.0, ProbeGrid::for_radius(8.0));
  const auto& v5 = rep.at("V5");
  for (std::size_t i = 0; i < v5.radii.size(); ++i)
    CHECK(v5.witness[i] == doctest::Approx(3.0 / (v5.radii[i] * v5.radii[i])));
  // X = 5 puts the last probes too close to the origin
  const auto rep5 = check_confinement_assumptions(PotentialSpec::power_law(2.0, 5.0), 1.0, ProbeGrid::for_radius(5.0));
  CHECK(rep5.at("V5").verdict != Verdict::pass);
}

TEST_CASE("tabulated potential reproduces a sampled quartic") {
  std::vector<double> x, v;
  for (int i = 0; i <= 400; ++i) {
    x.push_back(-8.0 + 16.0 * i / 400);
    v.push_back(std::pow(x.back(), 4));
  }
  const auto spec = PotentialSpec::tabulated(x, v, 8.0);
  CHECK(spec.family() == PotentialFamily::tabulated);
  for (double y : {-5.3, -1.1, 0.27, 3.9}) {
    const auto p = spec.eval(y);
    CHECK(p.V == doctest::Approx(std::pow(y, 4)).epsilon(1e-3));
    CHECK(p.dV == doctest::Approx(4 * y * y * y).epsilon(2e-2));
  }
  const auto path = std::filesystem::temp_directory_path() / "vpfp_table_test.txt";
  {
    std::ofstream out(path);
    out << "# x V\n";
    for (std::size_t i = 0; i < x.size(); ++i) out << x[i] << ' ' << v[i] << '\n';
  }
  const auto loaded = PotentialSpec::load_table(path, 8.0);
  CHECK(loaded.eval(1.7).V == doctest::Approx(spec.eval(1.7).V).epsilon(1e-6));
  std::filesystem::remove(path);
}

TEST_CASE("invalid inputs") {
  CHECK_THROWS_AS(check_confinement_assumptions(PotentialSpec::power_law(2.0, 8.0), -1.0, ProbeGrid::for_radius(8.0)),
                  DomainError);
  CHECK_THROWS_AS(check_confinement_assumptions(PotentialSpec::power_law(2.0, 4.0), 1.0, ProbeGrid::for_radius(8.0)),
                  DomainError);
  CHECK_THROWS_AS(PotentialSpec::tabulated({0.0, 1.0, 0.5}, {0.0, 1.0, 2.0}, 1.0), DomainError);
  CHECK_THROWS(check_confinement_assumptions(PotentialSpec::power_law(2.0, 8.0), 1.0, ProbeGrid::for_radius(8.0)).at("V9"));
}
