#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "tailbound/cramer.hpp"
#include "tailbound/errors.hpp"

using namespace tailbound;

TEST_CASE("two-point roots agree with bisection") {
  const double cases[][3] = {{0.5, 3.0, 0.8}, {0.3, 3.0, 0.8}, {0.2, 1.5, 0.5}, {0.9, 4.0, 0.95}};
  for (const auto& c : cases) {
    const CramerSolution s = solve_kappa(FactorLaw::two_point(c[0], c[1], c[2]));
    CHECK(s.method == "closed_form");
    CHECK(s.kappa == doctest::Approx(oracle::two_point_kappa(c[0], c[1], c[2])).epsilon(1e-10));
    CHECK(std::fabs(s.phi_at_kappa - 1.0) < 1e-10);
    CHECK(s.mu_kappa > 0.0);
  }
}

TEST_CASE("tilted mean of the two-point law") {
  // kappa = 1: mu = 0.8 * 0.5 log 0.5 + 0.2 * 3 log 3
  const CramerSolution s = solve_kappa(FactorLaw::two_point(0.5, 3.0, 0.8));
  CHECK(s.kappa == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.mu_kappa == doctest::Approx(0.4 * std::log(0.5) + 0.6 * std::log(3.0)).epsilon(1e-9));
}

TEST_CASE("lognormal root is -2 mu / sigma^2") {
  CHECK(solve_kappa(FactorLaw::lognormal(-1.0, 1.0)).kappa == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(solve_kappa(FactorLaw::lognormal(-0.5, 1.0)).kappa == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(solve_kappa(FactorLaw::lognormal(-0.3, 0.5)).kappa == doctest::Approx(2.4).epsilon(1e-10));
}

TEST_CASE("squared affine Gaussian against Simpson quadrature") {
  CHECK(solve_kappa(FactorLaw::squared_affine_gaussian(0.0, 1.0)).kappa == doctest::Approx(1.0).epsilon(1e-9));
  const double k = solve_kappa(FactorLaw::squared_affine_gaussian(0.3, 1.0)).kappa;
  CHECK(k == doctest::Approx(oracle::sag_kappa(0.3)).epsilon(1e-6));
  CHECK(oracle::sag_moment(0.3, k) == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("phi on an empirical law is exact") {
  const FactorLaw l = FactorLaw::empirical({0.5, 0.5, 0.5, 0.5, 3.0});
  const PhiValue v = phi(l, 2.0);
  CHECK(v.value == doctest::Approx((4 * 0.25 + 9.0) / 5.0).epsilon(1e-14));
  CHECK(v.se == 0.0);
}

TEST_CASE("Monte Carlo phi path") {
  SolveOptions o;
  o.phi.method = PhiMethod::MonteCarlo;
  o.phi.mc_samples = 1'000'000;
  o.phi.seed = 3;
  const CramerSolution s = solve_kappa(FactorLaw::two_point(0.5, 3.0, 0.8), o);
  CHECK(s.method == "monte_carlo");
  CHECK(std::fabs(s.kappa - 1.0) < 0.02);
  CHECK(s.phi_se > 0.0);
}

TEST_CASE("non-existence is classified") {
  CHECK_THROWS_AS(solve_kappa(FactorLaw::two_point(0.5, 0.9, 0.5)), NoCramerIndex);
  CHECK_THROWS_AS(solve_kappa(FactorLaw::two_point(0.5, 3.0, 0.3)), NotMeanDominated);
  CHECK_THROWS_AS(solve_kappa(FactorLaw::two_point(1.0, 1.0, 0.5)), DegenerateFactor);
  CHECK_THROWS_AS(FactorLaw::two_point_strict(0.5, 0.9, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(FactorLaw::from_json({{"kind", "weird"}}), std::invalid_argument);
}

TEST_CASE("Goldie constant vanishes when Psi(X) = M X") {
  const CramerSolution s = solve_kappa(FactorLaw::two_point(0.5, 3.0, 0.8));
  std::vector<double> x{1.0, 2.0, 5.0, 0.1};
  const GoldieConstants g = goldie_constants(x, x, s);
  CHECK(g.c_plus.value == 0.0);
}

TEST_CASE("Goldie constant of a shifted pair") {
  // Psi(X) = M X + 1 with X = 0 a.s.: C+ = 1 / (kappa mu)
  const CramerSolution s = solve_kappa(FactorLaw::two_point(0.5, 3.0, 0.8));
  std::vector<double> psi(1000, 1.0), mx(1000, 0.0);
  const GoldieConstants g = goldie_constants(psi, mx, s);
  CHECK(g.c_plus.value == doctest::Approx(1.0 / (s.kappa * s.mu_kappa)).epsilon(1e-12));
}

TEST_CASE("nonarithmetic declarations round-trip") {
  const auto l = FactorLaw::from_json({{"kind", "two_point"}, {"a", 0.5}, {"b", 3}, {"p", 0.8}, {"nonarithmetic", "declared"}});
  CHECK(l.nonarithmetic() == Nonarithmetic::Declared);
  CHECK(solve_kappa(l).nonarithmetic == Nonarithmetic::Declared);
  CHECK(nonarithmetic_from_json(nlohmann::json::object()) == Nonarithmetic::Unknown);
}
