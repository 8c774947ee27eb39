#include <gmpxx.h>

#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "tailbound/errors.hpp"
#include "tailbound/models/arch.hpp"
#include "tailbound/models/dual_law.hpp"
#include "tailbound/models/logistic.hpp"
#include "tailbound/models/mirek.hpp"
#include "tailbound/models/registry.hpp"
#include "tailbound/models/ricker.hpp"

using namespace tailbound;
using namespace tailbound::models;

TEST_CASE("ARCH W-chain at alpha = 0 is eta^2 (W + beta)") {
  ArchSpec s;
  s.beta = 1.5;
  const ArchWFamily w(s);
  for (double eta : {-2.0, -0.3, 0.0, 0.7, 3.0}) {
    for (double x : {0.0, 0.5, 10.0, 1e6}) {
      double out = 0;
      const double th[1] = {eta};
      w.apply(th, std::span<const double>(&x, 1), std::span<double>(&out, 1));
      CHECK(out == doctest::Approx(eta * eta * (x + 1.5)).epsilon(1e-13));
    }
    const auto c = arch_coefficients(s, eta);
    CHECK(c[0] == doctest::Approx(eta * eta));
    CHECK(c[1] == doctest::Approx(1.5 * eta * eta));
    CHECK(c[2] == doctest::Approx(1.5 * eta * eta));
  }
}

TEST_CASE("ARCH coefficients with alpha > 0") {
  ArchSpec s;
  s.alpha = 0.3;
  s.beta = 2.0;
  s.lambda = 4.0;
  const double eta = -0.8;
  const auto c = arch_coefficients(s, eta);
  CHECK(c[0] == doctest::Approx((0.3 + 2.0 * eta) * (0.3 + 2.0 * eta)));
  CHECK(c[1] == doctest::Approx(2.0 * (eta * eta - 0.3 / 2.0 * 0.8)));
  CHECK(c[2] == doctest::Approx(2.0 * (eta * eta + 0.3 / 2.0 * 0.8)));
  CHECK_THROWS_AS(solve_kappa(arch_factor_law(s)), NotMeanDominated);  // E log (0.3 + 2 eta)^2 > 0
  ArchSpec t;
  t.alpha = 0.3;
  CHECK(solve_kappa(arch_factor_law(t)).kappa == doctest::Approx(oracle::sag_kappa(0.3)).epsilon(1e-6));
}

TEST_CASE("ARCH spec validation") {
  ArchSpec s;
  s.eps_law = law::Uniform{0.0, 1.0};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  ArchSpec z;
  z.eps_law = law::Constant{0.0};
  z.alpha = 0.5;
  // eps = 0: X_n = alpha X_{n-1}, stationary law at 0
  const ArchFamily x(z);
  const Trajectory t = iterate_forward(x, State{4.0}, 200, 1);
  CHECK(std::fabs(t.final_state()[0]) < 1e-50);
}

TEST_CASE("logistic conjugation and absorption") {
  LogisticSpec s;
  s.a_lower = 2.0;
  const LogisticXFamily xf(s);
  const LogisticWFamily wf(s);
  const Trajectory x = iterate_forward(xf, State{0.5}, 500, 3);
  const Trajectory w = iterate_forward(wf, State{2.0}, 500, 3);
  for (std::size_t k = 0; k < w.length(); ++k)
    CHECK(1.0 / x.state(k)[0] == doctest::Approx(w.state(k)[0]).epsilon(1e-12));
  CHECK(logistic_absorption_exits(s, 100'000, 1) == 0);
}

TEST_CASE("logistic boundary and validation") {
  LogisticSpec quarter;
  quarter.xi_law = law::Constant{0.25};
  CHECK(quarter.boundary_case());
  LogisticSpec bad;
  bad.xi_law = law::Uniform{0.1, 1.0};
  CHECK_THROWS(bad.validate());
  LogisticSpec bad_a;
  bad_a.a_lower = 3.0;  // 4 * 0.5 < 3
  CHECK_THROWS(bad_a.validate());
}

TEST_CASE("logistic sandwich") {
  LogisticSpec s;
  s.a_lower = 2.0;
  const SandwichBounds b = logistic_bounds(s);
  const double th[1] = {3.0};
  const Coefficients c = b.coefficients(th);
  CHECK(c.m_lower == 3.0);
  CHECK(c.m_upper == 3.0);
  CHECK(c.q_lower == 3.0);
  CHECK(c.q_upper == doctest::Approx(3.0 * 2.0));
}

TEST_CASE("embedded logistic chain") {
  LogisticSpec geo;
  geo.xi_law = law::TwoPoint{0.3, 3.0, 0.8};
  const EmbeddedReport r = logistic_embedded(geo, 20'000, 4, 100);
  // sigma is geometric with success 0.2
  CHECK(r.sigma_mean == doctest::Approx(5.0).epsilon(0.05));
  CHECK(r.lower_violations == 0);
  CHECK(r.upper_violations == 0);
  CHECK(r.unweighted_lower_violations > 0);
  CHECK(r.w_star.sorted().front() >= 2.0);

  LogisticSpec half;  // xi >= 1/2 a.s.
  const EmbeddedReport one = logistic_embedded(half, 5000, 5, 50);
  CHECK(one.sigma_max == 1);
  CHECK(one.sigma_mean == 1.0);
}

TEST_CASE("Ricker conjugation, validity and degeneracy") {
  RickerSpec s;
  s.a_lower = 1.35;
  const RickerXFamily xf(s);
  const RickerWFamily wf(s);
  const Trajectory x = iterate_forward(xf, State{1.0 / 1.35}, 500, 3);
  const Trajectory w = iterate_forward(wf, State{1.35}, 500, 3);
  for (std::size_t k = 0; k < w.length(); ++k)
    CHECK(1.0 / x.state(k)[0] == doctest::Approx(w.state(k)[0]).epsilon(1e-12));
  CHECK(ricker_absorption_exits(s, 100'000, 1) == 0);

  RickerSpec hump = s;
  hump.gamma_law = law::Constant{3.0};
  CHECK(ricker_validity_gap(hump, 5.0) <= 0.0);
  CHECK_THROWS_AS(ricker_bounds(hump, 1.0), std::invalid_argument);

  RickerSpec flat;
  flat.gamma_law = law::Constant{0.0};
  CHECK(flat.gamma_degenerate());
  RickerSpec bad;
  bad.a_lower = 2.0;  // rho e = 0.5 e < 2
  CHECK_THROWS(bad.validate());
}

TEST_CASE("Ricker G_r validity against direct maximisation") {
  for (double g : {1.0, 3.0, 6.0}) {
    RickerSpec s;
    s.gamma_law = law::Constant{g};
    s.a_lower = 1.35;
    for (double r : {0.2, 1.0, 2.0, 3.0, 5.0, 50.0}) {
      // max over [a, r gamma] of x e^{gamma/x}; beta cancels
      const double lo = 1.35, hi = r * g;
      bool valid = true;
      if (hi > lo) {
        double best = 0.0;
        for (int i = 0; i <= 200000; ++i) {
          const double x = lo + (hi - lo) * i / 200000.0;
          best = std::max(best, x * std::exp(g / x));
        }
        valid = best <= hi * std::exp(g / hi) * (1 + 1e-12);
      }
      INFO("gamma " << g << " r " << r);
      CHECK((ricker_validity_gap(s, r) <= 0.0) == valid);
    }
  }
}

TEST_CASE("Mirek rotations and radial perturbation") {
  MirekSpec s;
  const RotationCheck rc = mirek_rotation_check(s, 20'000, 1);
  CHECK(rc.max_norm_error < 1e-12);
  CHECK(rc.max_orthogonality_error < 1e-12);
  MirekSpec s3 = s;
  s3.dim = 3;
  CHECK(mirek_rotation_check(s3, 5000, 2).max_orthogonality_error < 1e-12);

  const MirekFamily f(s);
  std::vector<double> th(f.env_dim()), x(2), y(2);
  for (int i = 0; i < 2000; ++i) {
    StepRng rng(8, 0, i);
    f.sample_env(rng, th);
    f.sample_point(rng, x);
    f.apply(th, x, y);
    const double nx = std::hypot(x[0], x[1]), ny = std::hypot(y[0], y[1]);
    CHECK(ny >= th[0] * nx + f.q_prime_of(th) - 1e-9 * ny);
    CHECK(ny <= th[0] * nx + f.q_of(th) + 1e-9 * ny);
    CHECK(ny >= 1.0);
  }
  CHECK(solve_kappa(mirek_factor_law(s)).kappa == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("dual law exact arithmetic against rationals") {
  ExactStepper st;
  ExactState s;
  mpq_class x = 0;
  for (int k = 0; k < 3000; ++k) {
    StepRng r(5, 0, k);
    const bool third = r.uniform() < 0.6;
    st.step(s, third);
    x = (third ? mpq_class(1, 3) : mpq_class(2)) * x + 3;
    x.canonicalize();
    REQUIRE(s.canonical());
    mpq_class v = s.m;
    mpz_class p3;
    mpz_ui_pow_ui(p3.get_mpz_t(), 3, static_cast<unsigned long>(std::labs(s.n)));
    if (s.n >= 0)
      v *= p3;
    else
      v /= p3;
    v.canonicalize();
    REQUIRE(v == x);
  }
  ExactState a;
  st.step(a, true);
  CHECK(a.m == 1);
  CHECK(a.n == 1);  // 0 -> 3
  st.step(a, false);
  CHECK(a.m == 1);
  CHECK(a.n == 2);  // 3 -> 9
  st.step(a, true);
  CHECK(a.m == 2);
  CHECK(a.n == 1);  // 9 -> 6
}

TEST_CASE("dual law closure and bounds") {
  DualLawSpec s;
  const ClosureReport c = exact_closure_check(s, 20'000, 1);
  CHECK(c.violations == 0);
  CHECK(c.checks >= 20);
  const SandwichBounds b = dual_law_bounds(s);
  const double th[2] = {2.0, 0.4};
  const Coefficients k = b.coefficients(th);
  CHECK(k.q_lower == 0.4);
  CHECK(k.q_upper == 3.0);
  CHECK(solve_kappa(dual_law_factor_law(s)).kappa == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("registry") {
  for (const auto& id : model_ids()) CHECK_NOTHROW(make_model(id, nlohmann::json::object()));
  CHECK_THROWS_AS(make_model("nope", {}), std::invalid_argument);
  CHECK(make_model("arch", {}).index_scale == 2.0);
  CHECK_THROWS_AS(make_model("logistic", {{"xi", 0.1}}), std::invalid_argument);
}
