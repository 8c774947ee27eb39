#include <cmath>

#include "doctest.h"
#include "tailbound/fixed_points.hpp"
#include "tailbound/tail_stats.hpp"

using namespace tailbound;

TEST_CASE("series and backward perpetuity samples agree in law") {
  AffineSpec spec;
  const SampleSet series = simulate_perpetuity(spec, 50'000, {}, 1);
  const AffineFamily fam(spec.m_law, spec.q_law);
  const SampleSet back = sample_stationary(fam, Backward{150}, 50'000, 2);
  CHECK(ks_two_sample(series, back).p_value > 0.001);
  CHECK(series.meta().mode == "perpetuity_series");
}

TEST_CASE("deterministic perpetuity sums the geometric series") {
  AffineSpec spec;
  spec.m_law = law::Constant{0.5};
  spec.q_law = law::Constant{1.0};
  const SampleSet s = simulate_perpetuity(spec, 10, {}, 1);
  for (double v : s.values()) CHECK(v == doctest::Approx(2.0).epsilon(1e-11));
}

TEST_CASE("perpetuity series diverges without contraction") {
  AffineSpec spec;
  spec.m_law = law::Constant{1.5};
  CHECK_THROWS(simulate_perpetuity(spec, 10, {100'000, 1e-12}, 1));
}

TEST_CASE("Lindley variant with Q <= r is the law of Q") {
  LindleySpec spec;
  spec.r = 2.0;
  const SampleSet s = simulate_lindley_variant(spec, 50'000, 100, 3);
  std::vector<double> u(50'000);
  for (std::size_t i = 0; i < u.size(); ++i) {
    StepRng r(99, 0, i);
    u[i] = 2.0 * r.uniform();
  }
  CHECK(ks_two_sample(s, SampleSet(std::move(u), {})).p_value > 0.001);
  CHECK(s.sorted().back() <= 2.0);
}

TEST_CASE("Lindley variant has the Cramer tail when Q can exceed r") {
  LindleySpec spec;
  spec.r = 1.0;
  const SampleSet s = simulate_lindley_variant(spec, 400'000, 200, 4);
  const double h = hill(s, 4000).index;
  CHECK(h > 0.85);
  CHECK(h < 1.15);
}

TEST_CASE("degeneracy grid") {
  AffineSpec fixed;
  fixed.m_law = law::Constant{0.5};
  fixed.q_law = law::Constant{0.5};
  const std::vector<double> grid{0.5, 1.0, 2.0};
  const DegeneracyReport d = check_degeneracy(fixed, grid, 1000, 1);
  CHECK(d.degenerate_point);
  CHECK(d.rows[1].p_fixed == 1.0);

  AffineSpec spread;
  const DegeneracyReport ok = check_degeneracy(spread, grid, 10000, 1);
  CHECK_FALSE(ok.degenerate_point);
  CHECK(ok.sufficient_condition_holds);
  for (const auto& row : ok.rows) CHECK(row.p_up > 0.0);
}

TEST_CASE("first-passage lower bound") {
  LindleySpec spec;
  spec.r = 1.0;
  const std::vector<double> t{2.0, 10.0, 50.0};
  const FirstPassageReport rep = first_passage_lower_bound_check(spec, t, 100'000, 5);
  CHECK(rep.all_hold);
  for (const auto& row : rep.rows) {
    CHECK(row.p_q_above_r == doctest::Approx(0.5).epsilon(0.02));
    CHECK(row.lhs >= row.rhs - 3 * std::hypot(row.lhs_se, row.rhs_se));
  }
}
