#include <cmath>
#include <cstdlib>
#include <vector>

#include "doctest.h"
#include "tailbound/errors.hpp"
#include "tailbound/ifs.hpp"
#include "tailbound/models/registry.hpp"
#include "tailbound/rng.hpp"

using namespace tailbound;

TEST_CASE("philox4x32-10 known answers") {
  // Random123 kat_vectors
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("step rng replays and stays in (0, 1)") {
  StepRng a(42, 3, 17), b(42, 3, 17), c(42, 3, 18);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    differs = differs || u != c.uniform();
  }
  CHECK(differs);

  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    StepRng r(1, 0, i);
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::fabs(s / n) < 5.0 / std::sqrt(n));
  CHECK(std::fabs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("backward iteration composes the forward environments in reverse") {
  const AffineFamily fam(law::TwoPoint{0.5, 3.0, 0.8}, law::Uniform{0.0, 1.0});
  const std::size_t n = 12;
  const State start{0.7};
  std::vector<std::array<double, 2>> th(n);
  for (std::size_t k = 0; k < n; ++k) draw_env(fam, 9, 4, k, th[k]);

  // forward: Psi_n o ... o Psi_1
  double f = start[0];
  for (std::size_t k = 0; k < n; ++k) f = th[k][0] * f + th[k][1];
  // backward: Psi_1 o ... o Psi_n
  double b = start[0];
  for (std::size_t k = n; k-- > 0;) b = th[k][0] * b + th[k][1];

  const Trajectory fw = iterate_forward(fam, start, n, 9, 4);
  const Trajectory bw = iterate_backward(fam, start, n, 9, 4);
  CHECK(fw.length() == n + 1);
  CHECK(fw.final_state()[0] == doctest::Approx(f).epsilon(1e-14));
  CHECK(bw.final_state()[0] == doctest::Approx(b).epsilon(1e-14));

  std::vector<double> out(1);
  backward_final(fam, start, n, 9, 4, out);
  CHECK(out[0] == bw.final_state()[0]);
  forward_final(fam, start, n, 9, 4, out);
  CHECK(out[0] == fw.final_state()[0]);
}

TEST_CASE("samples do not depend on the thread count") {
  const AffineFamily fam(law::TwoPoint{0.5, 3.0, 0.8}, law::Constant{1.0});
  const SampleSet a = sample_stationary(fam, Backward{80}, 20000, 5);
  setenv("TAILBOUND_THREADS", "1", 1);
  const SampleSet b = sample_stationary(fam, Backward{80}, 20000, 5);
  unsetenv("TAILBOUND_THREADS");
  CHECK(a.values() == b.values());
  CHECK(a.to_csv() == b.to_csv());
}

TEST_CASE("long-run sampling matches backward sampling in law") {
  const AffineFamily fam(law::TwoPoint{0.5, 3.0, 0.8}, law::Constant{1.0});
  const SampleSet a = sample_stationary(fam, Backward{80}, 50000, 5);
  const SampleSet b = sample_stationary(fam, LongRun{200, 3}, 50000, 6);
  CHECK(a.quantile(0.5) == doctest::Approx(b.quantile(0.5)).epsilon(0.05));
  CHECK(b.meta().thin == 3);
}

TEST_CASE("divergence is reported with step and replicate") {
  const AffineFamily fam(law::Constant{3.0}, law::Constant{1.0});
  const State start{1.0};
  std::vector<double> out(1);
  try {
    forward_final(fam, start, 1000, 1, 2, out);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.step() > 600);
    CHECK(e.step() < 700);
  }
}

TEST_CASE("contraction diagnostic for a perpetuity") {
  const AffineFamily fam(law::TwoPoint{0.5, 3.0, 0.8}, law::Constant{1.0});
  const ContractionReport r = diagnose_contraction(fam, 200, 2000, 11);
  const double exact = 0.8 * std::log(0.5) + 0.2 * std::log(3.0);
  CHECK(std::fabs(r.mean_log_lipschitz.value - exact) < 5 * r.mean_log_lipschitz.se + 1e-12);
  CHECK(r.mean_contractive);
  CHECK(r.contractive);
  CHECK(backward_depth_for(exact) >= 50);
  CHECK(backward_depth_for(0.1) == 1000);  // not contractive: fixed fallback
  CHECK(backward_depth_for(-1e-9) == 100000);
}

TEST_CASE("Lipschitz bounds hold for every registered model") {
  for (const auto& id : models::model_ids()) {
    nlohmann::json p = nlohmann::json::object();
    if (id == "logistic") p = {{"a_lower", 2.0}};
    if (id == "ricker") p = {{"a_lower", 1.35}};
    const auto m = models::make_model(id, p);
    const LipschitzCheck c = check_lipschitz(*m.family, 20000, 3);
    INFO(id);
    if (id == "dual_law")
      CHECK(c.violations > 0);  // the map jumps between I and its complement
    else
      CHECK(c.violations == 0);
  }
}

TEST_CASE("dual-law map is Lipschitz within each branch") {
  const auto m = models::make_model("dual_law", {});
  std::vector<double> th(2), x(2), y(2), px(2), py(2);
  for (std::size_t i = 0; i < 20000; ++i) {
    StepRng rng(5, 0, i);
    m.family->sample_env(rng, th);
    m.family->sample_point(rng, x);
    m.family->sample_point(rng, y);
    y[1] = x[1];
    m.family->apply(th, x, px);
    m.family->apply(th, y, py);
    // rounding in the sums is relative to the state sizes
    const double tol = 1e-14 * (std::fabs(px[0]) + std::fabs(py[0]));
    CHECK(m.family->metric(px, py) <= th[0] * m.family->metric(x, y) + tol);
  }
}

TEST_CASE("sample set survival and quantiles") {
  const SampleSet s({3.0, 1.0, 2.0, 2.0}, {});
  CHECK(s.sorted() == std::vector<double>{1, 2, 2, 3});
  CHECK(s.survival(2.0) == 0.25);
  CHECK(s.survival(0.5) == 1.0);
  CHECK(s.quantile(0.0) == 1.0);
  CHECK(s.quantile(1.0) == 3.0);
  CHECK(s.scaled(2.0).values() == std::vector<double>{6, 2, 4, 4});
}
