#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "tailbound/tail_stats.hpp"

using namespace tailbound;

TEST_CASE("Hill on exact Pareto samples") {
  for (double theta : {0.5, 1.0, 2.0, 4.0}) {
    const SampleSet s(oracle::pareto(theta, 1'000'000, 100 + static_cast<int>(theta * 10)), {});
    const TailEstimate e = hill(s, 10'000);
    INFO("theta = " << theta);
    CHECK(std::fabs(e.index - theta) / theta <= 0.05);
    CHECK(e.ci_low <= e.index);
    CHECK(e.index <= e.ci_high);
    CHECK(e.ci_high == doctest::Approx(e.index * (1 + 1.96 / 100.0)).epsilon(1e-12));
  }
}

TEST_CASE("Hill matches the textbook formula") {
  const std::vector<double> x{1, 2, 4, 8, 16, 32};
  // k = 3: top values 32, 16, 8 over threshold 4
  const double expect = 3.0 / (std::log(8.0) + std::log(4.0) + std::log(2.0));
  CHECK(hill_sorted(x, 3).index == doctest::Approx(expect).epsilon(1e-14));
  CHECK(default_hill_k(1'000'000) == 3981);
}

TEST_CASE("Hill is scale equivariant") {
  const SampleSet s(oracle::pareto(1.5, 50'000, 5), {});
  CHECK(hill(s.scaled(4.0), 500).index == hill(s, 500).index);
  CHECK(hill(s.scaled(3.7), 500).index == doctest::Approx(hill(s, 500).index).epsilon(1e-12));
}

TEST_CASE("Hill rejects degenerate input") {
  CHECK_THROWS(hill(SampleSet(std::vector<double>(100, 2.0), {}), 10));
  CHECK_THROWS(hill(SampleSet({1, 2, 3}, {}), 5));
}

TEST_CASE("log-log regression") {
  const SampleSet s(oracle::pareto(1.0, 1'000'000, 9), {});
  const TailEstimate e = loglog_tail(s, 0.9, 0.999);
  CHECK(e.index >= 0.9);
  CHECK(e.index <= 1.1);
  CHECK(e.method == "loglog_regression");
  CHECK_THROWS(loglog_tail(SampleSet(oracle::pareto(1.0, 100, 1), {}), 0.9, 0.999));
  CHECK_THROWS(loglog_tail(s, 0.4, 0.999));
}

TEST_CASE("log-log on a lognormal drifts with the window") {
  std::vector<double> x(1'000'000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    StepRng r(4, 0, i);
    x[i] = std::exp(r.normal());
  }
  const SampleSet s(std::move(x), {});
  const double lo = loglog_tail(s, 0.9, 0.99).index;
  const double hi = loglog_tail(s, 0.99, 0.9999).index;
  CHECK(hi > lo + 0.5);
}

TEST_CASE("exactness verdicts") {
  const SampleSet s(oracle::pareto(1.0, 1'000'000, 21), {});
  const ExactnessReport ok = exactness(s, 1.0);
  CHECK(ok.verdict == Verdict::ConsistentWithExact);
  CHECK(std::fabs(ok.slope) < 0.1);
  CHECK(ok.t_grid.size() == 20);
  CHECK(ok.t_grid.back() == doctest::Approx(10.0 * ok.t_grid.front()));
  const ExactnessReport bad = exactness(s, 1.5);
  CHECK(bad.verdict == Verdict::Inconsistent);
  CHECK(bad.slope == doctest::Approx(0.5).epsilon(0.2));
  CHECK_THROWS(exactness(s, -1.0));
}

TEST_CASE("two-sample KS") {
  const SampleSet a(oracle::pareto(1.0, 100'000, 1), {});
  const KsResult same = ks_two_sample(a, a);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);
  const SampleSet b(oracle::pareto(2.0, 100'000, 2), {});
  CHECK(ks_two_sample(a, b).p_value < 1e-6);
  const SampleSet c(oracle::pareto(1.0, 100'000, 3), {});
  CHECK(ks_two_sample(a, c).p_value > 0.001);
  for (double l : {0.3, 0.5, 1.0, 1.5, 2.5}) CHECK(kolmogorov_sf(l) == doctest::Approx(oracle::kolmogorov_tail(l)).epsilon(1e-10));
}

TEST_CASE("survival comparison flags a reversed pair") {
  const SampleSet light(oracle::pareto(2.0, 100'000, 1), {});
  const SampleSet heavy(oracle::pareto(1.0, 100'000, 2), {});
  const auto grid = quantile_log_grid(heavy, 0.5, 0.999, 20);
  CHECK(grid.size() == 20);
  for (const auto& p : compare_survival(light, heavy, grid)) CHECK(p.ordered);
  std::size_t bad = 0;
  for (const auto& p : compare_survival(heavy, light, grid)) bad += p.ordered ? 0 : 1;
  CHECK(bad > 10);
}

TEST_CASE("plot data files hold two columns") {
  const SampleSet s(oracle::pareto(1.0, 10'000, 1), {});
  const auto dir = std::filesystem::temp_directory_path() / "tb_plot_test";
  std::filesystem::create_directories(dir);
  write_plot_data(s, (dir / "a.txt").string(), (dir / "b.txt").string(), 1.0);
  std::ifstream in(dir / "b.txt");
  double x = 0, y = 0;
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    REQUIRE((ss >> x >> y));
    ++rows;
  }
  CHECK(rows > 10);
  std::filesystem::remove_all(dir);
}
