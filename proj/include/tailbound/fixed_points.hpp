#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tailbound/ifs.hpp"
#include "tailbound/laws.hpp"
#include "tailbound/sample_set.hpp"

namespace tailbound {

struct AffineSpec {
  ScalarLaw m_law = law::TwoPoint{0.5, 3.0, 0.8};
  ScalarLaw q_law = law::Constant{1.0};
  /// Optional dependent (M, Q); marginals must match m_law and q_law.
  AffineFamily::JointSampler joint;
};

struct LindleySpec {
  double r = 0.0;
  ScalarLaw m_law = law::TwoPoint{0.5, 3.0, 0.8};
  ScalarLaw q_law = law::Uniform{0.0, 2.0};
  AffineFamily::JointSampler joint;
};

/// Psi(x) = Q v (M x 1{x > r}) on [0, inf). theta = (M, Q).
class LindleyFamily final : public MapFamily {
 public:
  explicit LindleyFamily(LindleySpec spec);
  std::string id() const override { return "lindley"; }
  std::size_t env_dim() const override { return 2; }
  void sample_env(StepRng& rng, std::span<double> theta) const override;
  void apply(std::span<const double> theta, std::span<const double> x, std::span<double> out) const override;
  /// M, or +inf when the map jumps at r (M r > Q).
  double lipschitz_bound(std::span<const double> theta) const override;
  void sample_point(StepRng& rng, std::span<double> x) const override;
  bool in_state_space(std::span<const double> x) const override { return x[0] >= 0.0; }
  nlohmann::json describe() const override;
  const LindleySpec& spec() const noexcept { return spec_; }

 private:
  LindleySpec spec_;
};

struct Truncation {
  std::size_t max_terms = 10'000;
  double eps = 1e-12;
};

/// X = sum_{n >= 1} Pi_{n-1} Q_n, truncated once |Pi_{n-1}| q_ref < eps |partial sum|
/// (q_ref = largest |Q| in the support, 1 for unbounded laws) or at max_terms.
SampleSet simulate_perpetuity(const AffineSpec& spec, std::size_t n_samples, const Truncation& trunc,
                              std::uint64_t seed);

/// Backward iteration of F(t) = Q v (M t 1{t > r}) from 0 to the given depth.
SampleSet simulate_lindley_variant(const LindleySpec& spec, std::size_t n_samples, std::size_t depth,
                                   std::uint64_t seed);

struct DegeneracyRow {
  double c = 0.0;
  double p_fixed = 0.0;  // P(Mc + Q = c)
  double p_up = 0.0;     // P(Mc + Q > c)
};

struct DegeneracyReport {
  std::vector<DegeneracyRow> rows;
  double p_m_le1_q_pos = 0.0;
  double p_m_ge1_q_pos = 0.0;
  bool degenerate_point = false;
  bool invariant_halfline_possible = false;
  bool sufficient_condition_holds = false;
  double grid_min = 0.0;
  double grid_max = 0.0;
  std::size_t n = 0;

  nlohmann::json to_json() const;
};

/// Grid checks for P(Mc+Q=c) < 1 and P(Mc+Q>c) > 0; the grid is reported
/// rather than turned into a verdict over all c.
DegeneracyReport check_degeneracy(const AffineSpec& spec, std::span<const double> c_grid, std::size_t n,
                                  std::uint64_t seed);

struct FirstPassageRow {
  double t = 0.0;
  double lhs = 0.0;        // P(sup_n Pi_{n-1} Q_n > t)
  double lhs_se = 0.0;
  double p_q_above_r = 0.0;
  double p_tau_finite = 0.0;  // P(sup_n Pi_{n-1} > t / r)
  double rhs = 0.0;
  double rhs_se = 0.0;
  bool holds = true;  // lhs >= rhs - 3 pooled SE
};

struct FirstPassageReport {
  std::vector<FirstPassageRow> rows;
  std::size_t n = 0;
  bool all_hold = true;
  nlohmann::json to_json() const;
};

FirstPassageReport first_passage_lower_bound_check(const LindleySpec& spec, std::span<const double> t_grid,
                                                   std::size_t n, std::uint64_t seed);

}  // namespace tailbound
