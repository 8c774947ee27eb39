#pragma once

#include <optional>

#include "tailbound/cramer.hpp"
#include "tailbound/ifs.hpp"
#include "tailbound/laws.hpp"
#include "tailbound/sandwich.hpp"

namespace tailbound::models {

/// X_n = (X_{n-1} / beta_n) exp(-gamma_n X_{n-1}); beta, gamma independent.
struct RickerSpec {
  ScalarLaw beta_law = law::TwoPoint{0.5, 3.0, 0.8};
  ScalarLaw gamma_law = law::Constant{1.0};
  /// a with rho = beta gamma >= a/e a.s.; makes [a, inf) absorbing.
  std::optional<double> a_lower;
  Nonarithmetic nonarithmetic = Nonarithmetic::Unknown;  // of log beta

  static RickerSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
  /// gamma = 0 a.s.: the W-chain is linear and E rho^{-1} is infinite.
  bool gamma_degenerate() const { return gamma_law.support_max() == 0.0; }
};

class RickerXFamily final : public MapFamily {
 public:
  explicit RickerXFamily(RickerSpec spec);
  std::string id() const override { return "ricker_x"; }
  std::size_t env_dim() const override { return 2; }
  void sample_env(StepRng& rng, std::span<double> theta) const override;
  void apply(std::span<const double> theta, std::span<const double> x, std::span<double> out) const override;
  double lipschitz_bound(std::span<const double> theta) const override { return 1.0 / theta[0]; }
  State default_start() const override;
  void sample_point(StepRng& rng, std::span<double> x) const override;
  bool in_state_space(std::span<const double> x) const override { return x[0] > 0.0; }
  nlohmann::json describe() const override;

 private:
  RickerSpec spec_;
};

/// W = 1/X: Psi(w) = beta w exp(gamma / w). theta = (beta, gamma).
class RickerWFamily final : public MapFamily {
 public:
  explicit RickerWFamily(RickerSpec spec);
  std::string id() const override { return "ricker"; }
  std::size_t env_dim() const override { return 2; }
  void sample_env(StepRng& rng, std::span<double> theta) const override;
  void apply(std::span<const double> theta, std::span<const double> x, std::span<double> out) const override;
  /// beta max(1, e^{gamma/a} (gamma/a - 1)) on [a, inf); +inf without a.
  double lipschitz_bound(std::span<const double> theta) const override;
  State default_start() const override;
  void sample_point(StepRng& rng, std::span<double> x) const override;
  bool in_state_space(std::span<const double> x) const override;
  nlohmann::json describe() const override;
  const RickerSpec& spec() const noexcept { return spec_; }

 private:
  RickerSpec spec_;
};

/// F(w) = rho e v beta w, valid on (0, inf); max-type with r = 0.
SandwichBounds ricker_lower_only(const RickerSpec& spec);

/// F as above and G_r(w) = r rho e^{1/r} + beta e^{1/r} w on [a, inf).
///
/// Needs a bounded gamma law. Throws std::invalid_argument when some gamma in
/// the support has r gamma > a and Psi(r gamma) < Psi(a), i.e. when the
/// maximum of Psi over [a, r gamma] is not attained at r gamma.
SandwichBounds ricker_bounds(const RickerSpec& spec, double r);

/// Largest gamma-support violation of the G_r validity condition; <= 0 when valid.
double ricker_validity_gap(const RickerSpec& spec, double r);

std::size_t ricker_absorption_exits(const RickerSpec& spec, std::size_t steps, std::uint64_t seed);

FactorLaw ricker_factor_law(const RickerSpec& spec);
/// Factors of G_r and F for index brackets: beta e^{1/r} and beta.
FactorProvider ricker_factor_provider(const RickerSpec& spec);

struct RickerEmbeddedReport {
  SampleSet w_star;
  SampleSet q1;
  double sigma_mean = 0.0;
  std::size_t grid_points = 0;
  std::size_t lower_violations = 0;
  /// Violations of Pi x v (sum of rho_n).
  std::size_t unweighted_lower_violations = 0;
  double p_hit = 0.0;  // P(rho >= a/e)

  nlohmann::json to_json() const;
};

/// Blocks up to the first k with rho_k >= a/e.
///
/// w_star is Psi(W) with W drawn from `pihat` and the environment conditioned
/// on rho >= a/e. The stopped lower term is Q1 = e max_k rho_k beta_{k+1} ... beta_sigma
/// and each block is checked against Pi x v Q1 <= Psi_{sigma:1}(x) on a grid.
RickerEmbeddedReport ricker_embedded(const RickerSpec& spec, double a, const SampleSet& pihat, std::uint64_t seed);

}  // namespace tailbound::models
