#pragma once

#include <optional>

#include "tailbound/cramer.hpp"
#include "tailbound/ifs.hpp"
#include "tailbound/laws.hpp"
#include "tailbound/sandwich.hpp"

namespace tailbound::models {

/// Phi(x) = x (1 - x) / xi on (0, 1), xi >= 1/4.
struct LogisticSpec {
  ScalarLaw xi_law = law::TwoPoint{0.5, 3.0, 0.8};
  /// a with 4 xi >= a a.s.; makes [a, inf) absorbing for the W-chain.
  std::optional<double> a_lower;
  Nonarithmetic nonarithmetic = Nonarithmetic::Unknown;  // of log xi

  static LogisticSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
  /// The support touches 1/4, so the W-chain can reach its boundary 1.
  bool boundary_case() const { return xi_law.support_min() == 0.25; }
};

class LogisticXFamily final : public MapFamily {
 public:
  explicit LogisticXFamily(LogisticSpec spec);
  std::string id() const override { return "logistic_x"; }
  std::size_t env_dim() const override { return 1; }
  void sample_env(StepRng& rng, std::span<double> theta) const override;
  void apply(std::span<const double> theta, std::span<const double> x, std::span<double> out) const override;
  double lipschitz_bound(std::span<const double> theta) const override { return 1.0 / theta[0]; }
  State default_start() const override { return {0.5}; }
  void sample_point(StepRng& rng, std::span<double> x) const override;
  bool in_state_space(std::span<const double> x) const override { return x[0] > 0.0 && x[0] < 1.0; }
  nlohmann::json describe() const override;

 private:
  LogisticSpec spec_;
};

/// W = 1/X: Psi(w) = xi (w + 1 + 1/(w - 1)) on (1, inf), or on [a, inf).
class LogisticWFamily final : public MapFamily {
 public:
  explicit LogisticWFamily(LogisticSpec spec);
  std::string id() const override { return "logistic"; }
  std::size_t env_dim() const override { return 1; }
  void sample_env(StepRng& rng, std::span<double> theta) const override;
  void apply(std::span<const double> theta, std::span<const double> x, std::span<double> out) const override;
  /// xi max(1, |1 - (a-1)^{-2}|) on [a, inf); +inf without a.
  double lipschitz_bound(std::span<const double> theta) const override;
  State default_start() const override { return {2.0}; }
  void sample_point(StepRng& rng, std::span<double> x) const override;
  bool in_state_space(std::span<const double> x) const override;
  nlohmann::json describe() const override;
  const LogisticSpec& spec() const noexcept { return spec_; }

 private:
  LogisticSpec spec_;
};

/// F(x) = xi (x + 1); with a set, G(x) = xi (x + 1 + 1/(a - 1)). Without a
/// the upper map is reported as unavailable (G = +inf slope is not useful),
/// so this throws.
SandwichBounds logistic_bounds(const LogisticSpec& spec);

/// Lower map only, valid on all of (1, inf).
SandwichBounds logistic_lower_only(const LogisticSpec& spec);

/// Largest violation count of W >= a over one forward path of `steps` steps.
std::size_t logistic_absorption_exits(const LogisticSpec& spec, std::size_t steps, std::uint64_t seed);

struct EmbeddedReport {
  SampleSet w_star;
  SampleSet q1;
  SampleSet q2;
  double sigma_mean = 0.0;
  std::size_t sigma_max = 0;
  std::size_t grid_points = 0;
  std::size_t lower_violations = 0;
  std::size_t upper_violations = 0;
  /// Violations when the stopped sums carry no products (sum of xi_n).
  std::size_t unweighted_lower_violations = 0;

  nlohmann::json to_json() const;
};

/// Blocks Psi_{sigma:1} with sigma the first k with xi_k >= 1/2.
///
/// w_star is drawn by backward composition of `depth` blocks from 2. The
/// stopped sums are
///   Q1 = sum_k xi_k ... xi_sigma,   Q2 = sum_k xi_k ... xi_sigma c_k
/// with c_1 = 1 and c_k = 1/(4 xi_{k-1} - 1), and every block is checked
/// against Pi x v Q1 <= Psi_{sigma:1}(x) <= Pi x + Q1 + Q2 on a log grid in [2, 1e6].
EmbeddedReport logistic_embedded(const LogisticSpec& spec, std::size_t n_samples, std::uint64_t seed,
                                 std::size_t depth = 200);

FactorLaw logistic_factor_law(const LogisticSpec& spec);

CertificateForm logistic_certificate_form(const LogisticSpec& spec);

}  // namespace tailbound::models
