#pragma once

#include <memory>

#include "tailbound/cramer.hpp"
#include "tailbound/ifs.hpp"
#include "tailbound/laws.hpp"
#include "tailbound/sandwich.hpp"

namespace tailbound::models {

/// X_n = alpha X_{n-1} + (beta + lambda X_{n-1}^2)^{1/2} eps_n.
struct ArchSpec {
  double alpha = 0.0;
  double beta = 1.0;
  double lambda = 1.0;
  ScalarLaw eps_law = law::Normal{0.0, 1.0};

  static ArchSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  /// Throws std::invalid_argument unless beta, lambda > 0 and eps is symmetric.
  void validate() const;
};

/// The raw recursion on R. theta = (eps).
class ArchFamily final : public MapFamily {
 public:
  explicit ArchFamily(ArchSpec spec);
  std::string id() const override { return "arch"; }
  std::size_t env_dim() const override { return 1; }
  void sample_env(StepRng& rng, std::span<double> theta) const override;
  void apply(std::span<const double> theta, std::span<const double> x, std::span<double> out) const override;
  /// alpha + lambda^{1/2} |eps| (alpha taken as |alpha|).
  double lipschitz_bound(std::span<const double> theta) const override;
  nlohmann::json describe() const override;
  const ArchSpec& spec() const noexcept { return spec_; }

 private:
  ArchSpec spec_;
};

/// W = X^2 in the eta form:
///   Psi(W) = (a + l^{1/2} eta)^2 W + 2 a b eta W^{1/2} / ((b + l W)^{1/2} + (l W)^{1/2}) + b eta^2
/// with a = |alpha|. theta = (eta).
class ArchWFamily final : public MapFamily {
 public:
  explicit ArchWFamily(ArchSpec spec);
  std::string id() const override { return "arch_w"; }
  std::size_t env_dim() const override { return 1; }
  void sample_env(StepRng& rng, std::span<double> theta) const override;
  void apply(std::span<const double> theta, std::span<const double> x, std::span<double> out) const override;
  /// lambda eta^2 when alpha = 0; +inf otherwise (the middle term has slope
  /// unbounded at 0).
  double lipschitz_bound(std::span<const double> theta) const override;
  void sample_point(StepRng& rng, std::span<double> x) const override;
  bool in_state_space(std::span<const double> x) const override { return x[0] >= 0.0; }
  nlohmann::json describe() const override;
  const ArchSpec& spec() const noexcept { return spec_; }

 private:
  ArchSpec spec_;
  double a_;
};

/// (M, R_lo, R_hi) for an eta draw:
///   M = (a + l^{1/2} eta)^2, R_lo = b (eta^2 - a l^{-1/2} eta^-), R_hi = b (eta^2 + a l^{-1/2} |eta|).
std::array<double, 3> arch_coefficients(const ArchSpec& spec, double eta);

/// Affine sandwich of the W-chain (R_lo may be negative).
SandwichBounds arch_bounds(const ArchSpec& spec);

/// Law of M; closed form when eps is standard normal.
FactorLaw arch_factor_law(const ArchSpec& spec);

CertificateForm arch_certificate_form(const ArchSpec& spec);

}  // namespace tailbound::models
