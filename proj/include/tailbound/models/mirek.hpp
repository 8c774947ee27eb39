#pragma once

#include <string>

#include "tailbound/cramer.hpp"
#include "tailbound/ifs.hpp"
#include "tailbound/laws.hpp"
#include "tailbound/sandwich.hpp"

namespace tailbound::models {

/// Psi(x) = Gamma (beta x + p(theta, x)) on R^m, Gamma a random orthogonal matrix.
///
/// Perturbations p:
///   none    p = 0
///   fixed   p = U e_1, U ~ uniform(0, q); |Psi(x)| >= (beta |x| - U)^+
///   radial  p = U nu + V J nu with nu = x / max(1, |x|), U ~ uniform(u_lo, u_hi),
///           V ~ uniform(-v, v) and J skew-symmetric with |J| <= 1. The state space
///           is {|x| >= 1} (absorbing since u_lo >= 1), where |Psi(x)| >= beta |x| + U.
struct MirekSpec {
  std::size_t dim = 2;
  ScalarLaw beta_law = law::LogNormal{-0.5, 1.0};
  std::string rotation = "haar";  // haar | identity
  std::string perturbation = "radial";
  double q = 1.0;  // fixed
  double u_lo = 1.0, u_hi = 2.0, v = 0.5;  // radial
  Nonarithmetic nonarithmetic = Nonarithmetic::Unknown;

  static MirekSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

/// theta = (beta, Gamma row-major, U, V).
class MirekFamily final : public MapFamily {
 public:
  explicit MirekFamily(MirekSpec spec);
  std::string id() const override { return "mirek"; }
  std::size_t state_dim() const override { return spec_.dim; }
  std::size_t env_dim() const override { return 3 + spec_.dim * spec_.dim; }
  void sample_env(StepRng& rng, std::span<double> theta) const override;
  void apply(std::span<const double> theta, std::span<const double> x, std::span<double> out) const override;
  double lipschitz_bound(std::span<const double> theta) const override;
  State default_start() const override;
  void sample_point(StepRng& rng, std::span<double> x) const override;
  bool in_state_space(std::span<const double> x) const override;
  nlohmann::json describe() const override;
  const MirekSpec& spec() const noexcept { return spec_; }

  /// sup_x |p(theta, x)|.
  double q_of(std::span<const double> theta) const;
  /// Q' with |Psi(x)| >= (beta |x| + Q')^+ on the state space.
  double q_prime_of(std::span<const double> theta) const;

 private:
  MirekSpec spec_;
};

/// Haar-distributed orthogonal matrix (uniform angle in dim 2), row-major.
void sample_rotation(StepRng& rng, std::size_t dim, std::span<double> out);

struct RotationCheck {
  std::size_t samples = 0;
  double max_norm_error = 0.0;        // max | |Gx| - |x| | / |x|
  double max_orthogonality_error = 0.0;  // max |G^T G - I| entrywise
  nlohmann::json to_json() const;
};
RotationCheck mirek_rotation_check(const MirekSpec& spec, std::size_t n, std::uint64_t seed);

/// G(t) = beta t + Q, F(t) = (beta t + Q')^+.
SandwichBounds mirek_bounds(const MirekSpec& spec);

/// Affine form with (M, R_lo, R_hi) = (beta, Q', Q).
CertificateForm mirek_certificate_form(const MirekSpec& spec);

FactorLaw mirek_factor_law(const MirekSpec& spec);

}  // namespace tailbound::models
