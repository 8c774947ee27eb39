#pragma once

#include <gmpxx.h>

#include "tailbound/cramer.hpp"
#include "tailbound/ifs.hpp"
#include "tailbound/sandwich.hpp"

namespace tailbound::models {

/// Psi(x) = alpha x + b(x) on [0, inf), alpha in {1/3, 2} with P(alpha = 1/3) = p,
/// b = 3 on I = N_0 3^Z and b = gamma ~ exponential(rate) elsewhere.
struct DualLawSpec {
  double p = 0.6;
  double gamma_rate = 1.0;
  /// log 2 / log 3 is irrational, so log alpha is nonarithmetic.
  Nonarithmetic nonarithmetic = Nonarithmetic::Declared;

  static DualLawSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

/// Floating chain with an exact membership tag: state (x, tag), tag 1 for I.
/// The tag is carried, not inferred, since doubles cannot tell I from its
/// complement. theta = (alpha, gamma).
class DualLawFamily final : public MapFamily {
 public:
  explicit DualLawFamily(DualLawSpec spec);
  std::string id() const override { return "dual_law"; }
  std::size_t state_dim() const override { return 2; }
  std::size_t env_dim() const override { return 2; }
  void sample_env(StepRng& rng, std::span<double> theta) const override;
  void apply(std::span<const double> theta, std::span<const double> x, std::span<double> out) const override;
  double lipschitz_bound(std::span<const double> theta) const override { return theta[0]; }
  /// |x - y| on the first coordinate.
  double metric(std::span<const double> x, std::span<const double> y) const override;
  State default_start() const override;
  void sample_point(StepRng& rng, std::span<double> x) const override;
  bool in_state_space(std::span<const double> x) const override;
  nlohmann::json describe() const override;

 private:
  DualLawSpec spec_;
};

/// m 3^n with m not divisible by 3, or (0, 0).
struct ExactState {
  mpz_class m = 0;
  long n = 0;

  bool canonical() const;
  double to_double() const;
  std::string to_string() const;
};

/// Stepper with a small cache of powers of 3.
class ExactStepper {
 public:
  /// x -> alpha x + 3, alpha = 1/3 when `third`, else 2.
  void step(ExactState& s, bool third);
  static void canonicalize(ExactState& s);

 private:
  const mpz_class& pow3(unsigned long e);
  unsigned long cached_e_ = 0;
  mpz_class cached_ = 1;
};

struct ClosureReport {
  std::size_t steps = 0;
  std::size_t checks = 0;
  std::size_t violations = 0;  // non-canonical states or bookkeeping mismatches
  std::size_t max_bits = 0;
  long min_n = 0;
  long max_n = 0;
  double final_value = 0.0;
  double float_chain_relative_error = 0.0;  // final value vs the floating chain, same environments
  nlohmann::json to_json() const;
};

/// Forward run from 0 on I. Each step checks canonical form; every
/// `check_every` steps and at the end the state is compared exactly with an
/// independent N / 3^K bookkeeping of the same path.
ClosureReport exact_closure_check(const DualLawSpec& spec, std::size_t steps, std::uint64_t seed,
                                  std::size_t check_every = 1000);

/// Backward iteration on I from 0, exact arithmetic, converted to double at the end.
SampleSet exact_branch_samples(const DualLawSpec& spec, std::size_t n_samples, std::size_t depth, std::uint64_t seed);

/// Backward iteration of the floating chain tagged as the complement, from sqrt 2.
SampleSet real_branch_samples(const DualLawSpec& spec, std::size_t n_samples, std::size_t depth, std::uint64_t seed);

/// F(x) = alpha x + (3 ^ gamma), G(x) = alpha x + (3 v gamma).
SandwichBounds dual_law_bounds(const DualLawSpec& spec);

FactorLaw dual_law_factor_law(const DualLawSpec& spec);
CertificateForm dual_law_certificate_form(const DualLawSpec& spec);

}  // namespace tailbound::models
