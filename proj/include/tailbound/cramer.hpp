#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "tailbound/ifs.hpp"
#include "tailbound/rng.hpp"

namespace tailbound {

/// Nonarithmeticity of log M is declared at construction, never inferred.
enum class Nonarithmetic { Declared, DeclaredFalse, Unknown };

namespace factor {
/// P(M = a) = p, P(M = b) = 1 - p.
struct TwoPoint {
  double a, b, p;
};
struct LogNormal {
  double mu, sigma;
};
/// Law of (alpha + lambda^{1/2} eta)^2, eta standard normal.
struct SquaredAffineGaussian {
  double alpha, lambda;
};
struct Empirical {
  std::vector<double> samples;
};
struct Custom {
  std::function<double(StepRng&)> sampler;
  std::string name;
};
}  // namespace factor

/// Law of a nonnegative multiplicative factor M.
class FactorLaw {
 public:
  using Kind = std::variant<factor::TwoPoint, factor::LogNormal, factor::SquaredAffineGaussian,
                            factor::Empirical, factor::Custom>;

  /// Accepts a, b >= 0 and p in [0, 1]; degenerate choices are allowed so the
  /// solver can report them.
  static FactorLaw two_point(double a, double b, double p, Nonarithmetic decl = Nonarithmetic::Unknown);
  /// Enforces 0 < a < 1 < b and 0 < p < 1.
  static FactorLaw two_point_strict(double a, double b, double p, Nonarithmetic decl = Nonarithmetic::Unknown);
  static FactorLaw lognormal(double mu, double sigma);
  static FactorLaw squared_affine_gaussian(double alpha, double lambda);
  static FactorLaw empirical(std::vector<double> samples, Nonarithmetic decl = Nonarithmetic::Unknown);
  static FactorLaw custom(std::function<double(StepRng&)> sampler, std::string name,
                          Nonarithmetic decl = Nonarithmetic::Unknown);

  /// {"kind": "two_point", "a":..., "b":..., "p":...} etc.
  static FactorLaw from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  /// Law of s * M.
  FactorLaw scaled(double s) const;
  double sample(StepRng& rng) const;

  bool has_closed_form_phi() const;
  const Kind& kind() const noexcept { return kind_; }
  Nonarithmetic nonarithmetic() const noexcept { return nonarithmetic_; }
  std::string name() const;

 private:
  FactorLaw(Kind k, Nonarithmetic decl) : kind_(std::move(k)), nonarithmetic_(decl) {}
  Kind kind_;
  Nonarithmetic nonarithmetic_;
};

enum class PhiMethod { Auto, MonteCarlo };

struct PhiOptions {
  PhiMethod method = PhiMethod::Auto;
  std::size_t mc_samples = 1'000'000;
  std::uint64_t seed = 0;
};

struct PhiValue {
  double value = 0.0;
  double se = 0.0;
  std::string method;  // closed_form | quadrature | exact_empirical | monte_carlo
};

/// phi(kappa) = E M^kappa.
PhiValue phi(const FactorLaw& law, double kappa, const PhiOptions& opts = {});
/// E M^kappa log M.
PhiValue phi_derivative(const FactorLaw& law, double kappa, const PhiOptions& opts = {});
/// E log M (may be -inf when P(M = 0) > 0).
PhiValue mean_log(const FactorLaw& law, const PhiOptions& opts = {});

struct CramerSolution {
  double kappa = 0.0;
  double mu_kappa = 0.0;
  double mu_kappa_se = 0.0;
  double phi_at_kappa = 0.0;
  double phi_se = 0.0;
  std::string method;
  std::size_t mc_samples = 0;
  std::uint64_t mc_seed = 0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double tolerance = 0.0;
  double mean_log_m = 0.0;
  Nonarithmetic nonarithmetic = Nonarithmetic::Unknown;

  nlohmann::json to_json() const;
};

struct SolveOptions {
  double kappa_max = 64.0;
  double tol = 1e-12;
  PhiOptions phi;
};

/// Positive root of E M^kappa = 1.
///
/// Throws DegenerateFactor when M = 1 a.s., NotMeanDominated when
/// E log M >= 0 and NoCramerIndex when phi stays below 1 on (0, kappa_max].
/// Monte Carlo laws draw one common sample and solve on it.
CramerSolution solve_kappa(const FactorLaw& law, const SolveOptions& opts = {});

struct GoldieConstants {
  Estimate c_plus;
  Estimate c_minus;
  double kappa = 0.0;
  double mu_kappa = 0.0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

/// C+ = E((Psi(X)^+)^k - ((MX)^+)^k) / (k mu_k), C- the analogue for the
/// negative parts. With negative_factor set (P(M < 0) > 0) both are replaced
/// by their average.
GoldieConstants goldie_constants(std::span<const double> psi_x, std::span<const double> m_x,
                                 const CramerSolution& solution, std::uint64_t seed = 0,
                                 bool negative_factor = false);

const char* to_string(Nonarithmetic n) noexcept;

/// Factor law of a nonnegative scalar law: closed forms where they exist,
/// a Monte Carlo sampler otherwise.
FactorLaw factor_from_scalar(const ScalarLaw& law, Nonarithmetic decl = Nonarithmetic::Unknown);

/// Reads "declared" | "declared_false" | "unknown" from j[key]; absent means unknown.
Nonarithmetic nonarithmetic_from_json(const nlohmann::json& j, const char* key = "nonarithmetic");

}  // namespace tailbound
