#include "tailbound/models/arch.hpp"

#include <cmath>
#include <stdexcept>

namespace tailbound::models {

namespace {

bool standard_normal(const ScalarLaw& l) {
  const auto* n = std::get_if<law::Normal>(&l.kind());
  return n && n->mu == 0.0 && n->sigma == 1.0;
}

}  // namespace

ArchSpec ArchSpec::from_json(const nlohmann::json& j) {
  ArchSpec s;
  s.alpha = j.value("alpha", 0.0);
  s.beta = j.value("beta", 1.0);
  s.lambda = j.value("lambda", 1.0);
  if (j.contains("eps")) s.eps_law = ScalarLaw::from_json(j.at("eps"));
  s.validate();
  return s;
}

nlohmann::json ArchSpec::to_json() const {
  return {{"alpha", alpha}, {"beta", beta}, {"lambda", lambda}, {"eps", eps_law.to_json()}};
}

void ArchSpec::validate() const {
  if (!(beta > 0.0) || !(lambda > 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("arch needs beta > 0, lambda > 0 and finite alpha");
  if (!eps_law.symmetric()) throw std::invalid_argument("arch innovation law must be symmetric");
}

ArchFamily::ArchFamily(ArchSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

void ArchFamily::sample_env(StepRng& rng, std::span<double> theta) const { theta[0] = spec_.eps_law.sample(rng); }

void ArchFamily::apply(std::span<const double> theta, std::span<const double> x, std::span<double> out) const {
  const double v = x[0];
  out[0] = spec_.alpha * v + std::sqrt(spec_.beta + spec_.lambda * v * v) * theta[0];
}

double ArchFamily::lipschitz_bound(std::span<const double> theta) const {
  return std::fabs(spec_.alpha) + std::sqrt(spec_.lambda) * std::fabs(theta[0]);
}

nlohmann::json ArchFamily::describe() const {
  auto j = spec_.to_json();
  j["model_id"] = id();
  return j;
}

ArchWFamily::ArchWFamily(ArchSpec spec) : spec_(std::move(spec)), a_(std::fabs(spec_.alpha)) { spec_.validate(); }

void ArchWFamily::sample_env(StepRng& rng, std::span<double> theta) const { theta[0] = spec_.eps_law.sample(rng); }

void ArchWFamily::apply(std::span<const double> theta, std::span<const double> x, std::span<double> out) const {
  const double w = std::max(x[0], 0.0);
  const double eta = theta[0];
  const double b = spec_.beta, l = spec_.lambda;
  const double f = a_ + std::sqrt(l) * eta;
  const double sw = std::sqrt(w);
  const double mid = 2.0 * a_ * b * eta * sw / (std::sqrt(b + l * w) + std::sqrt(l) * sw);
  out[0] = std::max(f * f * w + mid + b * eta * eta, 0.0);
}

double ArchWFamily::lipschitz_bound(std::span<const double> theta) const {
  if (a_ == 0.0 || theta[0] == 0.0) return spec_.lambda * theta[0] * theta[0];
  return std::numeric_limits<double>::infinity();
}

void ArchWFamily::sample_point(StepRng& rng, std::span<double> x) const {
  x[0] = std::pow(10.0, -4.0 + 12.0 * rng.uniform());
}

nlohmann::json ArchWFamily::describe() const {
  auto j = spec_.to_json();
  j["model_id"] = id();
  return j;
}

std::array<double, 3> arch_coefficients(const ArchSpec& spec, double eta) {
  const double a = std::fabs(spec.alpha);
  const double f = a + std::sqrt(spec.lambda) * eta;
  const double k = a / std::sqrt(spec.lambda);
  const double eta_minus = std::max(-eta, 0.0);
  return {f * f, spec.beta * (eta * eta - k * eta_minus), spec.beta * (eta * eta + k * std::fabs(eta))};
}

SandwichBounds arch_bounds(const ArchSpec& spec) {
  SandwichBounds b;
  b.lower_form = LowerForm::Affine;
  b.coefficients = [spec](std::span<const double> theta) {
    const auto c = arch_coefficients(spec, theta[0]);
    return Coefficients{c[0], c[0], c[1], c[2]};
  };
  return b;
}

FactorLaw arch_factor_law(const ArchSpec& spec) {
  if (standard_normal(spec.eps_law)) return FactorLaw::squared_affine_gaussian(std::fabs(spec.alpha), spec.lambda);
  const ArchSpec s = spec;
  return FactorLaw::custom(
      [s](StepRng& rng) {
        const double f = std::fabs(s.alpha) + std::sqrt(s.lambda) * s.eps_law.sample(rng);
        return f * f;
      },
      "arch_m");
}

CertificateForm arch_certificate_form(const ArchSpec& spec) {
  CertificateForm f;
  f.form = "affine_signed";
  f.coefficients = [spec](std::span<const double> theta) { return arch_coefficients(spec, theta[0]); };
  f.m_law = arch_factor_law(spec);
  return f;
}

}  // namespace tailbound::models
