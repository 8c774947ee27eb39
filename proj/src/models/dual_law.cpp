#include "tailbound/models/dual_law.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "tailbound/errors.hpp"
#include "tailbound/parallel.hpp"

namespace tailbound::models {

namespace {

constexpr long kMaxExponent = 1'000'000'000L;

}  // namespace

DualLawSpec DualLawSpec::from_json(const nlohmann::json& j) {
  DualLawSpec s;
  s.p = j.value("p", 0.6);
  s.gamma_rate = j.value("gamma_rate", 1.0);
  if (j.contains("nonarithmetic")) s.nonarithmetic = nonarithmetic_from_json(j);
  s.validate();
  return s;
}

nlohmann::json DualLawSpec::to_json() const {
  return {{"p", p}, {"gamma_rate", gamma_rate}, {"nonarithmetic", tailbound::to_string(nonarithmetic)}};
}

void DualLawSpec::validate() const {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("dual_law p must lie in (0, 1)");
  if (!(gamma_rate > 0.0)) throw std::invalid_argument("dual_law gamma_rate must be positive");
}

DualLawFamily::DualLawFamily(DualLawSpec spec) : spec_(spec) { spec_.validate(); }

void DualLawFamily::sample_env(StepRng& rng, std::span<double> theta) const {
  theta[0] = rng.uniform() < spec_.p ? 1.0 / 3.0 : 2.0;
  theta[1] = rng.exponential() / spec_.gamma_rate;
}

void DualLawFamily::apply(std::span<const double> theta, std::span<const double> x, std::span<double> out) const {
  const double tag = x[1];
  out[0] = theta[0] * x[0] + (tag != 0.0 ? 3.0 : theta[1]);
  out[1] = tag;
}

double DualLawFamily::metric(std::span<const double> x, std::span<const double> y) const {
  return std::fabs(x[0] - y[0]);
}

State DualLawFamily::default_start() const { return {std::numbers::sqrt2, 0.0}; }

void DualLawFamily::sample_point(StepRng& rng, std::span<double> x) const {
  x[0] = std::pow(10.0, -3.0 + 9.0 * rng.uniform());
  x[1] = rng.uniform() < 0.5 ? 1.0 : 0.0;
}

bool DualLawFamily::in_state_space(std::span<const double> x) const {
  return x[0] >= 0.0 && (x[1] == 0.0 || x[1] == 1.0);
}

nlohmann::json DualLawFamily::describe() const {
  auto j = spec_.to_json();
  j["model_id"] = id();
  j["branch_note"] = "floating states tagged 0 stand for the complement of I";
  return j;
}

bool ExactState::canonical() const {
  if (m < 0) return false;
  if (m == 0) return n == 0;
  return mpz_divisible_ui_p(m.get_mpz_t(), 3) == 0;
}

double ExactState::to_double() const {
  if (m == 0) return 0.0;
  long e2 = 0;
  const double d = mpz_get_d_2exp(&e2, m.get_mpz_t());
  return std::exp(std::log(d) + static_cast<double>(e2) * std::numbers::ln2 + static_cast<double>(n) * std::log(3.0));
}

std::string ExactState::to_string() const { return m.get_str() + "*3^" + std::to_string(n); }

const mpz_class& ExactStepper::pow3(unsigned long e) {
  if (e == cached_e_ + 1) {
    cached_ *= 3;
  } else if (e + 1 == cached_e_) {
    mpz_divexact_ui(cached_.get_mpz_t(), cached_.get_mpz_t(), 3);
  } else if (e != cached_e_) {
    mpz_ui_pow_ui(cached_.get_mpz_t(), 3, e);
  }
  cached_e_ = e;
  return cached_;
}

void ExactStepper::canonicalize(ExactState& s) {
  if (s.m == 0) {
    s.n = 0;
    return;
  }
  while (mpz_divisible_ui_p(s.m.get_mpz_t(), 3)) {
    mpz_divexact_ui(s.m.get_mpz_t(), s.m.get_mpz_t(), 3);
    ++s.n;
  }
}

void ExactStepper::step(ExactState& s, bool third) {
  if (s.m != 0) {
    if (third) {
      --s.n;
    } else {
      s.m *= 2;
    }
  }
  if (s.n < -kMaxExponent || s.n > kMaxExponent) throw Error("exact branch exponent out of range");
  // + 3 = + 1 * 3^1
  if (s.m == 0) {
    s.m = 1;
    s.n = 1;
  } else if (s.n >= 1) {
    s.m *= pow3(static_cast<unsigned long>(s.n - 1));
    s.m += 1;
    s.n = 1;
  } else {
    s.m += pow3(static_cast<unsigned long>(1 - s.n));
  }
  canonicalize(s);
}

nlohmann::json ClosureReport::to_json() const {
  return {{"steps", steps},
          {"checks", checks},
          {"violations", violations},
          {"max_bits", max_bits},
          {"min_n", min_n},
          {"max_n", max_n},
          {"final_value", final_value},
          {"float_chain_relative_error", float_chain_relative_error}};
}

ClosureReport exact_closure_check(const DualLawSpec& spec, std::size_t steps, std::uint64_t seed,
                                  std::size_t check_every) {
  if (check_every == 0) throw std::invalid_argument("check_every must be >= 1");
  const DualLawFamily fam(spec);
  ExactState s;
  ExactStepper stepper;
  mpz_class big_n = 0, pow3k1 = 3;  // x = N / 3^K; pow3k1 = 3^{K+1}
  unsigned long k = 0;
  double xf = 0.0;
  ClosureReport rep;
  rep.steps = steps;
  double theta[2];
  auto compare = [&] {
    ++rep.checks;
    const long e = s.n + static_cast<long>(k);
    if (e < 0) {
      ++rep.violations;
      return;
    }
    mpz_class lhs;
    mpz_ui_pow_ui(lhs.get_mpz_t(), 3, static_cast<unsigned long>(e));
    lhs *= s.m;
    if (lhs != big_n) ++rep.violations;
  };
  for (std::size_t i = 0; i < steps; ++i) {
    draw_env(fam, seed, 0, i, theta);
    const bool third = theta[0] < 1.0;
    stepper.step(s, third);
    if (third) {
      ++k;
      pow3k1 *= 3;
    } else {
      big_n *= 2;
    }
    big_n += pow3k1;
    xf = theta[0] * xf + 3.0;
    if (!s.canonical()) ++rep.violations;
    rep.max_bits = std::max<std::size_t>(rep.max_bits, mpz_sizeinbase(s.m.get_mpz_t(), 2));
    rep.min_n = std::min(rep.min_n, s.n);
    rep.max_n = std::max(rep.max_n, s.n);
    if ((i + 1) % check_every == 0) compare();
  }
  if (steps % check_every != 0) compare();
  rep.final_value = s.to_double();
  rep.float_chain_relative_error = rep.final_value == 0.0 ? std::fabs(xf) : std::fabs(xf - rep.final_value) / rep.final_value;
  return rep;
}

SampleSet exact_branch_samples(const DualLawSpec& spec, std::size_t n_samples, std::size_t depth, std::uint64_t seed) {
  if (depth == 0) throw std::invalid_argument("depth must be >= 1");
  const DualLawFamily fam(spec);
  std::vector<double> values(n_samples);
  parallel_for(n_samples, [&](std::size_t begin, std::size_t end) {
    ExactStepper stepper;
    double theta[2];
    for (std::size_t i = begin; i < end; ++i) {
      ExactState s;
      for (std::size_t k = depth; k-- > 0;) {
        draw_env(fam, seed, i, k, theta);
        stepper.step(s, theta[0] < 1.0);
      }
      values[i] = s.to_double();
    }
  });
  SampleMeta meta;
  meta.model_id = "dual_law_exact";
  meta.seed = seed;
  meta.mode = "backward";
  meta.depth = depth;
  meta.start = {0.0, 1.0};
  meta.extra["spec"] = spec.to_json();
  return SampleSet(std::move(values), std::move(meta));
}

SampleSet real_branch_samples(const DualLawSpec& spec, std::size_t n_samples, std::size_t depth, std::uint64_t seed) {
  const DualLawFamily fam(spec);
  SampleOptions o;
  o.start = fam.default_start();
  o.model_id = "dual_law_real";
  return sample_stationary(fam, Backward{depth}, n_samples, seed, o);
}

SandwichBounds dual_law_bounds(const DualLawSpec& spec) {
  (void)spec;
  SandwichBounds b;
  b.lower_form = LowerForm::Affine;
  b.coefficients = [](std::span<const double> theta) {
    return Coefficients{theta[0], theta[0], std::min(3.0, theta[1]), std::max(3.0, theta[1])};
  };
  return b;
}

FactorLaw dual_law_factor_law(const DualLawSpec& spec) {
  return FactorLaw::two_point(1.0 / 3.0, 2.0, spec.p, spec.nonarithmetic);
}

CertificateForm dual_law_certificate_form(const DualLawSpec& spec) {
  CertificateForm f;
  f.form = "affine_signed";
  f.coefficients = [](std::span<const double> theta) {
    return std::array<double, 3>{theta[0], std::min(3.0, theta[1]), std::max(3.0, theta[1])};
  };
  f.m_law = dual_law_factor_law(spec);
  return f;
}

}  // namespace tailbound::models
