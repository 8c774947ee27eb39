#include "tailbound/cramer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "tailbound/errors.hpp"
#include "tailbound/parallel.hpp"

namespace tailbound {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kMcStream = 0xFAC7;

/// log M values of a sample, with zeros counted apart.
struct LogSample {
  std::vector<double> logs;
  std::size_t zeros = 0;
  std::size_t n = 0;

  explicit LogSample(std::span<const double> m) : n(m.size()) {
    logs.reserve(m.size());
    for (double v : m) {
      if (!std::isfinite(v) || v < 0.0) throw std::domain_error("factor sample is negative or not finite");
      if (v == 0.0)
        ++zeros;
      else
        logs.push_back(std::log(v));
    }
  }

  // log of (1/n) sum exp(k L_i); zeros count only at k == 0
  double log_mean_pow(double k) const {
    if (k == 0.0) return 0.0;
    if (logs.empty()) return -kInf;
    double mx = -kInf;
    for (double l : logs) mx = std::max(mx, k * l);
    double s = 0.0;
    for (double l : logs) s += std::exp(k * l - mx);
    return mx + std::log(s / static_cast<double>(n));
  }

  PhiValue phi(double k, const char* method) const {
    const double lp = log_mean_pow(k);
    const double v = std::exp(lp);
    double se = 0.0;
    if (std::string(method) == "monte_carlo" && n > 1) {
      const double lp2 = log_mean_pow(2.0 * k);
      const double var = std::max(0.0, std::exp(lp2) - v * v) * static_cast<double>(n) / static_cast<double>(n - 1);
      se = std::sqrt(var / static_cast<double>(n));
    }
    return {v, se, method};
  }

  PhiValue derivative(double k, const char* method) const {
    if (logs.empty()) return {0.0, 0.0, method};
    double mx = -kInf;
    for (double l : logs) mx = std::max(mx, k * l);
    double s = 0.0, s2 = 0.0;
    for (double l : logs) {
      const double t = std::exp(k * l - mx) * l;
      s += t;
      s2 += t * t;
    }
    const double nn = static_cast<double>(n);
    const double scale = std::exp(mx);
    const double mean = scale * s / nn;
    double se = 0.0;
    if (std::string(method) == "monte_carlo" && n > 1) {
      const double var = std::max(0.0, scale * scale * s2 / nn - mean * mean) * nn / (nn - 1.0);
      se = std::sqrt(var / nn);
    }
    return {mean, se, method};
  }

  PhiValue mean_log(const char* method) const {
    if (zeros > 0) return {-kInf, 0.0, method};
    double s = 0.0, s2 = 0.0;
    for (double l : logs) {
      s += l;
      s2 += l * l;
    }
    const double nn = static_cast<double>(n);
    const double m = s / nn;
    double se = 0.0;
    if (std::string(method) == "monte_carlo" && n > 1)
      se = std::sqrt(std::max(0.0, (s2 - s * m) / (nn - 1.0)) / nn);
    return {m, se, method};
  }

  bool all_one() const { return zeros == 0 && std::all_of(logs.begin(), logs.end(), [](double l) { return l == 0.0; }); }
};

std::vector<double> draw_factor_samples(const FactorLaw& law, std::size_t n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("Monte Carlo phi needs at least 2 samples");
  std::vector<double> out(n);
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      StepRng rng(seed, kMcStream, i);
      out[i] = law.sample(rng);
      if (!std::isfinite(out[i])) throw std::domain_error("Monte Carlo factor sample is not finite");
    }
  });
  return out;
}

/// E[M^k (log M)^j] for M = (alpha + sqrt(lambda) eta)^2, j in {0, 1}, as exp(c) * I.
struct ScaledValue {
  double log_scale;
  double integral;
};

ScaledValue sag_moment(double alpha, double lambda, double k, int j) {
  const double a = std::fabs(alpha);
  double c = 0.0;
  if (k > 0.0) {
    const double u = 0.5 * (a + std::sqrt(a * a + 8.0 * k * lambda));
    c = 2.0 * k * std::log(u) - (u - a) * (u - a) / (2.0 * lambda);
  }
  auto f = [=](double u) {
    if (u <= 0.0) return 0.0;
    const double lu = std::log(u);
    const double base = 2.0 * k * lu - c;
    double w = std::exp(base - (u - a) * (u - a) / (2.0 * lambda)) + std::exp(base - (u + a) * (u + a) / (2.0 * lambda));
    if (j == 1) w *= 2.0 * lu;
    return w;
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  double err = 0.0;
  const double integral = integrator.integrate(f, 0.0, kInf, 1e-14, &err);
  return {c - 0.5 * std::log(2.0 * std::numbers::pi * lambda), integral};
}

double log_phi_sag_alpha0(double lambda, double k) {
  return k * std::log(2.0 * lambda) + std::lgamma(k + 0.5) - 0.5 * std::log(std::numbers::pi);
}

bool is_degenerate(const FactorLaw::Kind& kind) {
  return std::visit(Overloaded{
                        [](const factor::TwoPoint& t) {
                          return (t.p == 1.0 && t.a == 1.0) || (t.p == 0.0 && t.b == 1.0) ||
                                 (t.a == 1.0 && t.b == 1.0);
                        },
                        [](const factor::LogNormal& l) { return l.mu == 0.0 && l.sigma == 0.0; },
                        [](const factor::SquaredAffineGaussian&) { return false; },
                        [](const factor::Empirical& e) { return LogSample(e.samples).all_one(); },
                        [](const factor::Custom&) { return false; },
                    },
                    kind);
}

// Evaluator over either an analytic law or a fixed sample.
struct PhiEvaluator {
  const FactorLaw* law = nullptr;
  std::optional<LogSample> sample;
  const char* method = "closed_form";

  PhiEvaluator(const FactorLaw& l, const PhiOptions& opts) : law(&l) {
    if (const auto* e = std::get_if<factor::Empirical>(&l.kind())) {
      sample.emplace(e->samples);
      method = "exact_empirical";
    } else if (opts.method == PhiMethod::MonteCarlo || !l.has_closed_form_phi()) {
      if (std::holds_alternative<factor::SquaredAffineGaussian>(l.kind()) && opts.method != PhiMethod::MonteCarlo) {
        method = "quadrature";
      } else {
        const auto draws = draw_factor_samples(l, opts.mc_samples, opts.seed);
        sample.emplace(draws);
        method = "monte_carlo";
      }
    }
  }

  double log_phi(double k) const {
    if (sample) return sample->log_mean_pow(k);
    if (k == 0.0) return 0.0;
    return std::visit(Overloaded{
                          [&](const factor::TwoPoint& t) {
                            const double ta = t.p > 0.0 ? t.p * std::pow(t.a, k) : 0.0;
                            const double tb = t.p < 1.0 ? (1.0 - t.p) * std::pow(t.b, k) : 0.0;
                            return std::log(ta + tb);
                          },
                          [&](const factor::LogNormal& l) { return k * l.mu + 0.5 * k * k * l.sigma * l.sigma; },
                          [&](const factor::SquaredAffineGaussian& s) {
                            if (s.alpha == 0.0) return log_phi_sag_alpha0(s.lambda, k);
                            const auto v = sag_moment(s.alpha, s.lambda, k, 0);
                            return v.log_scale + std::log(v.integral);
                          },
                          [&](const factor::Empirical&) -> double { throw std::logic_error("unreachable"); },
                          [&](const factor::Custom&) -> double { throw std::logic_error("unreachable"); },
                      },
                      law->kind());
  }

  PhiValue value(double k) const {
    if (sample) return sample->phi(k, method);
    return {std::exp(log_phi(k)), 0.0, method};
  }

  PhiValue derivative(double k) const {
    if (sample) return sample->derivative(k, method);
    const double v = std::visit(Overloaded{
                                    [&](const factor::TwoPoint& t) {
                                      double s = 0.0;
                                      if (t.p > 0.0 && t.a > 0.0) s += t.p * std::pow(t.a, k) * std::log(t.a);
                                      if (t.p < 1.0 && t.b > 0.0) s += (1.0 - t.p) * std::pow(t.b, k) * std::log(t.b);
                                      return s;
                                    },
                                    [&](const factor::LogNormal& l) {
                                      return (l.mu + k * l.sigma * l.sigma) * std::exp(log_phi(k));
                                    },
                                    [&](const factor::SquaredAffineGaussian& s) {
                                      if (s.alpha == 0.0)
                                        return std::exp(log_phi(k)) *
                                               (std::log(2.0 * s.lambda) + boost::math::digamma(k + 0.5));
                                      const auto m = sag_moment(s.alpha, s.lambda, k, 1);
                                      return std::exp(m.log_scale) * m.integral;
                                    },
                                    [&](const factor::Empirical&) -> double { throw std::logic_error("unreachable"); },
                                    [&](const factor::Custom&) -> double { throw std::logic_error("unreachable"); },
                                },
                                law->kind());
    return {v, 0.0, method};
  }

  PhiValue mean_log() const {
    if (sample) return sample->mean_log(method);
    const double v = std::visit(Overloaded{
                                    [&](const factor::TwoPoint& t) {
                                      double s = 0.0;
                                      if (t.p > 0.0) s += t.a > 0.0 ? t.p * std::log(t.a) : -kInf;
                                      if (t.p < 1.0) s += t.b > 0.0 ? (1.0 - t.p) * std::log(t.b) : -kInf;
                                      return s;
                                    },
                                    [&](const factor::LogNormal& l) { return l.mu; },
                                    [&](const factor::SquaredAffineGaussian& s) {
                                      // E log eta^2 = -euler_gamma - log 2
                                      if (s.alpha == 0.0)
                                        return std::log(s.lambda) - std::numbers::egamma - std::log(2.0);
                                      const auto m = sag_moment(s.alpha, s.lambda, 0.0, 1);
                                      return std::exp(m.log_scale) * m.integral;
                                    },
                                    [&](const factor::Empirical&) -> double { throw std::logic_error("unreachable"); },
                                    [&](const factor::Custom&) -> double { throw std::logic_error("unreachable"); },
                                },
                                law->kind());
    return {v, 0.0, method};
  }
};

}  // namespace

const char* to_string(Nonarithmetic n) noexcept {
  switch (n) {
    case Nonarithmetic::Declared:
      return "declared";
    case Nonarithmetic::DeclaredFalse:
      return "declared_false";
    default:
      return "unknown";
  }
}

FactorLaw FactorLaw::two_point(double a, double b, double p, Nonarithmetic decl) {
  if (!(a >= 0.0 && b >= 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw std::invalid_argument("two_point factor needs finite a, b >= 0");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("two_point factor needs p in [0, 1]");
  return FactorLaw(factor::TwoPoint{a, b, p}, decl);
}

FactorLaw FactorLaw::two_point_strict(double a, double b, double p, Nonarithmetic decl) {
  if (!(a > 0.0 && a < 1.0 && b > 1.0 && std::isfinite(b) && p > 0.0 && p < 1.0))
    throw std::invalid_argument("two_point factor needs 0 < a < 1 < b and 0 < p < 1");
  return FactorLaw(factor::TwoPoint{a, b, p}, decl);
}

FactorLaw FactorLaw::lognormal(double mu, double sigma) {
  if (!std::isfinite(mu) || !(sigma >= 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("lognormal factor needs finite mu and sigma >= 0");
  return FactorLaw(factor::LogNormal{mu, sigma}, sigma > 0.0 ? Nonarithmetic::Declared : Nonarithmetic::DeclaredFalse);
}

FactorLaw FactorLaw::squared_affine_gaussian(double alpha, double lambda) {
  if (!std::isfinite(alpha) || !(lambda > 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("squared_affine_gaussian factor needs finite alpha and lambda > 0");
  return FactorLaw(factor::SquaredAffineGaussian{alpha, lambda}, Nonarithmetic::Declared);
}

FactorLaw FactorLaw::empirical(std::vector<double> samples, Nonarithmetic decl) {
  if (samples.empty()) throw std::invalid_argument("empirical factor needs samples");
  for (double v : samples)
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("empirical factor samples must be finite and >= 0");
  return FactorLaw(factor::Empirical{std::move(samples)}, decl);
}

FactorLaw FactorLaw::custom(std::function<double(StepRng&)> sampler, std::string name, Nonarithmetic decl) {
  if (!sampler) throw std::invalid_argument("custom factor needs a sampler");
  return FactorLaw(factor::Custom{std::move(sampler), std::move(name)}, decl);
}

FactorLaw FactorLaw::from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  Nonarithmetic decl = Nonarithmetic::Unknown;
  if (j.contains("nonarithmetic")) {
    if (j.at("nonarithmetic").is_boolean())
      decl = j.at("nonarithmetic").get<bool>() ? Nonarithmetic::Declared : Nonarithmetic::DeclaredFalse;
    else
      decl = nonarithmetic_from_json(j);
  }
  if (kind == "two_point") return two_point(j.at("a").get<double>(), j.at("b").get<double>(), j.at("p").get<double>(), decl);
  if (kind == "lognormal") return lognormal(j.at("mu").get<double>(), j.at("sigma").get<double>());
  if (kind == "squared_affine_gaussian")
    return squared_affine_gaussian(j.at("alpha").get<double>(), j.value("lambda", 1.0));
  if (kind == "empirical") return empirical(j.at("samples").get<std::vector<double>>(), decl);
  throw std::invalid_argument("unknown factor law kind '" + kind + "'");
}

nlohmann::json FactorLaw::to_json() const {
  nlohmann::json j = std::visit(
      Overloaded{
          [](const factor::TwoPoint& t) -> nlohmann::json { return {{"kind", "two_point"}, {"a", t.a}, {"b", t.b}, {"p", t.p}}; },
          [](const factor::LogNormal& l) -> nlohmann::json { return {{"kind", "lognormal"}, {"mu", l.mu}, {"sigma", l.sigma}}; },
          [](const factor::SquaredAffineGaussian& s) -> nlohmann::json {
            return {{"kind", "squared_affine_gaussian"}, {"alpha", s.alpha}, {"lambda", s.lambda}};
          },
          [](const factor::Empirical& e) -> nlohmann::json { return {{"kind", "empirical"}, {"n", e.samples.size()}}; },
          [](const factor::Custom& c) -> nlohmann::json { return {{"kind", "custom"}, {"name", c.name}}; },
      },
      kind_);
  j["nonarithmetic"] = to_string(nonarithmetic_);
  return j;
}

std::string FactorLaw::name() const { return to_json().at("kind").get<std::string>(); }

FactorLaw FactorLaw::scaled(double s) const {
  if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("scale must be positive and finite");
  return std::visit(Overloaded{
                        [&](const factor::TwoPoint& t) { return FactorLaw(factor::TwoPoint{t.a * s, t.b * s, t.p}, nonarithmetic_); },
                        [&](const factor::LogNormal& l) { return FactorLaw(factor::LogNormal{l.mu + std::log(s), l.sigma}, nonarithmetic_); },
                        [&](const factor::SquaredAffineGaussian& g) {
                          return FactorLaw(factor::SquaredAffineGaussian{g.alpha * std::sqrt(s), g.lambda * s}, nonarithmetic_);
                        },
                        [&](const factor::Empirical& e) {
                          std::vector<double> v(e.samples);
                          for (double& x : v) x *= s;
                          return FactorLaw(factor::Empirical{std::move(v)}, nonarithmetic_);
                        },
                        [&](const factor::Custom& c) {
                          auto inner = c.sampler;
                          return FactorLaw(factor::Custom{[inner, s](StepRng& r) { return s * inner(r); }, c.name + "*scaled"},
                                           nonarithmetic_);
                        },
                    },
                    kind_);
}

double FactorLaw::sample(StepRng& rng) const {
  return std::visit(Overloaded{
                        [&](const factor::TwoPoint& t) { return rng.uniform() < t.p ? t.a : t.b; },
                        [&](const factor::LogNormal& l) { return std::exp(l.mu + l.sigma * rng.normal()); },
                        [&](const factor::SquaredAffineGaussian& g) {
                          const double u = g.alpha + std::sqrt(g.lambda) * rng.normal();
                          return u * u;
                        },
                        [&](const factor::Empirical& e) {
                          const auto idx = static_cast<std::size_t>(rng.uniform() * static_cast<double>(e.samples.size()));
                          return e.samples[std::min(idx, e.samples.size() - 1)];
                        },
                        [&](const factor::Custom& c) { return c.sampler(rng); },
                    },
                    kind_);
}

bool FactorLaw::has_closed_form_phi() const {
  return std::visit(Overloaded{
                        [](const factor::TwoPoint&) { return true; },
                        [](const factor::LogNormal&) { return true; },
                        [](const factor::SquaredAffineGaussian& s) { return s.alpha == 0.0; },
                        [](const factor::Empirical&) { return true; },
                        [](const factor::Custom&) { return false; },
                    },
                    kind_);
}

PhiValue phi(const FactorLaw& law, double kappa, const PhiOptions& opts) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("phi needs kappa >= 0");
  return PhiEvaluator(law, opts).value(kappa);
}

PhiValue phi_derivative(const FactorLaw& law, double kappa, const PhiOptions& opts) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("phi needs kappa >= 0");
  return PhiEvaluator(law, opts).derivative(kappa);
}

PhiValue mean_log(const FactorLaw& law, const PhiOptions& opts) { return PhiEvaluator(law, opts).mean_log(); }

nlohmann::json CramerSolution::to_json() const {
  nlohmann::json j{{"kappa", kappa},
                   {"mu_kappa", mu_kappa},
                   {"mu_kappa_se", mu_kappa_se},
                   {"phi_at_kappa", phi_at_kappa},
                   {"phi_se", phi_se},
                   {"method", method},
                   {"bracket", {bracket_lo, bracket_hi}},
                   {"tolerance", tolerance},
                   {"mean_log_m", mean_log_m},
                   {"nonarithmetic", to_string(nonarithmetic)}};
  if (method == "monte_carlo") j["monte_carlo"] = {{"n", mc_samples}, {"seed", mc_seed}};
  return j;
}

CramerSolution solve_kappa(const FactorLaw& law, const SolveOptions& opts) {
  if (!(opts.kappa_max > 0.0)) throw std::invalid_argument("kappa_max must be positive");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (is_degenerate(law.kind())) throw DegenerateFactor("degenerate factor: P(M = 1) = 1");

  const PhiEvaluator ev(law, opts.phi);
  if (ev.sample && ev.sample->all_one()) throw DegenerateFactor("degenerate factor: P(M = 1) = 1");
  const PhiValue ml = ev.mean_log();
  if (!(ml.value < 0.0))
    throw NotMeanDominated("not mean-dominated: E log M = " + std::to_string(ml.value) + " >= 0");

  // log phi is convex with log phi(0) = 0 and negative slope at 0: it is
  // negative up to the root and positive after it.
  double lo = 0.0, hi = 0.0, f_lo = 0.0, f_hi = 0.0;
  bool found = false;
  double k = std::min(1e-6, opts.kappa_max);
  double prev = 0.0, f_prev = 0.0;
  while (true) {
    const double f = ev.log_phi(k);
    if (f > 0.0) {
      lo = prev;
      f_lo = f_prev;
      hi = k;
      f_hi = f;
      found = true;
      break;
    }
    prev = k;
    f_prev = f;
    if (k >= opts.kappa_max) break;
    k = std::min(2.0 * k, opts.kappa_max);
  }
  if (!found)
    throw NoCramerIndex("no Cramer index below kappa_max = " + std::to_string(opts.kappa_max));
  if (lo == 0.0) throw NoCramerIndex("Cramer index below 1e-6 is not resolved");

  std::uintmax_t max_iter = 200;
  const double tol = opts.tol;
  auto done = [tol](double a, double b) { return std::fabs(b - a) <= tol; };
  const auto [a, b] = boost::math::tools::toms748_solve([&](double x) { return ev.log_phi(x); }, lo, hi, f_lo, f_hi,
                                                        done, max_iter);

  CramerSolution s;
  s.kappa = 0.5 * (a + b);
  s.bracket_lo = a;
  s.bracket_hi = b;
  s.tolerance = tol;
  const PhiValue pv = ev.value(s.kappa);
  s.phi_at_kappa = pv.value;
  s.phi_se = pv.se;
  const PhiValue dv = ev.derivative(s.kappa);
  s.mu_kappa = dv.value;
  s.mu_kappa_se = dv.se;
  s.method = ev.method;
  s.mean_log_m = ml.value;
  s.nonarithmetic = law.nonarithmetic();
  if (std::string(ev.method) == "monte_carlo") {
    s.mc_samples = opts.phi.mc_samples;
    s.mc_seed = opts.phi.seed;
  }
  return s;
}

nlohmann::json GoldieConstants::to_json() const {
  return {{"c_plus", {{"value", c_plus.value}, {"se", c_plus.se}}},
          {"c_minus", {{"value", c_minus.value}, {"se", c_minus.se}}},
          {"kappa", kappa},
          {"mu_kappa", mu_kappa},
          {"n_samples", n_samples},
          {"seed", seed}};
}

GoldieConstants goldie_constants(std::span<const double> psi_x, std::span<const double> m_x,
                                 const CramerSolution& solution, std::uint64_t seed, bool negative_factor) {
  if (!std::isfinite(solution.kappa) || !std::isfinite(solution.mu_kappa) || !(solution.kappa > 0.0) ||
      !(solution.mu_kappa > 0.0))
    throw std::invalid_argument("goldie_constants needs finite kappa > 0 and mu_kappa > 0");
  if (psi_x.size() != m_x.size() || psi_x.size() < 2)
    throw std::invalid_argument("goldie_constants needs two equally long samples of size >= 2");
  const double k = solution.kappa;
  const double denom = k * solution.mu_kappa;
  const double n = static_cast<double>(psi_x.size());
  double sp = 0.0, sp2 = 0.0, sm = 0.0, sm2 = 0.0;
  for (std::size_t i = 0; i < psi_x.size(); ++i) {
    const double p = psi_x[i], q = m_x[i];
    const double dp = std::pow(std::max(p, 0.0), k) - std::pow(std::max(q, 0.0), k);
    const double dm = std::pow(std::max(-p, 0.0), k) - std::pow(std::max(-q, 0.0), k);
    sp += dp;
    sp2 += dp * dp;
    sm += dm;
    sm2 += dm * dm;
  }
  auto est = [&](double s, double s2) {
    const double m = s / n;
    const double var = std::max(0.0, (s2 - s * m) / (n - 1.0));
    return Estimate{m / denom, std::sqrt(var / n) / denom};
  };
  GoldieConstants g;
  g.c_plus = est(sp, sp2);
  g.c_minus = est(sm, sm2);
  if (negative_factor) {
    const Estimate avg{0.5 * (g.c_plus.value + g.c_minus.value),
                       0.5 * std::sqrt(g.c_plus.se * g.c_plus.se + g.c_minus.se * g.c_minus.se)};
    g.c_plus = g.c_minus = avg;
  }
  g.kappa = k;
  g.mu_kappa = solution.mu_kappa;
  g.n_samples = psi_x.size();
  g.seed = seed;
  return g;
}

Nonarithmetic nonarithmetic_from_json(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) return Nonarithmetic::Unknown;
  const auto v = j.at(key).get<std::string>();
  if (v == "declared") return Nonarithmetic::Declared;
  if (v == "declared_false") return Nonarithmetic::DeclaredFalse;
  if (v == "unknown") return Nonarithmetic::Unknown;
  throw std::invalid_argument("nonarithmetic must be declared, declared_false or unknown");
}

FactorLaw factor_from_scalar(const ScalarLaw& law, Nonarithmetic decl) {
  if (!law.nonnegative()) throw std::invalid_argument("factor law must be nonnegative");
  if (const auto* c = std::get_if<law::Constant>(&law.kind())) return FactorLaw::two_point(c->value, c->value, 1.0, decl);
  if (const auto* t = std::get_if<law::TwoPoint>(&law.kind())) return FactorLaw::two_point(t->a, t->b, t->p, decl);
  if (const auto* l = std::get_if<law::LogNormal>(&law.kind())) return FactorLaw::lognormal(l->mu, l->sigma);
  const ScalarLaw copy = law;
  return FactorLaw::custom([copy](StepRng& r) { return copy.sample(r); }, "scalar", decl);
}

}  // namespace tailbound
