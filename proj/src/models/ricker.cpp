#include "tailbound/models/ricker.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "tailbound/errors.hpp"
#include "tailbound/parallel.hpp"

namespace tailbound::models {

namespace {

constexpr double kE = std::numbers::e;

double psi(double beta, double gamma, double w) { return beta * w * std::exp(gamma / w); }

void draw(const RickerSpec& s, StepRng& rng, std::span<double> theta) {
  theta[0] = s.beta_law.sample(rng);
  theta[1] = s.gamma_law.sample(rng);
  if (!(theta[0] > 0.0) || theta[1] < 0.0) throw ContractViolation("ricker needs beta > 0 and gamma >= 0");
}

}  // namespace

RickerSpec RickerSpec::from_json(const nlohmann::json& j) {
  RickerSpec s;
  if (j.contains("beta")) s.beta_law = ScalarLaw::from_json(j.at("beta"));
  if (j.contains("gamma")) s.gamma_law = ScalarLaw::from_json(j.at("gamma"));
  if (j.contains("a_lower") && !j.at("a_lower").is_null()) s.a_lower = j.at("a_lower").get<double>();
  if (j.value("coupling", std::string("independent")) != "independent")
    throw std::invalid_argument("ricker supports independent beta and gamma only");
  s.nonarithmetic = nonarithmetic_from_json(j);
  s.validate();
  return s;
}

nlohmann::json RickerSpec::to_json() const {
  nlohmann::json j{{"beta", beta_law.to_json()},
                   {"gamma", gamma_law.to_json()},
                   {"coupling", "independent"},
                   {"nonarithmetic", tailbound::to_string(nonarithmetic)}};
  j["a_lower"] = a_lower ? nlohmann::json(*a_lower) : nlohmann::json(nullptr);
  return j;
}

void RickerSpec::validate() const {
  if (!(beta_law.support_min() > 0.0) && !std::holds_alternative<law::LogNormal>(beta_law.kind()))
    throw std::invalid_argument("ricker beta law must be positive");
  if (!gamma_law.nonnegative()) throw std::invalid_argument("ricker gamma law must be nonnegative");
  if (a_lower) {
    if (!(*a_lower > 0.0)) throw std::invalid_argument("ricker a_lower must be positive");
    const double rho_min = beta_law.support_min() * gamma_law.support_min();
    if (!(rho_min * kE >= *a_lower * (1.0 - 1e-15)))
      throw std::invalid_argument("ricker a_lower violates rho >= a/e");
  }
}

RickerXFamily::RickerXFamily(RickerSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

void RickerXFamily::sample_env(StepRng& rng, std::span<double> theta) const { draw(spec_, rng, theta); }

void RickerXFamily::apply(std::span<const double> theta, std::span<const double> x, std::span<double> out) const {
  out[0] = x[0] / theta[0] * std::exp(-theta[1] * x[0]);
}

State RickerXFamily::default_start() const { return {spec_.a_lower ? 1.0 / *spec_.a_lower : 0.5}; }

void RickerXFamily::sample_point(StepRng& rng, std::span<double> x) const {
  x[0] = std::pow(10.0, -6.0 + 7.0 * rng.uniform());
}

nlohmann::json RickerXFamily::describe() const {
  auto j = spec_.to_json();
  j["model_id"] = id();
  return j;
}

RickerWFamily::RickerWFamily(RickerSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

void RickerWFamily::sample_env(StepRng& rng, std::span<double> theta) const { draw(spec_, rng, theta); }

void RickerWFamily::apply(std::span<const double> theta, std::span<const double> x, std::span<double> out) const {
  out[0] = psi(theta[0], theta[1], x[0]);
}

double RickerWFamily::lipschitz_bound(std::span<const double> theta) const {
  if (!spec_.a_lower) return theta[1] == 0.0 ? theta[0] : std::numeric_limits<double>::infinity();
  const double u = theta[1] / *spec_.a_lower;
  return theta[0] * std::max(1.0, std::exp(u) * (u - 1.0));
}

State RickerWFamily::default_start() const { return {spec_.a_lower ? *spec_.a_lower : 2.0}; }

void RickerWFamily::sample_point(StepRng& rng, std::span<double> x) const {
  if (spec_.a_lower) {
    const double a = *spec_.a_lower;
    x[0] = rng.uniform() < 0.05 ? a : a + std::pow(10.0, -4.0 + 10.0 * rng.uniform());
  } else {
    x[0] = std::pow(10.0, -3.0 + 9.0 * rng.uniform());
  }
}

bool RickerWFamily::in_state_space(std::span<const double> x) const {
  return spec_.a_lower ? x[0] >= *spec_.a_lower : x[0] > 0.0;
}

nlohmann::json RickerWFamily::describe() const {
  auto j = spec_.to_json();
  j["model_id"] = id();
  if (spec_.gamma_degenerate()) j["warning"] = "gamma = 0: linear chain, E rho^{-1} infinite";
  return j;
}

SandwichBounds ricker_lower_only(const RickerSpec& spec) {
  (void)spec;
  SandwichBounds b;
  b.r = 0.0;
  b.lower_form = LowerForm::MaxType;
  b.coefficients = [](std::span<const double> theta) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return Coefficients{theta[0], inf, theta[0] * theta[1] * kE, inf};
  };
  b.note = "upper map unavailable without a_lower";
  return b;
}

double ricker_validity_gap(const RickerSpec& spec, double r) {
  if (!spec.a_lower) throw std::invalid_argument("ricker upper bound needs a_lower");
  if (!(r > 0.0)) throw std::invalid_argument("ricker r must be positive");
  const double a = *spec.a_lower;
  const double g_lo = spec.gamma_law.support_min(), g_hi = spec.gamma_law.support_max();
  if (!std::isfinite(g_hi)) return std::numeric_limits<double>::infinity();
  // Psi(r gamma) >= Psi(a) <=> r gamma e^{1/r} >= a e^{gamma/a}; beta cancels
  double worst = -std::numeric_limits<double>::infinity();
  constexpr int kGrid = 2001;
  for (int i = 0; i < kGrid; ++i) {
    const double g = g_hi == g_lo ? g_lo : g_lo + (g_hi - g_lo) * i / (kGrid - 1.0);
    if (r * g <= a) continue;
    worst = std::max(worst, (a * std::exp(g / a) - r * g * std::exp(1.0 / r)) / (a * std::exp(g / a)));
    if (g_hi == g_lo) break;
  }
  return worst;
}

SandwichBounds ricker_bounds(const RickerSpec& spec, double r) {
  const double gap = ricker_validity_gap(spec, r);
  if (gap > 0.0)
    throw std::invalid_argument("G_r invalid at r = " + std::to_string(r) +
                                ": max of Psi over [a, r gamma] is not at r gamma; use a larger r");
  SandwichBounds b;
  b.r = 0.0;
  b.lower_form = LowerForm::MaxType;
  const double e1r = std::exp(1.0 / r);
  b.coefficients = [r, e1r](std::span<const double> theta) {
    const double rho = theta[0] * theta[1];
    return Coefficients{theta[0], theta[0] * e1r, rho * kE, r * rho * e1r};
  };
  b.note = "upper map G_r with r = " + std::to_string(r);
  return b;
}

std::size_t ricker_absorption_exits(const RickerSpec& spec, std::size_t steps, std::uint64_t seed) {
  if (!spec.a_lower) throw std::invalid_argument("absorption check needs a_lower");
  const RickerWFamily fam(spec);
  const double a = *spec.a_lower;
  double w = a;
  double theta[2];
  std::size_t exits = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    draw_env(fam, seed, 0, k, theta);
    w = psi(theta[0], theta[1], w);
    if (!(w >= a)) ++exits;
    if (!std::isfinite(w)) throw DivergenceError(k + 1, 0, "ricker W-chain left the finite range");
  }
  return exits;
}

FactorLaw ricker_factor_law(const RickerSpec& spec) { return factor_from_scalar(spec.beta_law, spec.nonarithmetic); }

FactorProvider ricker_factor_provider(const RickerSpec& spec) {
  const FactorLaw base = ricker_factor_law(spec);
  FactorProvider p;
  p.m_lower = [base](double) { return std::optional<FactorLaw>(base); };
  p.m_upper = [base](double r) { return std::optional<FactorLaw>(base.scaled(std::exp(1.0 / r))); };
  return p;
}

nlohmann::json RickerEmbeddedReport::to_json() const {
  return {{"sigma_mean", sigma_mean},
          {"grid_points", grid_points},
          {"lower_violations", lower_violations},
          {"unweighted_lower_violations", unweighted_lower_violations},
          {"p_hit", p_hit},
          {"w_star_n", w_star.size()},
          {"q1_mean", q1.mean()}};
}

RickerEmbeddedReport ricker_embedded(const RickerSpec& spec, double a, const SampleSet& pihat, std::uint64_t seed) {
  if (!(a > 0.0)) throw std::invalid_argument("embedding threshold a must be positive");
  const std::size_t n = pihat.size();
  if (n == 0) throw std::invalid_argument("embedding needs stationary samples");
  const double thr = a / kE;
  constexpr std::size_t kGrid = 40;
  constexpr std::size_t kMaxSigma = 1'000'000;
  std::vector<double> grid(kGrid);
  for (std::size_t g = 0; g < kGrid; ++g) grid[g] = a * std::pow(1e6, static_cast<double>(g) / (kGrid - 1));

  std::vector<double> ws(n), q1(n);
  std::vector<std::size_t> sig(n), lo_v(n), un_v(n);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    std::vector<double> betas, gammas;
    for (std::size_t i = begin; i < end; ++i) {
      const std::uint64_t stream = derive_stream(0x51C4, i);
      // one block: draw until rho >= a/e
      betas.clear();
      gammas.clear();
      double pi = 1.0, q = 0.0, plain = 0.0;
      for (std::size_t k = 0;; ++k) {
        if (k >= kMaxSigma) throw Error("embedding time exceeded 1e6 steps: P(rho >= a/e) looks like 0");
        StepRng rng(seed, stream, k);
        double th[2];
        draw(spec, rng, th);
        q = std::max(q * th[0], th[0] * th[1] * kE);
        pi *= th[0];
        plain += th[0] * th[1] * kE;
        betas.push_back(th[0]);
        gammas.push_back(th[1]);
        if (th[0] * th[1] >= thr) break;
      }
      sig[i] = betas.size();
      q1[i] = q;
      for (double x : grid) {
        double y = x;
        for (std::size_t k = 0; k < betas.size(); ++k) y = psi(betas[k], gammas[k], y);
        if (!std::isfinite(y)) continue;
        const double scale = std::max(1.0, y);
        if ((y - std::max(pi * x, q)) / scale < -1e-9) ++lo_v[i];
        if ((y - std::max(pi * x, plain)) / scale < -1e-9) ++un_v[i];
      }
      // stationary draw of the hit chain: Psi(W) with the environment conditioned on rho >= a/e
      StepRng rng(seed, derive_stream(0x51C5, i), 0);
      double th[2];
      for (std::size_t k = 0;; ++k) {
        if (k >= kMaxSigma) throw Error("rejection sampling of rho >= a/e failed");
        draw(spec, rng, th);
        if (th[0] * th[1] >= thr) break;
      }
      ws[i] = psi(th[0], th[1], pihat.values()[i]);
    }
  });
  RickerEmbeddedReport rep{SampleSet({}, {}), SampleSet({}, {})};
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s += static_cast<double>(sig[i]);
    rep.lower_violations += lo_v[i];
    rep.unweighted_lower_violations += un_v[i];
  }
  rep.sigma_mean = s / static_cast<double>(n);
  rep.p_hit = 1.0 / rep.sigma_mean;
  rep.grid_points = kGrid;
  SampleMeta m;
  m.model_id = "ricker_embedded";
  m.seed = seed;
  m.mode = "conditioned_step";
  m.extra["spec"] = spec.to_json();
  m.extra["a"] = a;
  rep.w_star = SampleSet(std::move(ws), m);
  m.model_id = "ricker_q1";
  m.mode = "stopped_max";
  rep.q1 = SampleSet(std::move(q1), m);
  return rep;
}

}  // namespace tailbound::models
