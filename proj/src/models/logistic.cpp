#include "tailbound/models/logistic.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "tailbound/errors.hpp"
#include "tailbound/parallel.hpp"

namespace tailbound::models {

namespace {

constexpr std::size_t kMaxSigma = 1'000'000;

double psi(double xi, double w) { return xi * (w + 1.0 + 1.0 / (w - 1.0)); }

}  // namespace

LogisticSpec LogisticSpec::from_json(const nlohmann::json& j) {
  LogisticSpec s;
  if (j.contains("xi")) s.xi_law = ScalarLaw::from_json(j.at("xi"));
  if (j.contains("a_lower") && !j.at("a_lower").is_null()) s.a_lower = j.at("a_lower").get<double>();
  s.nonarithmetic = nonarithmetic_from_json(j);
  s.validate();
  return s;
}

nlohmann::json LogisticSpec::to_json() const {
  nlohmann::json j{{"xi", xi_law.to_json()}};
  j["a_lower"] = a_lower ? nlohmann::json(*a_lower) : nlohmann::json(nullptr);
  j["nonarithmetic"] = tailbound::to_string(nonarithmetic);
  return j;
}

void LogisticSpec::validate() const {
  if (!(xi_law.support_min() >= 0.25)) throw std::invalid_argument("logistic xi must take values in [1/4, inf)");
  if (a_lower) {
    const double a = *a_lower;
    if (!(a > 1.0 && a < 4.0)) throw std::invalid_argument("logistic a_lower must lie in (1, 4)");
    if (!(4.0 * xi_law.support_min() >= a)) throw std::invalid_argument("logistic a_lower violates 4 xi >= a");
  }
}

LogisticXFamily::LogisticXFamily(LogisticSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

void LogisticXFamily::sample_env(StepRng& rng, std::span<double> theta) const {
  theta[0] = spec_.xi_law.sample(rng);
  if (theta[0] < 0.25) throw ContractViolation("logistic xi sampled below 1/4");
}

void LogisticXFamily::apply(std::span<const double> theta, std::span<const double> x, std::span<double> out) const {
  out[0] = x[0] * (1.0 - x[0]) / theta[0];
}

void LogisticXFamily::sample_point(StepRng& rng, std::span<double> x) const {
  x[0] = std::pow(10.0, -6.0 * rng.uniform()) * 0.999;
}

nlohmann::json LogisticXFamily::describe() const {
  auto j = spec_.to_json();
  j["model_id"] = id();
  return j;
}

LogisticWFamily::LogisticWFamily(LogisticSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

void LogisticWFamily::sample_env(StepRng& rng, std::span<double> theta) const {
  theta[0] = spec_.xi_law.sample(rng);
  if (theta[0] < 0.25) throw ContractViolation("logistic xi sampled below 1/4");
}

void LogisticWFamily::apply(std::span<const double> theta, std::span<const double> x, std::span<double> out) const {
  out[0] = psi(theta[0], x[0]);
}

double LogisticWFamily::lipschitz_bound(std::span<const double> theta) const {
  if (!spec_.a_lower) return std::numeric_limits<double>::infinity();
  const double d = *spec_.a_lower - 1.0;
  return theta[0] * std::max(1.0, std::fabs(1.0 - 1.0 / (d * d)));
}

void LogisticWFamily::sample_point(StepRng& rng, std::span<double> x) const {
  const double lo = spec_.a_lower ? *spec_.a_lower : 1.0;
  x[0] = spec_.a_lower && rng.uniform() < 0.05 ? lo : lo + std::pow(10.0, -4.0 + 10.0 * rng.uniform());
}

bool LogisticWFamily::in_state_space(std::span<const double> x) const {
  return spec_.a_lower ? x[0] >= *spec_.a_lower : x[0] > 1.0;
}

nlohmann::json LogisticWFamily::describe() const {
  auto j = spec_.to_json();
  j["model_id"] = id();
  if (spec_.boundary_case()) j["warning"] = "xi reaches 1/4: W-chain can hit its boundary 1";
  return j;
}

SandwichBounds logistic_lower_only(const LogisticSpec& spec) {
  (void)spec;
  SandwichBounds b;
  b.lower_form = LowerForm::Affine;
  b.coefficients = [](std::span<const double> theta) {
    const double xi = theta[0];
    return Coefficients{xi, std::numeric_limits<double>::infinity(), xi, std::numeric_limits<double>::infinity()};
  };
  b.note = "upper map unavailable without a_lower";
  return b;
}

SandwichBounds logistic_bounds(const LogisticSpec& spec) {
  if (!spec.a_lower) throw std::invalid_argument("logistic upper bound needs a_lower");
  const double c = 1.0 + 1.0 / (*spec.a_lower - 1.0);
  SandwichBounds b;
  b.lower_form = LowerForm::Affine;
  b.coefficients = [c](std::span<const double> theta) {
    const double xi = theta[0];
    return Coefficients{xi, xi, xi, xi * c};
  };
  return b;
}

std::size_t logistic_absorption_exits(const LogisticSpec& spec, std::size_t steps, std::uint64_t seed) {
  if (!spec.a_lower) throw std::invalid_argument("absorption check needs a_lower");
  const LogisticWFamily fam(spec);
  const double a = *spec.a_lower;
  double w = a;
  double theta[1];
  std::size_t exits = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    draw_env(fam, seed, 0, k, theta);
    w = psi(theta[0], w);
    if (!(w >= a)) ++exits;
    if (!std::isfinite(w)) throw DivergenceError(k + 1, 0, "logistic W-chain left the finite range");
  }
  return exits;
}

nlohmann::json EmbeddedReport::to_json() const {
  return {{"sigma_mean", sigma_mean},
          {"sigma_max", sigma_max},
          {"grid_points", grid_points},
          {"lower_violations", lower_violations},
          {"upper_violations", upper_violations},
          {"unweighted_lower_violations", unweighted_lower_violations},
          {"w_star_n", w_star.size()},
          {"q1_mean", q1.mean()},
          {"q2_mean", q2.mean()}};
}

namespace {

struct Block {
  std::vector<double> xi;  // xi_1..xi_sigma
  double pi = 1.0, q1 = 0.0, q2 = 0.0, unweighted = 0.0;
};

Block draw_block(const LogisticSpec& spec, std::uint64_t seed, std::uint64_t stream) {
  Block b;
  for (std::size_t k = 0;; ++k) {
    if (k >= kMaxSigma) throw Error("embedding time exceeded 1e6 steps: P(xi >= 1/2) looks like 0");
    StepRng rng(seed, stream, k);
    const double xi = spec.xi_law.sample(rng);
    if (xi < 0.25) throw ContractViolation("logistic xi sampled below 1/4");
    const double c = b.xi.empty() ? 1.0 : 1.0 / (4.0 * b.xi.back() - 1.0);
    b.q1 = xi * (b.q1 + 1.0);
    b.q2 = xi * (b.q2 + c);
    b.pi *= xi;
    b.unweighted += xi;
    b.xi.push_back(xi);
    if (xi >= 0.5) return b;
  }
}

double apply_block(const Block& b, double w) {
  for (double xi : b.xi) w = psi(xi, w);
  return w;
}

}  // namespace

EmbeddedReport logistic_embedded(const LogisticSpec& spec, std::size_t n_samples, std::uint64_t seed,
                                 std::size_t depth) {
  if (n_samples == 0 || depth == 0) throw std::invalid_argument("embedded chain needs n_samples, depth >= 1");
  constexpr std::size_t kGrid = 40;
  std::vector<double> grid(kGrid);
  for (std::size_t g = 0; g < kGrid; ++g) grid[g] = 2.0 * std::pow(5e5, static_cast<double>(g) / (kGrid - 1));

  std::vector<double> w(n_samples), q1(n_samples), q2(n_samples);
  std::vector<std::size_t> sig(n_samples), lo_v(n_samples), up_v(n_samples), un_v(n_samples);
  parallel_for(n_samples, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      // block 0 feeds the moment and pathwise checks; blocks 1..depth the sample
      const Block first = draw_block(spec, seed, derive_stream(derive_stream(0xE3BE, i), 0));
      q1[i] = first.q1;
      q2[i] = first.q2;
      sig[i] = first.xi.size();
      for (double x : grid) {
        const double y = apply_block(first, x);
        const double scale = std::max(1.0, std::fabs(y));
        const double lo = std::max(first.pi * x, first.q1);
        const double hi = first.pi * x + first.q1 + first.q2;
        if ((y - lo) / scale < -1e-9) ++lo_v[i];
        if ((hi - y) / scale < -1e-9) ++up_v[i];
        if ((y - std::max(first.pi * x, first.unweighted)) / scale < -1e-9) ++un_v[i];
      }
      double x = 2.0;
      for (std::size_t j = depth; j >= 1; --j) {
        const Block b = draw_block(spec, seed, derive_stream(derive_stream(0xE3BE, i), j));
        x = apply_block(b, x);
        if (!std::isfinite(x)) throw DivergenceError(depth - j + 1, i, "embedded chain diverged");
      }
      w[i] = x;
    }
  });
  EmbeddedReport rep{SampleSet({}, {}), SampleSet({}, {}), SampleSet({}, {})};
  double s = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    s += static_cast<double>(sig[i]);
    rep.sigma_max = std::max(rep.sigma_max, sig[i]);
    rep.lower_violations += lo_v[i];
    rep.upper_violations += up_v[i];
    rep.unweighted_lower_violations += un_v[i];
  }
  rep.sigma_mean = s / static_cast<double>(n_samples);
  rep.grid_points = kGrid;
  SampleMeta m;
  m.model_id = "logistic_embedded";
  m.seed = seed;
  m.mode = "backward_blocks";
  m.depth = depth;
  m.start = {2.0};
  m.extra["spec"] = spec.to_json();
  rep.w_star = SampleSet(std::move(w), m);
  m.mode = "stopped_sum";
  m.depth = 0;
  m.start.clear();
  m.model_id = "logistic_q1";
  rep.q1 = SampleSet(std::move(q1), m);
  m.model_id = "logistic_q2";
  rep.q2 = SampleSet(std::move(q2), m);
  return rep;
}

FactorLaw logistic_factor_law(const LogisticSpec& spec) { return factor_from_scalar(spec.xi_law, spec.nonarithmetic); }

CertificateForm logistic_certificate_form(const LogisticSpec& spec) {
  if (!spec.a_lower) throw std::invalid_argument("logistic certificate needs a_lower");
  const double c = 1.0 + 1.0 / (*spec.a_lower - 1.0);
  CertificateForm f;
  f.form = "affine_signed";
  f.coefficients = [c](std::span<const double> theta) {
    return std::array<double, 3>{theta[0], theta[0], theta[0] * c};
  };
  f.m_law = logistic_factor_law(spec);
  return f;
}

}  // namespace tailbound::models
