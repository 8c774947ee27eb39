#include "tailbound/fixed_points.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tailbound/errors.hpp"
#include "tailbound/parallel.hpp"

namespace tailbound {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::pair<double, double> draw_mq(const ScalarLaw& m, const ScalarLaw& q, const AffineFamily::JointSampler& joint,
                                  StepRng& rng) {
  if (joint) return joint(rng);
  const double mv = m.sample(rng);
  const double qv = q.sample(rng);
  return {mv, qv};
}

double q_reference(const ScalarLaw& q) {
  const double v = std::max(std::fabs(q.support_min()), std::fabs(q.support_max()));
  return std::isfinite(v) && v > 0.0 ? v : 1.0;
}

double binom_se(double p, std::size_t n) { return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n)); }

}  // namespace

LindleyFamily::LindleyFamily(LindleySpec spec) : spec_(std::move(spec)) {
  if (!(spec_.r >= 0.0)) throw std::invalid_argument("lindley threshold r must be >= 0");
  if (!spec_.joint && (!spec_.m_law.nonnegative() || !spec_.q_law.nonnegative()))
    throw std::invalid_argument("lindley needs nonnegative M and Q laws");
}

void LindleyFamily::sample_env(StepRng& rng, std::span<double> theta) const {
  const auto [m, q] = draw_mq(spec_.m_law, spec_.q_law, spec_.joint, rng);
  if (m < 0.0 || q < 0.0) throw ContractViolation("lindley joint sampler produced a negative M or Q");
  theta[0] = m;
  theta[1] = q;
}

void LindleyFamily::apply(std::span<const double> theta, std::span<const double> x, std::span<double> out) const {
  const double lin = x[0] > spec_.r ? theta[0] * x[0] : 0.0;
  out[0] = std::max(theta[1], lin);
}

double LindleyFamily::lipschitz_bound(std::span<const double> theta) const {
  if (spec_.r > 0.0 && theta[0] * spec_.r > theta[1]) return kInf;
  return theta[0];
}

void LindleyFamily::sample_point(StepRng& rng, std::span<double> x) const {
  x[0] = std::pow(10.0, -3.0 + 9.0 * rng.uniform());
}

nlohmann::json LindleyFamily::describe() const {
  return {{"model_id", id()}, {"r", spec_.r}, {"m", spec_.m_law.to_json()}, {"q", spec_.q_law.to_json()}};
}

SampleSet simulate_perpetuity(const AffineSpec& spec, std::size_t n_samples, const Truncation& trunc,
                              std::uint64_t seed) {
  if (trunc.max_terms == 0 || !(trunc.eps > 0.0)) throw std::invalid_argument("invalid truncation");
  const double q_ref = q_reference(spec.q_law);
  std::vector<double> values(n_samples);
  std::vector<std::size_t> terms(n_samples);
  parallel_for(n_samples, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double pi = 1.0, s = 0.0;
      std::size_t n = 0;
      while (n < trunc.max_terms) {
        StepRng rng(seed, i, n);  // same stream layout as AffineFamily
        const auto [m, q] = draw_mq(spec.m_law, spec.q_law, spec.joint, rng);
        s += pi * q;
        pi *= m;
        ++n;
        if (!std::isfinite(s) || std::fabs(s) > 1e300)
          throw DivergenceError(n, i, "perpetuity series diverged (replicate " + std::to_string(i) + ")");
        if (pi == 0.0 || std::fabs(pi) * q_ref < trunc.eps * std::fabs(s)) break;
      }
      values[i] = s;
      terms[i] = n;
    }
  });
  SampleMeta meta;
  meta.model_id = "perpetuity";
  meta.seed = seed;
  meta.mode = "perpetuity_series";
  meta.kind = ValueKind::Raw;
  std::size_t at_max = 0, tmax = 0;
  double tsum = 0.0;
  for (auto t : terms) {
    tsum += static_cast<double>(t);
    tmax = std::max(tmax, t);
    if (t >= trunc.max_terms) ++at_max;
  }
  meta.depth = tmax;
  meta.extra["truncation"] = {{"max_terms", trunc.max_terms},
                              {"eps", trunc.eps},
                              {"mean_terms", n_samples ? tsum / static_cast<double>(n_samples) : 0.0},
                              {"max_terms_used", tmax},
                              {"hit_max_terms", at_max}};
  meta.extra["m"] = spec.m_law.to_json();
  meta.extra["q"] = spec.q_law.to_json();
  if (at_max > 0) meta.warnings.push_back("some series reached max_terms");
  return SampleSet(std::move(values), std::move(meta));
}

SampleSet simulate_lindley_variant(const LindleySpec& spec, std::size_t n_samples, std::size_t depth,
                                   std::uint64_t seed) {
  if (depth == 0) throw std::invalid_argument("lindley depth must be >= 1");
  const LindleyFamily fam(spec);
  SampleOptions o;
  o.start = State{0.0};
  o.model_id = "lindley";
  return sample_stationary(fam, Backward{depth}, n_samples, seed, o);
}

nlohmann::json DegeneracyReport::to_json() const {
  nlohmann::json r = nlohmann::json::array();
  for (const auto& row : rows) r.push_back({{"c", row.c}, {"p_fixed", row.p_fixed}, {"p_up", row.p_up}});
  return {{"rows", r},
          {"p_m_le1_q_pos", p_m_le1_q_pos},
          {"p_m_ge1_q_pos", p_m_ge1_q_pos},
          {"degenerate_point", degenerate_point},
          {"invariant_halfline_possible", invariant_halfline_possible},
          {"sufficient_condition_holds", sufficient_condition_holds},
          {"grid", {grid_min, grid_max}},
          {"n", n}};
}

DegeneracyReport check_degeneracy(const AffineSpec& spec, std::span<const double> c_grid, std::size_t n,
                                  std::uint64_t seed) {
  if (n == 0 || c_grid.empty()) throw std::invalid_argument("check_degeneracy needs n >= 1 and a grid");
  std::vector<double> ms(n), qs(n);
  for (std::size_t i = 0; i < n; ++i) {
    StepRng rng(seed, derive_stream(0xDE6E, 0), i);
    std::tie(ms[i], qs[i]) = draw_mq(spec.m_law, spec.q_law, spec.joint, rng);
  }
  DegeneracyReport rep;
  rep.n = n;
  rep.grid_min = *std::min_element(c_grid.begin(), c_grid.end());
  rep.grid_max = *std::max_element(c_grid.begin(), c_grid.end());
  const double nn = static_cast<double>(n);
  std::size_t a = 0, b = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (ms[i] <= 1.0 && qs[i] > 0.0) ++a;
    if (ms[i] >= 1.0 && qs[i] > 0.0) ++b;
  }
  rep.p_m_le1_q_pos = static_cast<double>(a) / nn;
  rep.p_m_ge1_q_pos = static_cast<double>(b) / nn;
  rep.sufficient_condition_holds = a > 0 && b > 0;
  for (double c : c_grid) {
    std::size_t fixed = 0, up = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = ms[i] * c + qs[i];
      if (std::fabs(v - c) <= 1e-12 * std::max(1.0, std::fabs(c))) ++fixed;
      else if (v > c) ++up;
    }
    DegeneracyRow row{c, static_cast<double>(fixed) / nn, static_cast<double>(up) / nn};
    if (fixed == n) rep.degenerate_point = true;
    if (up == 0) rep.invariant_halfline_possible = true;
    rep.rows.push_back(row);
  }
  return rep;
}

nlohmann::json FirstPassageReport::to_json() const {
  nlohmann::json r = nlohmann::json::array();
  for (const auto& row : rows)
    r.push_back({{"t", row.t},
                 {"lhs", row.lhs},
                 {"lhs_se", row.lhs_se},
                 {"p_q_above_r", row.p_q_above_r},
                 {"p_tau_finite", row.p_tau_finite},
                 {"rhs", row.rhs},
                 {"rhs_se", row.rhs_se},
                 {"holds", row.holds}});
  return {{"rows", r}, {"n", n}, {"all_hold", all_hold}};
}

FirstPassageReport first_passage_lower_bound_check(const LindleySpec& spec, std::span<const double> t_grid,
                                                   std::size_t n, std::uint64_t seed) {
  if (!(spec.r > 0.0)) throw std::invalid_argument("first passage check needs r > 0");
  if (n < 2 || t_grid.empty()) throw std::invalid_argument("first passage check needs n >= 2 and a grid");
  const double t_min = *std::min_element(t_grid.begin(), t_grid.end());
  if (!(t_min > 0.0)) throw std::invalid_argument("first passage grid must be positive");
  const double q_ref = q_reference(spec.q_law);
  constexpr std::size_t kMaxTerms = 10'000;

  // sup_n Pi_{n-1} Q_n and sup_n Pi_{n-1} on independent streams
  std::vector<double> sup_pq(n), sup_p(n);
  std::size_t q_above = 0;
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double pi = 1.0, best = 0.0;
      for (std::size_t k = 0; k < kMaxTerms; ++k) {
        StepRng rng(seed, derive_stream(0xF1A5, i), k);
        const auto [m, q] = draw_mq(spec.m_law, spec.q_law, spec.joint, rng);
        best = std::max(best, pi * q);
        pi *= m;
        if (pi * q_ref < 1e-12 * t_min) break;
      }
      sup_pq[i] = best;
      pi = 1.0;
      best = 1.0;  // Pi_0
      for (std::size_t k = 0; k < kMaxTerms; ++k) {
        StepRng rng(seed, derive_stream(0xF1A6, i), k);
        const auto [m, q] = draw_mq(spec.m_law, spec.q_law, spec.joint, rng);
        (void)q;
        pi *= m;
        best = std::max(best, pi);
        if (pi < 1e-12 * t_min / spec.r) break;
      }
      sup_p[i] = best;
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    StepRng rng(seed, derive_stream(0xF1A7, 0), i);
    const auto [m, q] = draw_mq(spec.m_law, spec.q_law, spec.joint, rng);
    (void)m;
    if (q > spec.r) ++q_above;
  }
  FirstPassageReport rep;
  rep.n = n;
  const double pq = static_cast<double>(q_above) / static_cast<double>(n);
  for (double t : t_grid) {
    FirstPassageRow row;
    row.t = t;
    std::size_t l = 0, f = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (sup_pq[i] > t) ++l;
      if (sup_p[i] > t / spec.r) ++f;
    }
    row.lhs = static_cast<double>(l) / static_cast<double>(n);
    row.lhs_se = binom_se(row.lhs, n);
    row.p_q_above_r = pq;
    row.p_tau_finite = static_cast<double>(f) / static_cast<double>(n);
    row.rhs = pq * row.p_tau_finite;
    const double se_q = binom_se(pq, n), se_t = binom_se(row.p_tau_finite, n);
    row.rhs_se = std::sqrt(row.p_tau_finite * row.p_tau_finite * se_q * se_q + pq * pq * se_t * se_t);
    row.holds = row.lhs >= row.rhs - 3.0 * std::sqrt(row.lhs_se * row.lhs_se + row.rhs_se * row.rhs_se);
    if (!row.holds) rep.all_hold = false;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace tailbound
