#include "tailbound/sandwich.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "tailbound/errors.hpp"
#include "tailbound/parallel.hpp"

namespace tailbound {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTiny = std::numeric_limits<double>::min();

double rel_slack(double big, double small) {
  // (big - small) relative to their magnitude; negative means small > big
  const double scale = std::max({std::fabs(big), std::fabs(small), kTiny});
  return (big - small) / scale;
}

struct LineFit {
  double intercept;
  double slope;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double b = sxx > 0.0 ? sxy / sxx : 0.0;
  return {my - b * mx, b};
}

}  // namespace

const char* to_string(LowerForm f) noexcept {
  switch (f) {
    case LowerForm::MaxType:
      return "max_type";
    case LowerForm::Affine:
      return "affine";
    default:
      return "positive_part";
  }
}

double SandwichBounds::lower(const Coefficients& c, double t) const {
  const double d = shift;
  switch (lower_form) {
    case LowerForm::MaxType: {
      const double q = std::max(c.q_lower - d, 0.0);
      const double lin = t > r + d ? c.m_lower * t - d * (1.0 + c.m_lower) : 0.0;
      return std::max(q, lin);
    }
    case LowerForm::Affine:
      return c.q_lower - d * (1.0 + c.m_lower) + c.m_lower * t;
    case LowerForm::PositivePart:
      return std::max(0.0, c.q_lower - d * (1.0 + c.m_lower) + c.m_lower * t);
  }
  return 0.0;
}

double SandwichBounds::upper(const Coefficients& c, double t) const {
  return c.q_upper + shift * (1.0 + c.m_upper) + c.m_upper * t;
}

nlohmann::json SandwichBounds::to_json() const {
  nlohmann::json j{{"r", r},
                   {"lower_form", to_string(lower_form)},
                   {"shift", shift},
                   {"provenance", provenance == Provenance::ClosedForm ? "closed_form" : "numeric_mesh"}};
  if (provenance == Provenance::NumericMesh) {
    j["mesh"] = {{"max", mesh_max}, {"nodes", mesh_nodes}, {"sound", "only on the meshed range"}};
  }
  if (!note.empty()) j["note"] = note;
  return j;
}

SandwichBounds shift_reference(const SandwichBounds& bounds, double delta) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw std::invalid_argument("shift_reference needs delta >= 0");
  SandwichBounds b = bounds;
  b.shift += delta;
  return b;
}

SandwichBounds corrupt_upper(const SandwichBounds& bounds) {
  SandwichBounds b = bounds;
  auto inner = bounds.coefficients;
  b.coefficients = [inner](std::span<const double> theta) {
    Coefficients c = inner(theta);
    c.m_upper *= 0.5;
    return c;
  };
  b.note = "corrupted: upper slope halved";
  return b;
}

ReferenceShiftedFamily::ReferenceShiftedFamily(FamilyPtr base, State reference)
    : base_(std::move(base)), reference_(std::move(reference)) {
  if (reference_.size() != base_->state_dim()) throw std::invalid_argument("reference point has wrong dimension");
}

BoundingChain::BoundingChain(FamilyPtr model, SandwichBounds bounds, BoundSide side)
    : model_(std::move(model)), bounds_(std::move(bounds)), side_(side) {
  if (!bounds_.coefficients) throw std::invalid_argument("bounding chain needs a coefficient function");
}

std::string BoundingChain::id() const { return model_->id() + (side_ == BoundSide::Lower ? ":F" : ":G"); }

void BoundingChain::apply(std::span<const double> theta, std::span<const double> x, std::span<double> out) const {
  const Coefficients c = bounds_.coefficients(theta);
  out[0] = side_ == BoundSide::Lower ? bounds_.lower(c, x[0]) : bounds_.upper(c, x[0]);
}

double BoundingChain::lipschitz_bound(std::span<const double> theta) const {
  const Coefficients c = bounds_.coefficients(theta);
  if (side_ == BoundSide::Upper) return std::fabs(c.m_upper);
  if (bounds_.lower_form == LowerForm::MaxType) {
    // jump at r when the linear branch starts above the floor
    const double floor_v = std::max(c.q_lower - bounds_.shift, 0.0);
    const double at_r = c.m_lower * (bounds_.r + bounds_.shift) - bounds_.shift * (1.0 + c.m_lower);
    if (at_r > floor_v) return kInf;
  }
  return std::fabs(c.m_lower);
}

void BoundingChain::sample_point(StepRng& rng, std::span<double> x) const {
  x[0] = std::pow(10.0, -3.0 + 9.0 * rng.uniform());
}

SandwichBounds bounds_numeric_mesh(FamilyPtr family, double r, double mesh_max, std::size_t nodes) {
  if (!(r >= 0.0) || !(mesh_max > r) || nodes < 10) throw std::invalid_argument("invalid numeric mesh");
  const std::size_t d = family->state_dim();
  const State x0 = family->reference_point();
  // unit directions +-e_i
  std::vector<State> dirs;
  for (std::size_t i = 0; i < d; ++i) {
    for (double s : {1.0, -1.0}) {
      State e(d, 0.0);
      e[i] = s;
      dirs.push_back(e);
    }
  }
  const double t_start = r > 0.0 ? r * (1.0 + 1e-9) : 1e-6;
  std::vector<double> outer(nodes);
  for (std::size_t k = 0; k < nodes; ++k)
    outer[k] = t_start * std::pow(mesh_max / t_start, static_cast<double>(k) / static_cast<double>(nodes - 1));
  const std::size_t ball_nodes = r > 0.0 ? std::max<std::size_t>(nodes / 10, 2) : 1;
  std::vector<double> ball(ball_nodes);
  for (std::size_t k = 0; k < ball_nodes; ++k)
    ball[k] = ball_nodes == 1 ? 0.0 : r * static_cast<double>(k) / static_cast<double>(ball_nodes - 1);

  SandwichBounds b;
  b.r = r;
  b.lower_form = LowerForm::MaxType;
  b.provenance = Provenance::NumericMesh;
  b.mesh_max = mesh_max;
  b.mesh_nodes = nodes;
  b.note = "lower floor is the infimum over the whole mesh";
  b.coefficients = [family, x0, dirs, outer, ball, d](std::span<const double> theta) {
    Coefficients c{kInf, 0.0, kInf, 0.0};
    double global_min = kInf;
    State x(d), y(d);
    // the intercept comes from the ball, then the upper slope is fitted on top of it
    for (const auto& e : dirs) {
      for (double t : ball) {
        for (std::size_t i = 0; i < d; ++i) x[i] = x0[i] + t * e[i];
        if (!family->in_state_space(x)) continue;
        family->apply(theta, x, y);
        const double v = family->metric(x0, y);
        if (!std::isfinite(v)) throw std::domain_error("numeric mesh evaluation is not finite");
        c.q_upper = std::max(c.q_upper, v);
        global_min = std::min(global_min, v);
      }
    }
    for (const auto& e : dirs) {
      for (double t : outer) {
        for (std::size_t i = 0; i < d; ++i) x[i] = x0[i] + t * e[i];
        if (!family->in_state_space(x)) continue;
        family->apply(theta, x, y);
        const double v = family->metric(x0, y);
        if (!std::isfinite(v)) throw std::domain_error("numeric mesh evaluation is not finite");
        const double dist = family->metric(x0, x);
        c.m_lower = std::min(c.m_lower, v / dist);
        c.m_upper = std::max(c.m_upper, (v - c.q_upper) / dist);
        global_min = std::min(global_min, v);
      }
    }
    c.q_lower = std::isfinite(global_min) ? global_min : 0.0;
    if (!std::isfinite(c.m_lower)) c.m_lower = 0.0;
    return c;
  };
  return b;
}

std::size_t SandwichReport::total_violations() const {
  std::size_t t = 0;
  for (const auto& d : by_depth) t += d.violations_lower + d.violations_upper;
  return t;
}

nlohmann::json SandwichReport::to_json() const {
  nlohmann::json depths = nlohmann::json::array();
  for (const auto& d : by_depth) {
    depths.push_back({{"depth", d.depth},
                      {"violations_lower", d.violations_lower},
                      {"violations_upper", d.violations_upper},
                      {"worst_slack_lower", d.worst_slack_lower},
                      {"worst_slack_upper", d.worst_slack_upper}});
  }
  return {{"n_envs", n_envs},
          {"n_points", n_points},
          {"violations_lower", violations_lower},
          {"violations_upper", violations_upper},
          {"worst_slack_lower", worst_slack_lower},
          {"worst_slack_upper", worst_slack_upper},
          {"by_depth", depths},
          {"seed", seed},
          {"slack_tolerance", slack_tolerance},
          {"total_violations", total_violations()}};
}

SandwichReport verify_sandwich(const MapFamily& family, const SandwichBounds& bounds, std::size_t n_envs,
                               std::size_t n_points, std::uint64_t seed, const PointSampler& point_sampler,
                               std::vector<std::size_t> depths) {
  if (n_envs == 0 || n_points == 0) throw std::invalid_argument("verify_sandwich needs n_envs, n_points >= 1");
  if (!bounds.coefficients) throw std::invalid_argument("bounds have no coefficient function");
  depths.insert(depths.begin(), 1);
  std::sort(depths.begin(), depths.end());
  depths.erase(std::unique(depths.begin(), depths.end()), depths.end());
  const std::size_t max_depth = depths.back();
  const std::size_t nd = depths.size();
  const std::size_t dim = family.state_dim();
  const State x0 = family.reference_point();
  constexpr double kSlackTol = -1e-9;

  // per environment: [depth][lower count, upper count, worst lower, worst upper]
  std::vector<std::array<double, 4>> per(n_envs * nd);
  parallel_for(n_envs, [&](std::size_t begin, std::size_t end) {
    std::vector<double> theta(family.env_dim());
    std::vector<std::vector<double>> thetas(max_depth, std::vector<double>(family.env_dim()));
    std::vector<Coefficients> coefs(max_depth);
    State x(dim), y(dim);
    for (std::size_t env = begin; env < end; ++env) {
      for (std::size_t k = 0; k < max_depth; ++k) {
        draw_env(family, seed, env, k, thetas[k]);
        coefs[k] = bounds.coefficients(thetas[k]);
      }
      for (std::size_t di = 0; di < nd; ++di) per[env * nd + di] = {0.0, 0.0, kInf, kInf};
      for (std::size_t p = 0; p < n_points; ++p) {
        StepRng prng(seed, derive_stream(0x9017, env), p);
        if (point_sampler)
          point_sampler(prng, x);
        else
          family.sample_point(prng, x);
        const double t0 = family.metric(x0, x);
        double f = t0, g = t0;
        std::size_t di = 0;
        for (std::size_t k = 0; k < max_depth; ++k) {
          family.apply(thetas[k], x, y);
          x.swap(y);
          f = bounds.lower(coefs[k], f);
          g = bounds.upper(coefs[k], g);
          if (k + 1 != depths[di]) continue;
          const double dist = family.metric(x0, x);
          auto& slot = per[env * nd + di];
          const double sl = rel_slack(dist, f);
          const double su = rel_slack(g, dist);
          if (sl < kSlackTol) slot[0] += 1.0;
          if (su < kSlackTol) slot[1] += 1.0;
          slot[2] = std::min(slot[2], sl);
          slot[3] = std::min(slot[3], su);
          ++di;
        }
      }
    }
  });

  SandwichReport rep;
  rep.n_envs = n_envs;
  rep.n_points = n_points;
  rep.seed = seed;
  rep.slack_tolerance = kSlackTol;
  rep.worst_slack_lower = kInf;
  rep.worst_slack_upper = kInf;
  for (std::size_t di = 0; di < nd; ++di) {
    DepthViolations dv;
    dv.depth = depths[di];
    dv.worst_slack_lower = kInf;
    dv.worst_slack_upper = kInf;
    for (std::size_t env = 0; env < n_envs; ++env) {
      const auto& s = per[env * nd + di];
      dv.violations_lower += static_cast<std::size_t>(s[0]);
      dv.violations_upper += static_cast<std::size_t>(s[1]);
      dv.worst_slack_lower = std::min(dv.worst_slack_lower, s[2]);
      dv.worst_slack_upper = std::min(dv.worst_slack_upper, s[3]);
    }
    rep.worst_slack_lower = std::min(rep.worst_slack_lower, dv.worst_slack_lower);
    rep.worst_slack_upper = std::min(rep.worst_slack_upper, dv.worst_slack_upper);
    if (dv.depth == 1) {
      rep.violations_lower = dv.violations_lower;
      rep.violations_upper = dv.violations_upper;
    }
    rep.by_depth.push_back(dv);
  }
  return rep;
}

MonotoneCheck check_bound_shape(const MapFamily& family, const SandwichBounds& bounds, std::size_t n_envs,
                                std::uint64_t seed) {
  MonotoneCheck out;
  out.envs = n_envs;
  std::vector<double> theta(family.env_dim());
  std::vector<double> grid;
  for (int i = -30; i <= 60; ++i) grid.push_back(std::pow(10.0, i / 10.0));
  grid.push_back(bounds.r + bounds.shift);
  std::sort(grid.begin(), grid.end());
  for (std::size_t e = 0; e < n_envs; ++e) {
    draw_env(family, seed, e, 0, theta);
    const Coefficients c = bounds.coefficients(theta);
    if (bounds.lower_form == LowerForm::MaxType) {
      if (!(c.m_lower >= 0.0 && c.m_lower <= c.m_upper && c.q_lower >= 0.0 && c.q_lower <= c.q_upper))
        ++out.coefficient_order_violations;
    } else if (!(c.m_lower >= 0.0 && c.m_lower <= c.m_upper && c.q_lower <= c.q_upper)) {
      ++out.coefficient_order_violations;
    }
    double pf = -kInf, pg = -kInf;
    bool dec = false;
    for (double t : grid) {
      const double f = bounds.lower(c, t), g = bounds.upper(c, t);
      if (f < pf || g < pg) dec = true;
      pf = f;
      pg = g;
    }
    if (dec) ++out.decreasing;
    const double at = bounds.r + bounds.shift;
    const double jump = bounds.lower(c, at * (1.0 + 1e-12) + 1e-300) - bounds.lower(c, at);
    if (jump > 1e-9 * std::max(1.0, std::fabs(bounds.lower(c, at)))) ++out.discontinuous_lower;
  }
  return out;
}

bool moment_looks_finite(std::span<const double> powered) {
  const std::size_t n = powered.size();
  if (n < 100) return false;
  double sum = 0.0, mx = 0.0, half = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = powered[i];
    if (!std::isfinite(v) || v < 0.0) return false;
    sum += v;
    mx = std::max(mx, v);
    if (i < n / 2) half += v;
  }
  if (!(sum > 0.0)) return true;  // identically zero
  const double full_mean = sum / static_cast<double>(n);
  const double half_mean = half / static_cast<double>(n / 2);
  return mx / sum < 0.05 && std::fabs(half_mean - full_mean) <= 0.1 * full_mean;
}

nlohmann::json IndexBracket::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json row{{"r", e.r},
                       {"tb2", {{"p_q_lower_above_r", e.p_q_lower_above_r}, {"moment_stable", e.q_lower_moment_stable}, {"heuristic", true}}},
                       {"tb3", {{"mean_q_upper_pow_beta", e.mean_q_upper_pow_beta}, {"moment_stable", e.q_upper_moment_stable}, {"heuristic", true}}}};
    if (e.alpha)
      row["alpha"] = e.alpha->to_json();
    else
      row["alpha_error"] = e.alpha_error;
    if (e.beta)
      row["beta"] = e.beta->to_json();
    else
      row["beta_error"] = e.beta_error;
    rows.push_back(row);
  }
  nlohmann::json j{{"entries", rows},
                   {"alpha_nonincreasing", alpha_nonincreasing},
                   {"beta_nondecreasing", beta_nondecreasing},
                   {"beta_le_alpha", beta_le_alpha},
                   {"ui_ks_distance", ui_ks_distance},
                   {"ui_diagnostic_equal", ui_diagnostic_equal}};
  j["alpha_limit"] = alpha_limit ? nlohmann::json(*alpha_limit) : nlohmann::json(nullptr);
  j["beta_limit"] = beta_limit ? nlohmann::json(*beta_limit) : nlohmann::json(nullptr);
  j["point_index"] = point_index ? nlohmann::json(*point_index) : nlohmann::json(nullptr);
  return j;
}

IndexBracket index_bracket(const MapFamily& family, const std::function<SandwichBounds(double)>& bounds_at,
                           const FactorProvider& factors, std::span<const double> r_grid, const BracketOptions& opts) {
  if (r_grid.empty()) throw std::invalid_argument("index_bracket needs a nonempty r grid");
  IndexBracket out;
  const std::size_t n = opts.moment_samples;
  std::vector<double> theta(family.env_dim());
  std::vector<double> last_ml, last_mu;
  const double tol = opts.solver.tol;

  for (double r : r_grid) {
    const SandwichBounds b = bounds_at(r);
    std::vector<double> ml(n), mu(n), ql(n), qu(n);
    for (std::size_t i = 0; i < n; ++i) {
      draw_env(family, opts.seed, derive_stream(0xB7AC, 0), i, theta);
      const Coefficients c = b.coefficients(theta);
      ml[i] = c.m_lower;
      mu[i] = c.m_upper;
      ql[i] = c.q_lower;
      qu[i] = c.q_upper;
    }
    BracketEntry e;
    e.r = r;
    auto law_for = [&](const std::function<std::optional<FactorLaw>(double)>& f, std::vector<double>& s) {
      if (f) {
        if (auto l = f(r)) return *l;
      }
      return FactorLaw::empirical(s);
    };
    try {
      e.alpha = solve_kappa(law_for(factors.m_lower, ml), opts.solver);
    } catch (const std::exception& ex) {
      e.alpha_error = ex.what();
    }
    try {
      e.beta = solve_kappa(law_for(factors.m_upper, mu), opts.solver);
    } catch (const std::exception& ex) {
      e.beta_error = ex.what();
    }
    std::size_t above = 0;
    for (double q : ql)
      if (q > r) ++above;
    e.p_q_lower_above_r = static_cast<double>(above) / static_cast<double>(n);
    if (e.alpha) {
      std::vector<double> p(n);
      for (std::size_t i = 0; i < n; ++i) p[i] = std::pow(std::fabs(ql[i]), e.alpha->kappa);
      e.q_lower_moment_stable = moment_looks_finite(p);
    }
    if (e.beta) {
      std::vector<double> p(n);
      for (std::size_t i = 0; i < n; ++i) p[i] = std::pow(std::max(qu[i], 0.0), e.beta->kappa);
      e.mean_q_upper_pow_beta = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(n);
      e.q_upper_moment_stable = e.mean_q_upper_pow_beta > 0.0 && moment_looks_finite(p);
    }
    out.entries.push_back(std::move(e));
    last_ml = std::move(ml);
    last_mu = std::move(mu);
  }

  // monotonicity and ordering
  std::vector<double> ar, av, br, bv;
  for (const auto& e : out.entries) {
    if (e.alpha) {
      if (!av.empty() && e.alpha->kappa > av.back() + 10.0 * tol) out.alpha_nonincreasing = false;
      ar.push_back(1.0 / std::max(e.r, 1e-300));
      av.push_back(e.alpha->kappa);
    }
    if (e.beta) {
      if (!bv.empty() && e.beta->kappa < bv.back() - 10.0 * tol) out.beta_nondecreasing = false;
      br.push_back(1.0 / std::max(e.r, 1e-300));
      bv.push_back(e.beta->kappa);
    }
    if (e.alpha && e.beta && e.beta->kappa > e.alpha->kappa + 10.0 * tol) out.beta_le_alpha = false;
  }
  auto limit = [](const std::vector<double>& x, const std::vector<double>& y, bool decreasing) -> std::optional<double> {
    if (y.empty()) return std::nullopt;
    if (y.size() < 3) return y.back();
    const std::size_t s = y.size() - 3;
    const LineFit f = fit_line(std::span(x).subspan(s), std::span(y).subspan(s));
    return decreasing ? std::min(f.intercept, y.back()) : std::max(f.intercept, y.back());
  };
  out.alpha_limit = limit(ar, av, true);
  out.beta_limit = limit(br, bv, false);
  if (out.alpha_limit && out.beta_limit &&
      std::fabs(*out.alpha_limit - *out.beta_limit) <= std::max(1e-8, 10.0 * tol))
    out.point_index = 0.5 * (*out.alpha_limit + *out.beta_limit);

  std::sort(last_ml.begin(), last_ml.end());
  std::sort(last_mu.begin(), last_mu.end());
  const KsResult ks = ks_two_sample(last_ml, last_mu);
  out.ui_ks_distance = ks.statistic;
  out.ui_diagnostic_equal = ks.p_value > 0.01;
  return out;
}

nlohmann::json Certificate::to_json() const {
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : checks)
    cs.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"heuristic", c.heuristic}});
  nlohmann::json j{{"issued", issued}, {"form", form}, {"checks", cs}, {"failed_premises", failed_premises}};
  j["kappa"] = kappa ? nlohmann::json(*kappa) : nlohmann::json(nullptr);
  return j;
}

Certificate exact_index_certificate(const MapFamily& family, const CertificateForm& form, std::size_t n_samples,
                                    std::uint64_t seed, const SolveOptions& solver) {
  if (!form.coefficients) throw std::invalid_argument("certificate form needs coefficients");
  if (form.form != "max_type" && form.form != "affine_signed")
    throw std::invalid_argument("certificate form must be max_type or affine_signed");
  const std::size_t n = std::max<std::size_t>(n_samples, 100);
  std::vector<double> m(n), rl(n), ru(n), theta(family.env_dim());
  for (std::size_t i = 0; i < n; ++i) {
    draw_env(family, seed, derive_stream(0xCE57, 0), i, theta);
    const auto c = form.coefficients(theta);
    m[i] = c[0];
    rl[i] = c[1];
    ru[i] = c[2];
  }
  Certificate cert;
  cert.form = form.form;
  auto add = [&](std::string name, bool passed, double value, bool heuristic) {
    cert.checks.push_back({name, passed, value, heuristic});
    if (!passed) cert.failed_premises.push_back(std::move(name));
  };
  const double nn = static_cast<double>(n);
  auto frac = [&](auto pred) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (pred(i)) ++c;
    return static_cast<double>(c) / nn;
  };

  if (form.form == "max_type") {
    const bool nonneg = std::all_of(rl.begin(), rl.end(), [](double v) { return v >= 0.0; });
    add("lower coefficient nonnegative", nonneg, nonneg ? 1.0 : 0.0, false);
    const double p = frac([&](std::size_t i) { return rl[i] > form.r; });
    add("lower mass condition", p > 0.0, p, false);
  }
  const double pu = frac([&](std::size_t i) { return ru[i] > 0.0; });
  add("upper mass condition", pu > 0.0, pu, false);

  std::optional<CramerSolution> sol;
  try {
    sol = solve_kappa(form.m_law ? *form.m_law : FactorLaw::empirical(m), solver);
    add("cramer index exists", true, sol->kappa, false);
  } catch (const std::exception&) {
    add("cramer index exists", false, 0.0, false);
  }
  const Nonarithmetic na = form.m_law ? form.m_law->nonarithmetic() : Nonarithmetic::Unknown;
  add("nonarithmetic declared", na == Nonarithmetic::Declared, na == Nonarithmetic::Declared ? 1.0 : 0.0, false);

  if (sol) {
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = std::pow(std::max(ru[i], 0.0), sol->kappa);
    add("upper coefficient kappa-moment finite", moment_looks_finite(p), std::accumulate(p.begin(), p.end(), 0.0) / nn, true);
    if (form.form == "affine_signed") {
      for (std::size_t i = 0; i < n; ++i) p[i] = std::pow(std::fabs(rl[i]), sol->kappa);
      add("lower coefficient kappa-moment finite", moment_looks_finite(p), std::accumulate(p.begin(), p.end(), 0.0) / nn, true);
    }
  }
  if (form.form == "affine_signed") {
    const double a = frac([&](std::size_t i) { return m[i] <= 1.0 && rl[i] > 0.0; });
    const double b = frac([&](std::size_t i) { return m[i] >= 1.0 && rl[i] > 0.0; });
    add("P(M <= 1, R_lo > 0) > 0", a > 0.0, a, false);
    add("P(M >= 1, R_lo > 0) > 0", b > 0.0, b, false);
  }
  cert.issued = cert.failed_premises.empty();
  if (cert.issued) cert.kappa = sol->kappa;
  return cert;
}

nlohmann::json OrderingReport::to_json() const {
  auto rows = [](const std::vector<SurvivalPoint>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& p : v)
      a.push_back({{"t", p.t}, {"lower", p.lower}, {"upper", p.upper}, {"pooled_se", p.pooled_se}, {"ordered", p.ordered}});
    return a;
  };
  return {{"n_samples", n_samples},
          {"depth", depth},
          {"lower_vs_model", rows(lower_vs_model)},
          {"model_vs_upper", rows(model_vs_upper)},
          {"failures", failures}};
}

OrderingReport stochastic_ordering(FamilyPtr family, const SandwichBounds& bounds, std::size_t n_samples,
                                   std::uint64_t seed, std::size_t grid_points, std::size_t depth) {
  const SampleSet model = sample_stationary(*family, Backward{depth}, n_samples, seed);
  const std::size_t used = model.meta().depth;
  const State start = family->default_start();
  const double t0 = family->metric(family->reference_point(), start);
  SampleOptions o;
  o.start = State{t0};
  o.kind = ValueKind::Raw;  // an affine lower chain may go negative
  auto lower = std::make_shared<BoundingChain>(family, bounds, BoundSide::Lower);
  auto upper = std::make_shared<BoundingChain>(family, bounds, BoundSide::Upper);
  const SampleSet f = sample_stationary(*lower, Backward{used}, n_samples, seed, o);
  const SampleSet g = sample_stationary(*upper, Backward{used}, n_samples, seed, o);
  const auto grid = quantile_log_grid(model, 0.5, 0.999, grid_points);

  OrderingReport rep;
  rep.n_samples = n_samples;
  rep.depth = used;
  rep.lower_vs_model = compare_survival(f, model, grid);
  rep.model_vs_upper = compare_survival(model, g, grid);
  for (const auto& p : rep.lower_vs_model)
    if (!p.ordered) ++rep.failures;
  for (const auto& p : rep.model_vs_upper)
    if (!p.ordered) ++rep.failures;
  return rep;
}

}  // namespace tailbound
