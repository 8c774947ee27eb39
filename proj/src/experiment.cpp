#include "tailbound/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>

#include "tailbound/cramer.hpp"
#include "tailbound/fixed_points.hpp"
#include "tailbound/ifs.hpp"
#include "tailbound/models/arch.hpp"
#include "tailbound/models/dual_law.hpp"
#include "tailbound/models/logistic.hpp"
#include "tailbound/models/mirek.hpp"
#include "tailbound/models/registry.hpp"
#include "tailbound/models/ricker.hpp"
#include "tailbound/parallel.hpp"
#include "tailbound/sandwich.hpp"
#include "tailbound/tail_stats.hpp"

namespace tailbound {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double num(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw std::invalid_argument(std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

std::size_t count(const json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw std::invalid_argument(std::string("'") + key + "' must be a nonnegative integer");
  return v.get<std::size_t>();
}

std::vector<double> num_list(const json& j, const char* key, std::vector<double> fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_array()) throw std::invalid_argument(std::string("'") + key + "' must be an array");
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) throw std::invalid_argument(std::string("'") + key + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = n == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1));
  return g;
}

/// Maps library exceptions onto the exit-code categories.
template <class F>
auto in_stage(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw StageError(stage, FailureKind::Usage, e.what());
  } catch (const NoCramerIndex& e) {
    throw StageError(stage, FailureKind::Analytic, e.what());
  } catch (const NotMeanDominated& e) {
    throw StageError(stage, FailureKind::Analytic, e.what());
  } catch (const DegenerateFactor& e) {
    throw StageError(stage, FailureKind::Analytic, e.what());
  } catch (const std::exception& e) {
    throw StageError(stage, FailureKind::Runtime, e.what());
  }
}

struct Context {
  const ExperimentConfig& config;
  models::Model model;
  std::optional<SampleSet> sample;
  std::optional<CramerSolution> kappa;
  std::vector<std::string> files;

  std::size_t depth_or_default(const json& op) const { return count(op, "depth", model.default_depth); }

  const CramerSolution& model_kappa() {
    if (!kappa) {
      if (!model.m_law) throw std::invalid_argument("model '" + model.id + "' has no factor law");
      kappa = solve_kappa(*model.m_law);
    }
    return *kappa;
  }

  double kappa_arg(const json& op) {
    if (!op.contains("kappa") || (op.at("kappa").is_string() && op.at("kappa") == "solve"))
      return model_kappa().kappa + num(op, "kappa_offset", 0.0);
    return num(op, "kappa", 0.0) + num(op, "kappa_offset", 0.0);
  }

  std::string path(const std::string& name) const { return (fs::path(config.output_dir) / name).string(); }
  bool writing() const { return !config.output_dir.empty(); }
};

struct OpOutput {
  json result;
  json facts = json::object();
};

using OpFn = std::function<OpOutput(Context&, const json&)>;

json estimate_with_scale(const TailEstimate& e, double scale) {
  json j = e.to_json();
  j["reported_index"] = e.index * scale;
  j["reported_ci"] = {e.ci_low * scale, e.ci_high * scale};
  return j;
}

OpOutput op_solve_kappa(Context& ctx, const json& op) {
  SolveOptions so;
  so.tol = num(op, "tol", so.tol);
  const bool mc = op.value("monte_carlo", false);
  if (mc) {
    so.phi.method = PhiMethod::MonteCarlo;
    so.phi.mc_samples = count(op, "mc_samples", so.phi.mc_samples);
    so.phi.seed = ctx.config.seed;
  }
  CramerSolution sol;
  if (op.contains("law")) {
    sol = solve_kappa(FactorLaw::from_json(op.at("law")), so);
  } else {
    if (!ctx.model.m_law) throw std::invalid_argument("model '" + ctx.model.id + "' has no factor law");
    sol = solve_kappa(*ctx.model.m_law, so);
    if (!mc) ctx.kappa = sol;
  }
  OpOutput out;
  out.result = sol.to_json();
  out.result["reported_index"] = sol.kappa * ctx.model.index_scale;
  out.facts["kappa"] = sol.kappa;
  out.facts["index"] = sol.kappa * ctx.model.index_scale;
  return out;
}

OpOutput op_hill(Context& ctx, const json& op) {
  const TailEstimate e = hill(*ctx.sample, count(op, "k", 0));
  OpOutput out;
  out.result = estimate_with_scale(e, ctx.model.index_scale);
  out.facts["index"] = e.index * ctx.model.index_scale;
  return out;
}

OpOutput op_loglog(Context& ctx, const json& op) {
  const TailEstimate e = loglog_tail(*ctx.sample, num(op, "q_lo", 0.98), num(op, "q_hi", 0.9998));
  OpOutput out;
  out.result = estimate_with_scale(e, ctx.model.index_scale);
  out.facts["index"] = e.index * ctx.model.index_scale;
  return out;
}

OpOutput op_exactness(Context& ctx, const json& op) {
  ExactnessOptions eo;
  eo.grid_points = count(op, "grid_points", eo.grid_points);
  eo.decade = num(op, "decade", eo.decade);
  eo.top_fraction = num(op, "top_fraction", eo.top_fraction);
  eo.min_top = count(op, "min_top", eo.min_top);
  const double k = ctx.kappa_arg(op);
  const ExactnessReport rep = exactness(*ctx.sample, k, eo);
  OpOutput out;
  out.result = rep.to_json();
  // slope in log t for the reported quantity (t^2 for ARCH)
  out.result["reported_slope"] = rep.slope * ctx.model.index_scale;
  out.result["reported_kappa"] = k * ctx.model.index_scale;
  out.facts["verdict"] = to_string(rep.verdict);
  out.facts["slope"] = rep.slope * ctx.model.index_scale;
  return out;
}

SandwichBounds model_bounds(Context& ctx, const json& op) {
  if (!ctx.model.bounds) throw std::invalid_argument("model '" + ctx.model.id + "' has no closed-form sandwich");
  return ctx.model.bounds(num(op, "r", ctx.model.default_r));
}

OpOutput op_sandwich_verify(Context& ctx, const json& op) {
  SandwichBounds b = model_bounds(ctx, op);
  if (op.value("corrupt", false)) b = corrupt_upper(b);
  const std::size_t envs = count(op, "envs", 10'000);
  const std::size_t points = count(op, "points", 100);
  if (envs == 0 || points == 0) throw std::invalid_argument("envs and points must be positive");
  std::vector<std::size_t> depths{2, 5};
  if (op.contains("depths")) depths = op.at("depths").get<std::vector<std::size_t>>();
  const SandwichReport rep =
      verify_sandwich(*ctx.model.family, b, envs, points, ctx.config.seed, {}, std::move(depths));
  const MonotoneCheck shape = check_bound_shape(*ctx.model.family, b, std::min<std::size_t>(envs, 1000), ctx.config.seed);
  OpOutput out;
  out.result = rep.to_json();
  out.result["bounds"] = b.to_json();
  out.result["shape"] = {{"envs", shape.envs},
                         {"decreasing", shape.decreasing},
                         {"discontinuous_lower", shape.discontinuous_lower},
                         {"coefficient_order_violations", shape.coefficient_order_violations}};
  out.facts["violations"] = rep.total_violations();
  return out;
}

OpOutput op_stochastic_ordering(Context& ctx, const json& op) {
  const SandwichBounds b = model_bounds(ctx, op);
  const OrderingReport rep = stochastic_ordering(ctx.model.family, b, count(op, "n", ctx.config.n_samples),
                                                 ctx.config.seed, count(op, "grid_points", 20),
                                                 ctx.depth_or_default(op));
  OpOutput out;
  out.result = rep.to_json();
  out.facts["ordered"] = rep.failures == 0;
  out.facts["violations"] = rep.failures;
  return out;
}

OpOutput op_certificate(Context& ctx, const json& op) {
  if (!ctx.model.certificate)
    throw std::invalid_argument("model '" + ctx.model.id + "' has no certificate form");
  const Certificate c = exact_index_certificate(*ctx.model.family, ctx.model.certificate(),
                                                count(op, "n", 100'000), ctx.config.seed);
  OpOutput out;
  out.result = c.to_json();
  out.facts["issued"] = c.issued;
  if (c.kappa) out.facts["kappa"] = *c.kappa;
  return out;
}

OpOutput op_index_bracket(Context& ctx, const json& op) {
  if (!ctx.model.bounds) throw std::invalid_argument("model '" + ctx.model.id + "' has no closed-form sandwich");
  const auto grid = num_list(op, "r_grid", {});
  if (grid.empty()) throw std::invalid_argument("index_bracket needs 'r_grid'");
  BracketOptions bo;
  bo.seed = ctx.config.seed;
  bo.moment_samples = count(op, "moment_samples", bo.moment_samples);
  const IndexBracket br = index_bracket(*ctx.model.family, ctx.model.bounds,
                                        ctx.model.factors.value_or(FactorProvider{}), grid, bo);
  OpOutput out;
  out.result = br.to_json();
  out.facts["increasing"] = br.beta_nondecreasing;
  if (!br.entries.empty() && br.entries.back().beta) out.facts["kappa"] = br.entries.back().beta->kappa;
  return out;
}

OpOutput op_goldie(Context& ctx, const json& op) {
  if (!ctx.model.scalar_state || !ctx.model.certificate)
    throw std::invalid_argument("goldie needs a scalar model with a per-environment factor");
  const CertificateForm form = ctx.model.certificate();
  const CramerSolution& sol = ctx.model_kappa();
  const SampleSet& s = *ctx.sample;
  const MapFamily& fam = *ctx.model.family;
  const std::size_t n = s.size();
  std::vector<double> psi(n), mx(n);
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    std::vector<double> theta(fam.env_dim());
    double y = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      draw_env(fam, ctx.config.seed, 0x601D, i, theta);
      const double x = s.values()[i];
      fam.apply(theta, std::span<const double>(&x, 1), std::span<double>(&y, 1));
      psi[i] = y;
      mx[i] = form.coefficients(theta)[0] * x;
    }
  });
  const GoldieConstants g = goldie_constants(psi, mx, sol, ctx.config.seed);
  OpOutput out;
  out.result = g.to_json();
  const double c = g.c_plus.value, se = g.c_plus.se;
  const bool zero = std::fabs(c) <= 3.0 * se;
  out.result["statistically_zero"] = zero;
  out.facts["c_plus_zero"] = zero;
  ExactnessOptions eo;
  eo.top_fraction = num(op, "top_fraction", eo.top_fraction);
  eo.decade = num(op, "decade", eo.decade);
  try {
    const ExactnessReport rep = exactness(s, sol.kappa, eo);
    double mean = 0.0;
    for (double v : rep.scaled_survival) mean += v;
    mean /= static_cast<double>(rep.scaled_survival.size());
    out.result["empirical_limit"] = mean;
    if (c != 0.0) {
      const double rel = std::fabs(mean - c) / std::fabs(c);
      out.result["relative_error"] = rel;
      out.facts["relative_error"] = rel;
    }
  } catch (const std::exception& e) {
    // bounded support: no tail decade to average over
    out.result["empirical_limit"] = nullptr;
    out.result["empirical_note"] = e.what();
  }
  return out;
}

OpOutput op_ks_forward_backward(Context& ctx, const json& op) {
  const MapFamily& fam = *ctx.model.family;
  const std::size_t depth = count(op, "depth", 60);
  const std::size_t n = count(op, "n", ctx.config.n_samples);
  const State start = fam.default_start();
  const std::uint64_t fseed = mix64(ctx.config.seed ^ 0xF0E1D2C3B4A59687ULL);
  std::vector<double> fw(n), bw(n);
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    State out(fam.state_dim());
    for (std::size_t i = b; i < e; ++i) {
      forward_final(fam, start, depth, fseed, i, out);
      fw[i] = fam.distance_from_reference(out);
      backward_final(fam, start, depth, ctx.config.seed, i, out);
      bw[i] = fam.distance_from_reference(out);
    }
  });
  SampleSet a(std::move(fw), {}), bset(std::move(bw), {});
  const KsResult ks = ks_two_sample(a, bset);
  OpOutput out;
  out.result = ks.to_json();
  out.result["depth"] = depth;
  out.result["forward_seed"] = fseed;
  out.result["backward_seed"] = ctx.config.seed;
  out.facts["p_value"] = ks.p_value;
  return out;
}

OpOutput op_plot_data(Context& ctx, const json& op) {
  OpOutput out;
  if (!ctx.writing()) {
    out.result = {{"written", false}};
    return out;
  }
  std::optional<double> k;
  if (ctx.model.m_law || op.contains("kappa")) k = ctx.kappa_arg(op);
  const std::string surv = ctx.path("survival.txt");
  std::optional<std::string> scaled;
  if (k) scaled = ctx.path("scaled_survival.txt");
  ctx.files.push_back(surv);
  if (scaled) ctx.files.push_back(*scaled);
  write_plot_data(*ctx.sample, surv, scaled, k);
  out.result = {{"written", true}, {"survival", "survival.txt"}};
  if (k) {
    out.result["scaled_survival"] = "scaled_survival.txt";
    out.result["kappa"] = *k;
  }
  return out;
}

void require_model(const Context& ctx, std::initializer_list<const char*> ids, const char* op) {
  for (const char* id : ids)
    if (ctx.model.id == id) return;
  throw std::invalid_argument(std::string("op '") + op + "' does not apply to model '" + ctx.model.id + "'");
}

OpOutput op_embedded(Context& ctx, const json& op) {
  require_model(ctx, {"logistic"}, "embedded");
  const auto spec = models::LogisticSpec::from_json(ctx.model.params);
  const models::EmbeddedReport rep =
      models::logistic_embedded(spec, count(op, "n", ctx.config.n_samples), ctx.config.seed, count(op, "depth", 200));
  // pi-hat((2t, inf)) is the survival of W/2
  const SampleSet halved = ctx.sample->scaled(0.5);
  const auto grid = quantile_log_grid(halved, num(op, "q_lo", 0.5), num(op, "q_hi", 0.999), count(op, "grid_points", 10));
  const auto pts = compare_survival(halved, rep.w_star, grid, num(op, "sigmas", 3.0));
  std::size_t bad = 0;
  json rows = json::array();
  for (const auto& p : pts) {
    bad += p.ordered ? 0 : 1;
    rows.push_back({{"t", p.t}, {"pihat_2t", p.lower}, {"pihat_star_t", p.upper}, {"pooled_se", p.pooled_se}, {"ordered", p.ordered}});
  }
  const double kappa = ctx.model_kappa().kappa;
  json moments = json::array();
  bool stable = true;
  for (double frac : num_list(op, "p_fractions", {0.25, 0.5})) {
    const double p = frac * kappa;
    for (const auto* q : {&rep.q1, &rep.q2}) {
      std::vector<double> pw(q->values().size());
      std::transform(q->values().begin(), q->values().end(), pw.begin(), [p](double v) { return std::pow(v, p); });
      const bool ok = moment_looks_finite(pw);
      stable = stable && ok;
      moments.push_back({{"sum", q == &rep.q1 ? "q1" : "q2"}, {"p", p}, {"stable", ok}});
    }
  }
  OpOutput out;
  out.result = rep.to_json();
  out.result["ordering"] = rows;
  out.result["moments"] = moments;
  out.result["kappa"] = kappa;
  out.facts["ordered"] = bad == 0;
  out.facts["violations"] = rep.lower_violations + rep.upper_violations;
  out.facts["moments_stable"] = stable;
  return out;
}

OpOutput op_ricker_embedded(Context& ctx, const json& op) {
  require_model(ctx, {"ricker"}, "ricker_embedded");
  const auto spec = models::RickerSpec::from_json(ctx.model.params);
  const double a = num(op, "a", spec.a_lower.value_or(1.0));
  const double b = num(op, "b", 10.0);
  const models::RickerEmbeddedReport rep = models::ricker_embedded(spec, a, *ctx.sample, ctx.config.seed);
  // c = P(rho >= a/e, e gamma <= a b) / P(rho >= a/e)
  const std::size_t m = count(op, "c_samples", 1'000'000);
  std::size_t hit = 0, both = 0;
  std::vector<double> theta(ctx.model.family->env_dim());
  for (std::size_t i = 0; i < m; ++i) {
    draw_env(*ctx.model.family, ctx.config.seed, 0xC0C0, i, theta);
    if (theta[0] * theta[1] >= a / std::exp(1.0)) {
      ++hit;
      if (std::exp(1.0) * theta[1] <= a * b) ++both;
    }
  }
  if (hit == 0) throw std::invalid_argument("P(rho >= a/e) is numerically zero");
  const double c = static_cast<double>(both) / static_cast<double>(hit);
  const auto grid = quantile_log_grid(rep.w_star, num(op, "q_lo", 0.5), num(op, "q_hi", 0.999), count(op, "grid_points", 10));
  const double n1 = static_cast<double>(rep.w_star.size()), n2 = static_cast<double>(ctx.sample->size());
  std::size_t bad = 0;
  json rows = json::array();
  for (double t : grid) {
    const double ps = rep.w_star.survival(t);
    const double pb = ctx.sample->survival(b * t);
    const double se = std::sqrt(ps * (1 - ps) / n1 + c * c * pb * (1 - pb) / n2);
    const bool ok = c * pb <= ps + 3.0 * se;
    bad += ok ? 0 : 1;
    rows.push_back({{"t", t}, {"pihat_star_t", ps}, {"c_pihat_bt", c * pb}, {"pooled_se", se}, {"ordered", ok}});
  }
  OpOutput out;
  out.result = rep.to_json();
  out.result["a"] = a;
  out.result["b"] = b;
  out.result["c"] = c;
  out.result["ordering"] = rows;
  out.facts["ordered"] = bad == 0;
  out.facts["violations"] = rep.lower_violations;
  return out;
}

OpOutput op_absorption(Context& ctx, const json& op) {
  require_model(ctx, {"logistic", "ricker"}, "absorption");
  const std::size_t steps = count(op, "steps", 1'000'000);
  std::size_t exits = 0;
  if (ctx.model.id == "logistic")
    exits = models::logistic_absorption_exits(models::LogisticSpec::from_json(ctx.model.params), steps, ctx.config.seed);
  else
    exits = models::ricker_absorption_exits(models::RickerSpec::from_json(ctx.model.params), steps, ctx.config.seed);
  OpOutput out;
  out.result = {{"steps", steps}, {"exits", exits}};
  out.facts["violations"] = exits;
  return out;
}

OpOutput op_exact_closure(Context& ctx, const json& op) {
  require_model(ctx, {"dual_law"}, "exact_closure");
  const auto rep = models::exact_closure_check(models::DualLawSpec::from_json(ctx.model.params),
                                               count(op, "steps", 100'000), ctx.config.seed,
                                               count(op, "check_every", 1000));
  OpOutput out;
  out.result = rep.to_json();
  out.facts["violations"] = rep.violations;
  return out;
}

OpOutput op_branch(Context& ctx, const json& op, bool exact) {
  require_model(ctx, {"dual_law"}, exact ? "exact_branch" : "real_branch");
  const auto spec = models::DualLawSpec::from_json(ctx.model.params);
  const std::size_t n = count(op, "n", ctx.config.n_samples);
  const std::size_t depth = ctx.depth_or_default(op);
  const std::uint64_t seed = ctx.config.seed;
  const SampleSet s = exact ? models::exact_branch_samples(spec, n, depth, seed)
                            : models::real_branch_samples(spec, n, depth, seed);
  const TailEstimate e = hill(s, count(op, "k", 0));
  if (ctx.writing()) {
    const std::string p = ctx.path(exact ? "exact_branch_samples.csv" : "real_branch_samples.csv");
    ctx.files.push_back(p);
    s.write_csv(p);
  }
  OpOutput out;
  out.result = {{"hill", e.to_json()}, {"n", n}, {"depth", depth}, {"warnings", s.meta().warnings}};
  out.facts["index"] = e.index;
  return out;
}

OpOutput op_rotation_check(Context& ctx, const json& op) {
  require_model(ctx, {"mirek"}, "rotation_check");
  const auto rep = models::mirek_rotation_check(models::MirekSpec::from_json(ctx.model.params),
                                                count(op, "n", 100'000), ctx.config.seed);
  OpOutput out;
  out.result = rep.to_json();
  out.facts["max_error"] = std::max(rep.max_norm_error, rep.max_orthogonality_error);
  return out;
}

LindleySpec lindley_spec(const json& p) {
  LindleySpec s;
  s.r = p.value("r", 1.0);
  if (p.contains("m")) s.m_law = ScalarLaw::from_json(p.at("m"));
  if (p.contains("q")) s.q_law = ScalarLaw::from_json(p.at("q"));
  return s;
}

OpOutput op_first_passage(Context& ctx, const json& op) {
  require_model(ctx, {"lindley"}, "first_passage");
  const auto grid = num_list(op, "t_grid", {2, 5, 10, 20, 50});
  const auto rep = first_passage_lower_bound_check(lindley_spec(ctx.model.params), grid,
                                                   count(op, "n", ctx.config.n_samples), ctx.config.seed);
  OpOutput out;
  out.result = rep.to_json();
  out.facts["holds"] = rep.all_hold;
  return out;
}

OpOutput op_degeneracy(Context& ctx, const json& op) {
  require_model(ctx, {"perpetuity"}, "degeneracy");
  AffineSpec spec;
  spec.m_law = ScalarLaw::from_json(ctx.model.params.at("m"));
  spec.q_law = ScalarLaw::from_json(ctx.model.params.at("q"));
  const auto grid = num_list(op, "c_grid", log_grid(1e-3, 1e3, 25));
  const auto rep = check_degeneracy(spec, grid, count(op, "n", 100'000), ctx.config.seed);
  OpOutput out;
  out.result = rep.to_json();
  out.facts["holds"] = rep.sufficient_condition_holds;
  return out;
}

OpOutput op_contraction(Context& ctx, const json& op) {
  const auto rep = diagnose_contraction(*ctx.model.family, count(op, "depth", 200), count(op, "reps", 1000),
                                        ctx.config.seed);
  OpOutput out;
  out.result = rep.to_json();
  out.facts["holds"] = rep.contractive;
  return out;
}

OpOutput op_symmetry(Context& ctx, const json& op) {
  require_model(ctx, {"arch"}, "symmetry");
  const models::ArchFamily fam(models::ArchSpec::from_json(ctx.model.params));
  SampleOptions so;
  so.kind = ValueKind::Raw;
  const std::size_t depth = ctx.depth_or_default(op);
  const SampleSet x = sample_stationary(fam, Backward{depth}, count(op, "n", ctx.config.n_samples),
                                        ctx.config.seed, so);
  std::vector<double> absv(x.size());
  std::transform(x.values().begin(), x.values().end(), absv.begin(), [](double v) { return std::fabs(v); });
  const SampleSet ax(std::move(absv), {});
  const auto grid = quantile_log_grid(ax, num(op, "q_lo", 0.5), num(op, "q_hi", 0.999), count(op, "grid_points", 10));
  const double n = static_cast<double>(x.size());
  std::size_t bad = 0;
  json rows = json::array();
  for (double t : grid) {
    const double pp = x.survival(t);
    const double pa = ax.survival(t);
    const double pm = pa - pp;
    // 1{X > t} - 1{|X| > t}/2 = (1{X > t} - 1{X < -t}) / 2
    const double se = 0.5 * std::sqrt(std::max(0.0, pp + pm - (pp - pm) * (pp - pm)) / n);
    const bool ok = std::fabs(pp - 0.5 * pa) <= 3.0 * se;
    bad += ok ? 0 : 1;
    rows.push_back({{"t", t}, {"p_x", pp}, {"half_p_abs", 0.5 * pa}, {"se", se}, {"ok", ok}});
  }
  OpOutput out;
  out.result = {{"grid", rows}, {"n", x.size()}, {"depth", x.meta().depth}};
  out.facts["violations"] = bad;
  return out;
}

OpOutput op_conjugation(Context& ctx, const json& op) {
  require_model(ctx, {"logistic", "ricker"}, "conjugation");
  std::shared_ptr<const MapFamily> xf;
  if (ctx.model.id == "logistic")
    xf = std::make_shared<models::LogisticXFamily>(models::LogisticSpec::from_json(ctx.model.params));
  else
    xf = std::make_shared<models::RickerXFamily>(models::RickerSpec::from_json(ctx.model.params));
  const MapFamily& wf = *ctx.model.family;
  const std::size_t steps = count(op, "steps", 1000);
  const std::size_t paths = count(op, "paths", 100);
  const State w0 = wf.default_start();
  const State x0{1.0 / w0[0]};
  double worst = 0.0;
  for (std::size_t p = 0; p < paths; ++p) {
    const Trajectory w = iterate_forward(wf, w0, steps, ctx.config.seed, p);
    const Trajectory x = iterate_forward(*xf, x0, steps, ctx.config.seed, p);
    for (std::size_t k = 0; k < w.length(); ++k) {
      const double wk = w.state(k)[0];
      worst = std::max(worst, std::fabs(1.0 / x.state(k)[0] - wk) / wk);
    }
  }
  OpOutput out;
  out.result = {{"steps", steps}, {"paths", paths}, {"max_relative_error", worst}};
  out.facts["max_error"] = worst;
  return out;
}

const std::map<std::string, OpFn>& op_table() {
  static const std::map<std::string, OpFn> t{
      {"solve_kappa", op_solve_kappa},
      {"hill", op_hill},
      {"loglog", op_loglog},
      {"exactness", op_exactness},
      {"sandwich_verify", op_sandwich_verify},
      {"stochastic_ordering", op_stochastic_ordering},
      {"certificate", op_certificate},
      {"index_bracket", op_index_bracket},
      {"goldie", op_goldie},
      {"ks_forward_backward", op_ks_forward_backward},
      {"plot_data", op_plot_data},
      {"embedded", op_embedded},
      {"ricker_embedded", op_ricker_embedded},
      {"absorption", op_absorption},
      {"exact_closure", op_exact_closure},
      {"exact_branch", [](Context& c, const json& o) { return op_branch(c, o, true); }},
      {"real_branch", [](Context& c, const json& o) { return op_branch(c, o, false); }},
      {"rotation_check", op_rotation_check},
      {"first_passage", op_first_passage},
      {"degeneracy", op_degeneracy},
      {"contraction", op_contraction},
      {"symmetry", op_symmetry},
      {"conjugation", op_conjugation},
  };
  return t;
}

const json& fact(const json& facts, const std::string& key, const std::string& assertion) {
  if (!facts.contains(key))
    throw std::invalid_argument("assertion '" + assertion + "' does not apply to this op");
  return facts.at(key);
}

AssertionResult evaluate(const std::string& name, const json& arg, const json& facts) {
  AssertionResult a;
  a.name = name;
  auto range = [&](const char* key) {
    if (!arg.is_array() || arg.size() != 2) throw std::invalid_argument("'" + name + "' expects [lo, hi]");
    const double v = fact(facts, key, name).get<double>();
    a.passed = v >= arg[0].get<double>() && v <= arg[1].get<double>();
    a.detail = {{"value", v}, {"range", arg}};
  };
  auto within = [&](const char* key) {
    if (!arg.is_array() || arg.size() != 2) throw std::invalid_argument("'" + name + "' expects [target, tol]");
    const double v = fact(facts, key, name).get<double>();
    a.passed = std::fabs(v - arg[0].get<double>()) <= arg[1].get<double>();
    a.detail = {{"value", v}, {"target", arg[0]}, {"tolerance", arg[1]}};
  };
  auto flag = [&](const char* key) {
    const bool v = fact(facts, key, name).get<bool>();
    a.passed = v == (arg.is_boolean() ? arg.get<bool>() : true);
    a.detail = {{"value", v}, {"expected", arg.is_boolean() ? arg.get<bool>() : true}};
  };
  auto below = [&](const char* key, bool absolute) {
    double v = fact(facts, key, name).get<double>();
    if (absolute) v = std::fabs(v);
    a.passed = v <= arg.get<double>();
    a.detail = {{"value", v}, {"bound", arg}};
  };
  if (name == "index_in") range("index");
  else if (name == "kappa_within") within("kappa");
  else if (name == "index_within") within("index");
  else if (name == "verdict") {
    const std::string v = fact(facts, "verdict", name).get<std::string>();
    a.passed = v == arg.get<std::string>();
    a.detail = {{"value", v}, {"expected", arg}};
  } else if (name == "abs_slope_below") below("slope", true);
  else if (name == "zero_violations") {
    const auto v = fact(facts, "violations", name).get<std::size_t>();
    a.passed = (v == 0) == (arg.is_boolean() ? arg.get<bool>() : true);
    a.detail = {{"violations", v}};
  } else if (name == "ordered") flag("ordered");
  else if (name == "issued") flag("issued");
  else if (name == "increasing") flag("increasing");
  else if (name == "moments_stable") flag("moments_stable");
  else if (name == "c_plus_zero") flag("c_plus_zero");
  else if (name == "holds") flag("holds");
  else if (name == "p_value_above") {
    const double v = fact(facts, "p_value", name).get<double>();
    a.passed = v > arg.get<double>();
    a.detail = {{"value", v}, {"bound", arg}};
  } else if (name == "relative_error_below") below("relative_error", false);
  else if (name == "max_error_below") below("max_error", false);
  else throw std::invalid_argument("unknown assertion '" + name + "'");
  return a;
}

SampleSet simulate(Context& ctx) {
  const json& m = ctx.config.mode;
  const std::string kind = m.value("kind", "backward");
  StationaryMode mode;
  if (kind == "backward") {
    mode = Backward{count(m, "depth", 0) ? count(m, "depth", 0) : ctx.model.default_depth};
  } else if (kind == "long_run") {
    mode = LongRun{count(m, "burn_in", 1000), count(m, "thin", 1)};
  } else {
    throw std::invalid_argument("unknown mode kind '" + kind + "'");
  }
  SampleOptions so;
  so.model_id = ctx.model.id;
  return sample_stationary(*ctx.model.family, mode, ctx.config.n_samples, ctx.config.seed, so);
}

json sample_summary(const SampleSet& s) {
  json j = s.to_json();
  j.erase("values");
  return j;
}

void write_file(Context& ctx, const std::string& name, const std::string& text) {
  const std::string p = ctx.path(name);
  ctx.files.push_back(p);
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + p + "'");
  out << text;
  if (!out) throw std::runtime_error("write to '" + p + "' failed");
}

}  // namespace

const std::vector<std::string>& analysis_ops() {
  static const std::vector<std::string> ops = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : op_table()) v.push_back(k);
    return v;
  }();
  return ops;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  json flat = j;
  // {model_id, params, seed, experiment: {...}} is accepted as well
  if (j.contains("experiment")) {
    if (!j.at("experiment").is_object()) throw std::invalid_argument("'experiment' must be an object");
    for (const auto& [k, v] : j.at("experiment").items()) flat[k] = v;
    flat.erase("experiment");
  }
  static const std::vector<std::string> known{"model_id", "params", "seed", "n_samples", "mode",
                                              "analysis", "output_dir", "description"};
  for (const auto& [k, _] : flat.items())
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw std::invalid_argument("unknown config key '" + k + "'");

  ExperimentConfig c;
  if (!flat.contains("model_id") || !flat.at("model_id").is_string())
    throw std::invalid_argument("config needs a string 'model_id'");
  c.model_id = flat.at("model_id").get<std::string>();
  const auto& ids = models::model_ids();
  if (std::find(ids.begin(), ids.end(), c.model_id) == ids.end())
    throw std::invalid_argument("unknown model_id '" + c.model_id + "'");
  if (!flat.contains("seed") || !(flat.at("seed").is_number_unsigned() || (flat.at("seed").is_number_integer() && flat.at("seed").get<std::int64_t>() >= 0)))
    throw std::invalid_argument("config needs a nonnegative integer 'seed'");
  c.seed = flat.at("seed").get<std::uint64_t>();
  if (flat.contains("params")) {
    if (!flat.at("params").is_object()) throw std::invalid_argument("'params' must be an object");
    c.params = flat.at("params");
  }
  c.n_samples = count(flat, "n_samples", c.n_samples);
  if (c.n_samples < 2) throw std::invalid_argument("'n_samples' must be at least 2");
  if (flat.contains("mode")) {
    if (!flat.at("mode").is_object()) throw std::invalid_argument("'mode' must be an object");
    c.mode = flat.at("mode");
  }
  if (flat.contains("analysis")) {
    if (!flat.at("analysis").is_array()) throw std::invalid_argument("'analysis' must be an array");
    for (const auto& a : flat.at("analysis")) {
      if (!a.is_object() || !a.contains("op") || !a.at("op").is_string())
        throw std::invalid_argument("each analysis entry needs a string 'op'");
      if (!op_table().count(a.at("op").get<std::string>()))
        throw std::invalid_argument("unknown analysis op '" + a.at("op").get<std::string>() + "'");
      if (a.contains("assert") && !a.at("assert").is_object())
        throw std::invalid_argument("'assert' must be an object");
    }
    c.analysis = flat.at("analysis");
  }
  if (flat.contains("output_dir")) c.output_dir = flat.at("output_dir").get<std::string>();
  return c;
}

json ExperimentConfig::to_json() const {
  return {{"model_id", model_id}, {"params", params},     {"seed", seed},
          {"n_samples", n_samples}, {"mode", mode}, {"analysis", analysis}, {"output_dir", output_dir}};
}

bool RunReport::passed() const {
  for (const auto& a : analyses)
    for (const auto& r : a.assertions)
      if (!r.passed) return false;
  return true;
}

json RunReport::to_json() const {
  json j;
  j["version"] = kVersion;
  j["config"] = config;
  j["sample"] = sample;
  j["analyses"] = json::array();
  for (const auto& a : analyses) {
    json aj{{"op", a.op}, {"result", a.result}, {"assertions", json::array()}};
    for (const auto& r : a.assertions) aj["assertions"].push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    j["analyses"].push_back(aj);
  }
  j["files"] = files;
  j["passed"] = passed();
  return j;
}

RunReport run_experiment(const ExperimentConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  Context ctx{config, in_stage("model", [&] { return models::make_model(config.model_id, config.params); }), {}, {}, {}};
  bool created_dir = false;
  json timings = json::object();
  auto lap = [&, last = t0](const std::string& stage) mutable {
    const auto now = std::chrono::steady_clock::now();
    timings[stage] = std::chrono::duration<double>(now - last).count();
    last = now;
  };

  try {
    if (ctx.writing()) {
      in_stage("output", [&] {
        created_dir = !fs::exists(config.output_dir);
        fs::create_directories(config.output_dir);
      });
    }
    ctx.sample = in_stage("simulate", [&] { return simulate(ctx); });
    lap("simulate");

    RunReport rep;
    rep.config = config.to_json();
    rep.config["params"] = ctx.model.params;
    rep.sample = sample_summary(*ctx.sample);
    if (ctx.writing()) {
      in_stage("write_samples", [&] {
        const std::string p = ctx.path("samples.csv");
        ctx.files.push_back(p);
        ctx.sample->write_csv(p);
      });
    }

    for (std::size_t i = 0; i < config.analysis.size(); ++i) {
      const json& op = config.analysis[i];
      const std::string name = op.at("op").get<std::string>();
      const std::string stage = "analysis[" + std::to_string(i) + "]:" + name;
      AnalysisResult ar;
      ar.op = name;
      in_stage(stage, [&] {
        OpOutput o = op_table().at(name)(ctx, op);
        ar.result = std::move(o.result);
        if (op.contains("assert"))
          for (const auto& [k, v] : op.at("assert").items()) ar.assertions.push_back(evaluate(k, v, o.facts));
        return 0;
      });
      rep.analyses.push_back(std::move(ar));
      lap(stage);
    }

    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (ctx.writing()) {
      in_stage("write_report", [&] {
        rep.files.clear();
        for (const auto& f : ctx.files) rep.files.push_back(fs::path(f).filename().string());
        rep.files.push_back("report.json");
        rep.files.push_back("timing.json");
        write_file(ctx, "report.json", rep.to_json().dump(2) + "\n");
        const json timing{{"wall_seconds", rep.wall_seconds}, {"threads", worker_count()}, {"stages", timings}};
        write_file(ctx, "timing.json", timing.dump(2) + "\n");
      });
    }
    return rep;
  } catch (...) {
    std::error_code ec;
    for (const auto& f : ctx.files) fs::remove(f, ec);
    if (created_dir) fs::remove(config.output_dir, ec);  // only if empty
    throw;
  }
}

}  // namespace tailbound
