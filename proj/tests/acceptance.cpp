// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Tolerances are fixed here, not read from the
// preset configs.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tailbound/cramer.hpp"
#include "tailbound/experiment.hpp"
#include "tailbound/models/registry.hpp"
#include "tailbound/sandwich.hpp"

using namespace tailbound;
using nlohmann::json;

namespace {

constexpr double kIndexLo = 0.85, kIndexHi = 1.15;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[FAILED] ";
    }
    detail << what << "; ";
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json load_preset(const std::string& name) {
  std::ifstream in(std::string(TAILBOUND_CONFIG_DIR) + "/" + name + ".json");
  if (!in) throw std::runtime_error("missing preset " + name);
  return json::parse(in);
}

/// Runs a shipped preset with its model, params and seed but only the given
/// analyses and no files.
struct PresetRun {
  RunReport report;
  double seconds = 0.0;

  const json& result(const std::string& op, std::size_t nth = 0) const {
    for (const auto& a : report.analyses)
      if (a.op == op && nth-- == 0) return a.result;
    throw std::runtime_error("no result for " + op);
  }
};

PresetRun run_preset(const std::string& name, json analysis, std::optional<std::size_t> n_samples = std::nullopt) {
  ExperimentConfig c = ExperimentConfig::from_json(load_preset(name));
  c.analysis = std::move(analysis);
  c.output_dir.clear();
  if (n_samples) c.n_samples = *n_samples;
  const auto t0 = std::chrono::steady_clock::now();
  PresetRun r{run_experiment(c), 0.0};
  r.seconds = seconds_since(t0);
  return r;
}

void check_index(Outcome& o, const std::string& label, double v) {
  o.check(v >= kIndexLo && v <= kIndexHi, label + " index " + fmt(v) + " in [0.85, 1.15]");
}

/// Recomputes the 3-SE ordering test from the reported survival rows.
std::size_t ordering_failures(const json& rows, const char* lo_key, const char* hi_key) {
  std::size_t bad = 0;
  for (const auto& p : rows)
    if (p.at(lo_key).get<double>() > p.at(hi_key).get<double>() + 3.0 * p.at("pooled_se").get<double>()) ++bad;
  return bad;
}

// ---------------------------------------------------------------------------

Outcome a1() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const double oracle_k = oracle::two_point_kappa(0.5, 3.0, 0.8);
  const CramerSolution tp = solve_kappa(FactorLaw::two_point(0.5, 3.0, 0.8));
  o.check(std::fabs(tp.kappa - 1.0) <= 1e-8, "two_point kappa " + fmt(tp.kappa) + " = 1 +- 1e-8");
  o.check(std::fabs(tp.kappa - oracle_k) <= 1e-8, "matches bisection oracle " + fmt(oracle_k));
  const CramerSolution ln = solve_kappa(FactorLaw::lognormal(-1.0, 1.0));
  o.check(std::fabs(ln.kappa - 2.0) <= 1e-8, "lognormal kappa " + fmt(ln.kappa) + " = 2 +- 1e-8");
  SolveOptions mc;
  mc.phi.method = PhiMethod::MonteCarlo;
  mc.phi.mc_samples = 1'000'000;
  mc.phi.seed = 1;
  const CramerSolution m = solve_kappa(FactorLaw::two_point(0.5, 3.0, 0.8), mc);
  o.check(std::fabs(m.kappa - 1.0) <= 0.02, "Monte Carlo kappa " + fmt(m.kappa) + " within 0.02");
  const double s = seconds_since(t0);
  o.check(s < 5.0, "runtime " + fmt(s) + " s < 5 s");
  return o;
}

Outcome a2() {
  Outcome o;
  const PresetRun r = run_preset("perpetuity_kappa1", json::array({{{"op", "hill"}, {"k", 10'000}},
                                                                   {{"op", "exactness"}, {"kappa", 1.0}}}),
                                 1'000'000);
  o.check(r.report.sample.at("n").get<std::size_t>() == 1'000'000, "n = 1e6 backward samples");
  check_index(o, "Hill(k=1e4)", r.result("hill").at("index").get<double>());
  const std::string verdict = r.result("exactness").at("verdict").get<std::string>();
  o.check(verdict == "consistent_with_exact", "exactness verdict " + verdict);
  o.check(r.seconds < 120.0, "runtime " + fmt(r.seconds) + " s < 120 s");
  return o;
}

Outcome a3() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const std::pair<const char*, const char*> models[] = {
      {"arch", "arch_kappa1"}, {"logistic", "logistic"}, {"ricker", "ricker"}, {"mirek", "mirek"}, {"dual_law", "dual_law"}};
  for (const auto& [id, preset] : models) {
    const json cfg = load_preset(preset);
    const auto m = models::make_model(id, cfg.value("params", json::object()));
    const SandwichReport rep = verify_sandwich(*m.family, m.bounds(m.default_r), 10'000, 100, cfg.at("seed").get<std::uint64_t>());
    std::size_t v = rep.violations_lower + rep.violations_upper;
    for (const auto& d : rep.by_depth) v += d.violations_lower + d.violations_upper;
    const double worst = std::min(rep.worst_slack_lower, rep.worst_slack_upper);
    o.check(v == 0 && worst >= -1e-9 && rep.n_envs == 10'000 && rep.n_points == 100,
            std::string(id) + " violations " + std::to_string(v) + ", worst slack " + fmt(worst));
  }
  const double s = seconds_since(t0);
  o.check(s < 60.0, "runtime " + fmt(s) + " s < 60 s");
  return o;
}

Outcome a4() {
  Outcome o;
  for (const char* preset : {"arch_kappa1", "ricker"}) {
    const PresetRun r = run_preset(
        preset, json::array({{{"op", "stochastic_ordering"}, {"n", 100'000}, {"grid_points", 20}}}), 1000);
    const json& res = r.result("stochastic_ordering");
    const json& lm = res.at("lower_vs_model");
    const json& mu = res.at("model_vs_upper");
    const std::size_t bad = ordering_failures(lm, "lower", "upper") + ordering_failures(mu, "lower", "upper");
    o.check(lm.size() == 20 && mu.size() == 20 && bad == 0,
            std::string(preset) + " " + std::to_string(lm.size()) + "-point grid, " + std::to_string(bad) + " failures");
  }
  return o;
}

Outcome a5() {
  Outcome o;
  const json preset_ops = load_preset("arch_kappa1").at("analysis");
  json loglog_op{{"op", "loglog"}};
  for (const auto& op : preset_ops)
    if (op.at("op") == "loglog") loglog_op = {{"op", "loglog"}, {"q_lo", op.at("q_lo")}, {"q_hi", op.at("q_hi")}};
  const PresetRun r = run_preset("arch_kappa1", json::array({loglog_op, {{"op", "exactness"}, {"kappa", 1.0}}}), 1'000'000);
  const double ll = r.result("loglog").at("reported_index").get<double>();
  o.check(ll >= 1.8 && ll <= 2.2, "ARCH loglog index " + fmt(ll) + " in [1.8, 2.2]");
  const double slope = r.result("exactness").at("reported_slope").get<double>();
  o.check(std::fabs(slope) <= 0.15, "t^2 P(X>t) slope " + fmt(slope) + " |.| <= 0.15");
  o.check(r.seconds < 180.0, "runtime " + fmt(r.seconds) + " s < 180 s");

  const double k_oracle = oracle::sag_kappa(0.3);
  const PresetRun b = run_preset("arch_alpha03", json::array({{{"op", "solve_kappa"}}, {{"op", "hill"}, {"k", 10'000}}}));
  const double k = b.result("solve_kappa").at("kappa").get<double>();
  o.check(std::fabs(k - k_oracle) <= 1e-6, "alpha=0.3 kappa " + fmt(k) + " vs quadrature " + fmt(k_oracle));
  const double h = b.result("hill").at("reported_index").get<double>();
  o.check(std::fabs(h - 2.0 * k_oracle) <= 0.2, "alpha=0.3 index " + fmt(h) + " within 0.2 of " + fmt(2.0 * k_oracle));
  return o;
}

Outcome a6() {
  Outcome o;
  const PresetRun r = run_preset("logistic", json::array({{{"op", "hill"}, {"k", 10'000}},
                                                          {{"op", "absorption"}, {"steps", 1'000'000}},
                                                          {{"op", "stochastic_ordering"}, {"grid_points", 20}}}));
  check_index(o, "Hill", r.result("hill").at("index").get<double>());
  const json& ab = r.result("absorption");
  o.check(ab.at("steps").get<std::size_t>() == 1'000'000 && ab.at("exits").get<std::size_t>() == 0,
          "exits from [2, inf) over 1e6 steps: " + ab.at("exits").dump());
  const json& lm = r.result("stochastic_ordering").at("lower_vs_model");
  const std::size_t bad = ordering_failures(lm, "lower", "upper");
  o.check(!lm.empty() && bad == 0, "F-chain survival <= model + 3 SE at " + std::to_string(lm.size()) +
                                       " points, failures " + std::to_string(bad));
  return o;
}

Outcome a7() {
  Outcome o;
  const PresetRun r = run_preset("logistic_embedded", json::array({{{"op", "embedded"}, {"grid_points", 10}}}));
  const json& res = r.result("embedded");
  const json& rows = res.at("ordering");
  const std::size_t bad = ordering_failures(rows, "pihat_2t", "pihat_star_t");
  o.check(rows.size() == 10 && bad == 0, "pi*(t) >= pi(2t) - 3 SE on " + std::to_string(rows.size()) +
                                              " points, failures " + std::to_string(bad));
  bool stable = !res.at("moments").empty();
  for (const auto& m : res.at("moments")) stable = stable && m.at("stable").get<bool>() && m.at("p").get<double>() < res.at("kappa").get<double>();
  o.check(stable, "Q1, Q2 moments below kappa stable");
  return o;
}

Outcome a8() {
  Outcome o;
  const std::vector<double> grid{5, 10, 20, 50, 100};
  const PresetRun r = run_preset("ricker", json::array({{{"op", "hill"}, {"k", 10'000}},
                                                        {{"op", "index_bracket"}, {"r_grid", grid}}}));
  check_index(o, "Hill", r.result("hill").at("index").get<double>());
  const json& entries = r.result("index_bracket").at("entries");
  bool increasing = entries.size() == grid.size();
  double prev = -1.0, last = 0.0, worst_oracle = 0.0;
  for (std::size_t i = 0; i < entries.size() && increasing; ++i) {
    if (!entries[i].contains("beta")) {
      increasing = false;
      break;
    }
    const double k = entries[i].at("beta").at("kappa").get<double>();
    const double s = std::exp(1.0 / grid[i]);
    worst_oracle = std::max(worst_oracle, std::fabs(k - oracle::two_point_kappa(0.5 * s, 3.0 * s, 0.8)));
    increasing = increasing && k > prev;
    prev = last = k;
  }
  o.check(increasing, "kappa_r increasing over r = 5..100");
  o.check(std::fabs(last - 1.0) <= 0.05, "kappa_100 " + fmt(last) + " within 0.05 of 1");
  o.check(worst_oracle <= 1e-8, "G_r roots match bisection oracle, max error " + fmt(worst_oracle));
  return o;
}

Outcome a9() {
  Outcome o;
  const PresetRun r = run_preset("mirek", json::array({{{"op", "hill"}, {"k", 10'000}},
                                                       {{"op", "rotation_check"}},
                                                       {{"op", "certificate"}}}));
  check_index(o, "|X| Hill", r.result("hill").at("index").get<double>());
  const json& rot = r.result("rotation_check");
  const double err = std::max(rot.at("max_norm_error").get<double>(), rot.at("max_orthogonality_error").get<double>());
  o.check(err <= 1e-12, "rotation isometry error " + fmt(err));
  o.check(r.result("certificate").at("issued").get<bool>(), "certificate issued");
  const PresetRun c = run_preset("mirek_no_perturbation", json::array({{{"op", "certificate"}}}));
  o.check(!c.result("certificate").at("issued").get<bool>(), "zero-perturbation control declined");
  return o;
}

Outcome a10() {
  Outcome o;
  const PresetRun r = run_preset("dual_law", json::array({{{"op", "exact_closure"}, {"steps", 100'000}},
                                                          {{"op", "exact_branch"}, {"n", 1'000'000}, {"k", 10'000}},
                                                          {{"op", "real_branch"}, {"n", 1'000'000}, {"k", 10'000}}}),
                                 1000);
  const json& cl = r.result("exact_closure");
  o.check(cl.at("steps").get<std::size_t>() == 100'000 && cl.at("violations").get<std::size_t>() == 0,
          "closure violations over 1e5 steps: " + cl.at("violations").dump());
  check_index(o, "exact branch Hill", r.result("exact_branch").at("hill").at("index").get<double>());
  check_index(o, "real branch Hill", r.result("real_branch").at("hill").at("index").get<double>());
  return o;
}

Outcome a11() {
  Outcome o;
  for (const char* preset : {"perpetuity_kappa1", "lindley"}) {
    const PresetRun r =
        run_preset(preset, json::array({{{"op", "ks_forward_backward"}, {"depth", 60}, {"n", 100'000}}}), 1000);
    const double p = r.result("ks_forward_backward").at("p_value").get<double>();
    o.check(p > 0.01, std::string(preset) + " KS p " + fmt(p) + " > 0.01");
  }
  return o;
}

Outcome a12() {
  Outcome o;
  const PresetRun r = run_preset("perpetuity_kappa1", json::array({{{"op", "goldie"}}}));
  const json& g = r.result("goldie");
  const double c = g.at("c_plus").at("value").get<double>();
  const double emp = g.at("empirical_limit").get<double>();
  const double rel = std::fabs(emp - c) / std::fabs(c);
  o.check(rel <= 0.25, "perpetuity C+ " + fmt(c) + " vs empirical " + fmt(emp) + ", relative " + fmt(rel));
  auto c_plus = [](const char* preset) {
    const PresetRun p = run_preset(preset, json::array({{{"op", "goldie"}}}));
    const json& cp = p.result("goldie").at("c_plus");
    return std::pair{cp.at("value").get<double>(), cp.at("se").get<double>()};
  };
  const auto [z, zse] = c_plus("lindley_q_below_r");
  o.check(std::fabs(z) <= 3.0 * zse, "Lindley Q <= r: C+ " + fmt(z) + " +- " + fmt(zse) + " is zero");
  const auto [nz, nzse] = c_plus("lindley");
  o.check(std::fabs(nz) > 3.0 * nzse, "Lindley Q > r possible: C+ " + fmt(nz) + " +- " + fmt(nzse) + " nonzero");
  return o;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4},   {"A5", a5},   {"A6", a6},
      {"A7", a7}, {"A8", a8}, {"A9", a9}, {"A10", a10}, {"A11", a11}, {"A12", a12}};
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    try {
      Outcome o = fn();
      pass = o.pass;
      detail = o.detail.str();
    } catch (const std::exception& e) {
      detail = std::string("error: ") + e.what();
    }
    failed += pass ? 0 : 1;
    std::printf("%s %s (%.1f s) %s\n", name, pass ? "PASS" : "FAIL", seconds_since(t0), detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of 12 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
