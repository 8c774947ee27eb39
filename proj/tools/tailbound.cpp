// Command-line front end. Talks to the library through the C interface only.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tailbound/tailbound.h"

using nlohmann::json;

namespace {

struct CString {
  char* p = nullptr;
  ~CString() { tb_free_string(p); }
  std::string str() const { return p ? p : ""; }
};

/// "a=0.5,b=3,p=0.8" or a JSON object.
json parse_params(const std::string& text) {
  if (text.empty()) return json::object();
  if (text.front() == '{') return json::parse(text);
  json out = json::object();
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw std::invalid_argument("expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq), val = item.substr(eq + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(val, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == val.size() && !val.empty())
      out[key] = v;
    else
      out[key] = val;
  }
  return out;
}

int report_error(int status) {
  std::cerr << "error: " << tb_last_error() << "\n";
  return status;
}

int cmd_solve_kappa(const std::string& law, const std::string& params, double tol, bool as_json, bool mc,
                    std::size_t mc_samples, std::uint64_t seed) {
  json spec;
  try {
    spec = parse_params(params);
    if (!law.empty() && law.front() == '{') {
      json full = json::parse(law);
      full.update(spec);
      spec = std::move(full);
    } else {
      spec["kind"] = law;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return TB_USAGE;
  }
  json opts{{"tol", tol}};
  if (mc) opts.update({{"monte_carlo", true}, {"mc_samples", mc_samples}, {"seed", seed}});
  CString out;
  const int st = tb_solve_kappa(spec.dump().c_str(), opts.dump().c_str(), &out.p);
  if (st != TB_OK) return report_error(st);
  if (as_json) {
    std::cout << out.str() << "\n";
  } else {
    const json j = json::parse(out.str());
    std::printf("kappa = %.12g\nmu_kappa = %.12g\nmethod = %s\n", j.at("kappa").get<double>(),
                j.at("mu_kappa").get<double>(), j.at("method").get<std::string>().c_str());
  }
  return TB_OK;
}

int cmd_run(const std::string& path, const std::string& output_dir, bool as_json) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot open config '" << path << "'\n";
    return TB_USAGE;
  }
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const std::exception& e) {
    std::cerr << "error: config '" << path << "': " << e.what() << "\n";
    return TB_USAGE;
  }
  if (!output_dir.empty()) cfg["output_dir"] = output_dir;
  CString out;
  const int st = tb_run_config(cfg.dump().c_str(), &out.p);
  if (st != TB_OK && st != TB_VIOLATION) return report_error(st);
  const json rep = json::parse(out.str());
  if (as_json) {
    std::cout << out.str() << "\n";
  } else {
    for (const auto& a : rep.at("analyses")) {
      const std::string op = a.at("op").get<std::string>();
      if (a.at("assertions").empty()) std::cout << "  " << op << "\n";
      for (const auto& r : a.at("assertions"))
        std::cout << (r.at("passed").get<bool>() ? "PASS " : "FAIL ") << op << "." << r.at("name").get<std::string>()
                  << " " << r.at("detail").dump() << "\n";
    }
    if (!cfg.value("output_dir", std::string()).empty())
      std::cout << "outputs written to " << cfg.at("output_dir").get<std::string>() << "\n";
  }
  if (st == TB_VIOLATION) std::cerr << "error: " << tb_last_error() << "\n";
  return st;
}

int cmd_sandwich_verify(const std::string& model, const std::string& params, double r, bool r_set,
                        std::size_t envs, std::size_t points, std::uint64_t seed, bool corrupt, bool as_json) {
  if (envs == 0 || points == 0) {
    std::cerr << "error: --envs and --points must be positive\n";
    return TB_USAGE;
  }
  json p;
  try {
    p = parse_params(params);
  } catch (const std::exception& e) {
    std::cerr << "error: --params: " << e.what() << "\n";
    return TB_USAGE;
  }
  tb_model* m = nullptr;
  int st = tb_model_create(model.c_str(), p.dump().c_str(), &m);
  if (st != TB_OK) return report_error(st);
  json opts{{"envs", envs}, {"points", points}, {"seed", seed}, {"corrupt", corrupt}};
  if (r_set) opts["r"] = r;
  CString out;
  st = tb_sandwich_verify(m, opts.dump().c_str(), &out.p);
  tb_model_free(m);
  if (st != TB_OK && st != TB_VIOLATION) return report_error(st);
  if (as_json) {
    std::cout << out.str() << "\n";
  } else {
    const json j = json::parse(out.str());
    std::cout << "model " << model << ": " << envs << " environments x " << points << " points\n"
              << "violations lower " << j.at("violations_lower") << ", upper " << j.at("violations_upper")
              << " (depth 1)\n";
    for (const auto& d : j.at("by_depth"))
      std::cout << "depth " << d.at("depth") << ": lower " << d.at("violations_lower") << ", upper "
                << d.at("violations_upper") << "\n";
  }
  if (st == TB_VIOLATION) std::cerr << "error: " << tb_last_error() << "\n";
  return st;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tail-index toolkit for iterated random Lipschitz maps"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tb_version()));

  std::string law, params;
  double tol = 1e-12;
  bool as_json = false, mc = false;
  std::size_t mc_samples = 1'000'000;
  std::uint64_t seed = 0;
  auto* solve = app.add_subcommand("solve-kappa", "Solve E M^kappa = 1");
  solve->add_option("--law", law, "two_point | lognormal | squared_affine_gaussian | empirical, or a JSON law")->required();
  solve->add_option("--params", params, "e.g. a=0.5,b=3,p=0.8");
  solve->add_option("--tol", tol, "Root tolerance")->check(CLI::PositiveNumber);
  solve->add_flag("--json", as_json, "Print the full solution as JSON");
  solve->add_flag("--monte-carlo", mc, "Estimate phi by Monte Carlo");
  solve->add_option("--mc-samples", mc_samples, "Monte Carlo sample size");
  solve->add_option("--seed", seed, "Monte Carlo seed");

  std::string config, output_dir;
  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config, "Config JSON file")->required();
  run->add_option("--output-dir", output_dir, "Override output_dir");
  run->add_flag("--json", as_json, "Print the report as JSON");

  std::string model, model_params;
  double r = 0.0;
  std::size_t envs = 10'000, points = 100;
  bool corrupt = false;
  auto* sv = app.add_subcommand("sandwich-verify", "Pathwise check of the sandwich bounds");
  sv->add_option("--model", model, "Model id")->required();
  sv->add_option("--params", model_params, "JSON object or key=value list");
  auto* r_opt = sv->add_option("--r", r, "Threshold r");
  sv->add_option("--envs", envs, "Number of environments");
  sv->add_option("--points", points, "State points per environment");
  sv->add_option("--seed", seed, "Seed");
  sv->add_flag("--corrupt", corrupt, "Debug: halve the upper slope (must fail)");
  sv->add_flag("--json", as_json, "Print the report as JSON");

  auto* list = app.add_subcommand("models", "List model ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return TB_USAGE;
  }

  if (*solve) return cmd_solve_kappa(law, params, tol, as_json, mc, mc_samples, seed);
  if (*run) return cmd_run(config, output_dir, as_json);
  if (*sv) return cmd_sandwich_verify(model, model_params, r, r_opt->count() > 0, envs, points, seed, corrupt, as_json);
  if (*list) {
    CString out;
    const int st = tb_list_models(&out.p);
    if (st != TB_OK) return report_error(st);
    for (const auto& id : json::parse(out.str())) std::cout << id.get<std::string>() << "\n";
    return TB_OK;
  }
  return TB_USAGE;
}
