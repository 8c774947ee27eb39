#include "tailbound/tailbound.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <optional>
#include <string>

#include "tailbound/cramer.hpp"
#include "tailbound/errors.hpp"
#include "tailbound/experiment.hpp"
#include "tailbound/ifs.hpp"
#include "tailbound/models/registry.hpp"
#include "tailbound/sandwich.hpp"
#include "tailbound/tail_stats.hpp"

using nlohmann::json;
using namespace tailbound;

struct tb_model {
  models::Model model;
};

struct tb_sample_set {
  SampleSet samples;
};

namespace {

thread_local std::string last_error;

int fail(int code, const std::string& msg) {
  last_error = msg;
  return code;
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json parse_or_empty(const char* text) {
  if (text == nullptr || *text == '\0') return json::object();
  return json::parse(text);
}

template <class F>
int guarded(F&& f) {
  last_error.clear();
  try {
    return f();
  } catch (const StageError& e) {
    switch (e.kind()) {
      case FailureKind::Usage: return fail(TB_USAGE, e.what());
      case FailureKind::Analytic: return fail(TB_NO_INDEX, e.what());
      case FailureKind::Runtime: return fail(TB_ERROR, e.what());
    }
    return fail(TB_ERROR, e.what());
  } catch (const json::exception& e) {
    return fail(TB_USAGE, std::string("JSON: ") + e.what());
  } catch (const std::invalid_argument& e) {
    return fail(TB_USAGE, e.what());
  } catch (const NoCramerIndex& e) {
    return fail(TB_NO_INDEX, e.what());
  } catch (const NotMeanDominated& e) {
    return fail(TB_NO_INDEX, e.what());
  } catch (const DegenerateFactor& e) {
    return fail(TB_NO_INDEX, e.what());
  } catch (const std::exception& e) {
    return fail(TB_ERROR, e.what());
  } catch (...) {
    return fail(TB_ERROR, "unknown exception");
  }
}

int null_arg(const char* name) { return fail(TB_USAGE, std::string(name) + " must not be NULL"); }

}  // namespace

extern "C" {

const char* tb_version(void) { return kVersion; }

const char* tb_last_error(void) { return last_error.c_str(); }

void tb_free_string(char* s) { std::free(s); }

int tb_list_models(char** out_json) {
  if (!out_json) return null_arg("out_json");
  return guarded([&]() -> int {
    *out_json = dup(json(models::model_ids()).dump());
    return TB_OK;
  });
}

int tb_solve_kappa(const char* law_json, const char* options_json, char** out_json) {
  if (!law_json) return null_arg("law_json");
  if (!out_json) return null_arg("out_json");
  return guarded([&]() -> int {
    const FactorLaw law = FactorLaw::from_json(json::parse(law_json));
    const json o = parse_or_empty(options_json);
    SolveOptions so;
    so.tol = o.value("tol", so.tol);
    so.kappa_max = o.value("kappa_max", so.kappa_max);
    if (o.value("monte_carlo", false)) {
      so.phi.method = PhiMethod::MonteCarlo;
      so.phi.mc_samples = o.value("mc_samples", so.phi.mc_samples);
      so.phi.seed = o.value("seed", std::uint64_t{0});
    }
    if (!(so.tol > 0.0)) throw std::invalid_argument("tol must be positive");
    *out_json = dup(solve_kappa(law, so).to_json().dump(2));
    return TB_OK;
  });
}

int tb_model_create(const char* model_id, const char* params_json, tb_model** out) {
  if (!model_id) return null_arg("model_id");
  if (!out) return null_arg("out");
  return guarded([&]() -> int {
    *out = new tb_model{models::make_model(model_id, parse_or_empty(params_json))};
    return TB_OK;
  });
}

void tb_model_free(tb_model* model) { delete model; }

int tb_model_describe(const tb_model* model, char** out_json) {
  if (!model) return null_arg("model");
  if (!out_json) return null_arg("out_json");
  return guarded([&]() -> int {
    json j{{"model_id", model->model.id}, {"params", model->model.params},
           {"family", model->model.family->describe()}, {"default_depth", model->model.default_depth},
           {"index_scale", model->model.index_scale}};
    *out_json = dup(j.dump(2));
    return TB_OK;
  });
}

int tb_sample(const tb_model* model, const char* mode_json, size_t n, uint64_t seed, tb_sample_set** out) {
  if (!model) return null_arg("model");
  if (!out) return null_arg("out");
  return guarded([&]() -> int {
    if (n == 0) throw std::invalid_argument("n must be positive");
    const json m = parse_or_empty(mode_json);
    const std::string kind = m.value("kind", "backward");
    StationaryMode mode;
    if (kind == "backward")
      mode = Backward{m.value("depth", model->model.default_depth)};
    else if (kind == "long_run")
      mode = LongRun{m.value("burn_in", std::size_t{1000}), m.value("thin", std::size_t{1})};
    else
      throw std::invalid_argument("unknown mode kind '" + kind + "'");
    SampleOptions so;
    so.model_id = model->model.id;
    *out = new tb_sample_set{sample_stationary(*model->model.family, mode, n, seed, so)};
    return TB_OK;
  });
}

void tb_sample_set_free(tb_sample_set* s) { delete s; }

size_t tb_sample_set_size(const tb_sample_set* s) { return s ? s->samples.size() : 0; }

int tb_sample_set_values(const tb_sample_set* s, double* out, size_t cap) {
  if (!s) return null_arg("s");
  if (!out && cap > 0) return null_arg("out");
  const auto& v = s->samples.values();
  const std::size_t n = std::min(cap, v.size());
  std::copy(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n), out);
  return TB_OK;
}

int tb_hill(const tb_sample_set* s, size_t k, char** out_json) {
  if (!s) return null_arg("s");
  if (!out_json) return null_arg("out_json");
  return guarded([&]() -> int {
    *out_json = dup(hill(s->samples, k).to_json().dump(2));
    return TB_OK;
  });
}

int tb_sandwich_verify(const tb_model* model, const char* options_json, char** out_json) {
  if (!model) return null_arg("model");
  if (!out_json) return null_arg("out_json");
  return guarded([&]() -> int {
    const auto& m = model->model;
    if (!m.bounds) throw std::invalid_argument("model '" + m.id + "' has no closed-form sandwich");
    const json o = parse_or_empty(options_json);
    const auto envs = o.value("envs", std::size_t{10'000});
    const auto points = o.value("points", std::size_t{100});
    if (envs == 0 || points == 0) throw std::invalid_argument("envs and points must be positive");
    SandwichBounds b = m.bounds(o.value("r", m.default_r));
    if (o.value("corrupt", false)) b = corrupt_upper(b);
    const auto depths = o.value("depths", std::vector<std::size_t>{2, 5});
    const SandwichReport rep =
        verify_sandwich(*m.family, b, envs, points, o.value("seed", std::uint64_t{0}), {}, depths);
    json j = rep.to_json();
    j["model_id"] = m.id;
    j["bounds"] = b.to_json();
    *out_json = dup(j.dump(2));
    if (rep.total_violations() > 0)
      return fail(TB_VIOLATION, std::to_string(rep.total_violations()) + " sandwich violations");
    return TB_OK;
  });
}

int tb_run_config(const char* config_json, char** out_report_json) {
  if (!config_json) return null_arg("config_json");
  if (!out_report_json) return null_arg("out_report_json");
  *out_report_json = nullptr;
  return guarded([&]() -> int {
    const ExperimentConfig cfg = ExperimentConfig::from_json(json::parse(config_json));
    const RunReport rep = run_experiment(cfg);
    json j = rep.to_json();
    j["wall_seconds"] = rep.wall_seconds;
    *out_report_json = dup(j.dump(2));
    if (!rep.passed()) return fail(TB_VIOLATION, "one or more assertions failed");
    return TB_OK;
  });
}

}  // extern "C"
