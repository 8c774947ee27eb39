#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "tailbound/experiment.hpp"

using namespace tailbound;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json small_config(const fs::path& out) {
  return {{"model_id", "perpetuity"},
          {"params", {{"m", {{"kind", "two_point"}, {"a", 0.5}, {"b", 3}, {"p", 0.8}}}, {"q", 1}}},
          {"seed", 7},
          {"n_samples", 20000},
          {"mode", {{"kind", "backward"}, {"depth", 100}}},
          {"analysis",
           {{{"op", "solve_kappa"}, {"assert", {{"kappa_within", {1.0, 1e-8}}}}},
            {{"op", "hill"}, {"k", 500}},
            {{"op", "sandwich_verify"}, {"envs", 200}, {"points", 10}, {"assert", {{"zero_violations", true}}}},
            {{"op", "plot_data"}}}},
          {"output_dir", out.string()}};
}

}  // namespace

TEST_CASE("config schema errors are usage errors") {
  json c = small_config("");
  c.erase("seed");
  CHECK_THROWS_AS(ExperimentConfig::from_json(c), std::invalid_argument);
  c = small_config("");
  c["model_id"] = "nope";
  CHECK_THROWS_AS(ExperimentConfig::from_json(c), std::invalid_argument);
  c = small_config("");
  c["analysis"].push_back({{"op", "frobnicate"}});
  CHECK_THROWS_AS(ExperimentConfig::from_json(c), std::invalid_argument);
  c = small_config("");
  c["bogus"] = 1;
  CHECK_THROWS_AS(ExperimentConfig::from_json(c), std::invalid_argument);
}

TEST_CASE("nested experiment block is accepted") {
  json c{{"model_id", "perpetuity"}, {"seed", 1}, {"experiment", {{"n_samples", 100}, {"analysis", json::array()}}}};
  CHECK(ExperimentConfig::from_json(c).n_samples == 100);
}

TEST_CASE("reports are byte-identical across runs and thread counts") {
  const fs::path base = fs::temp_directory_path() / "tb_exp_test";
  fs::remove_all(base);
  const RunReport a = run_experiment(ExperimentConfig::from_json(small_config(base / "a")));
  setenv("TAILBOUND_THREADS", "1", 1);
  const RunReport b = run_experiment(ExperimentConfig::from_json(small_config(base / "b")));
  unsetenv("TAILBOUND_THREADS");
  CHECK(a.passed());
  auto strip = [](std::string s, const std::string& dir) {
    for (auto p = s.find(dir); p != std::string::npos; p = s.find(dir)) s.replace(p, dir.size(), "<dir>");
    return s;
  };
  CHECK(strip(slurp(base / "a" / "report.json"), (base / "a").string()) ==
        strip(slurp(base / "b" / "report.json"), (base / "b").string()));
  CHECK(slurp(base / "a" / "samples.csv") == slurp(base / "b" / "samples.csv"));
  CHECK(fs::exists(base / "a" / "timing.json"));
  CHECK(fs::exists(base / "a" / "survival.txt"));
  CHECK(slurp(base / "a" / "report.json").find("wall_seconds") == std::string::npos);
  fs::remove_all(base);
}

TEST_CASE("failing stage removes partial outputs") {
  const fs::path dir = fs::temp_directory_path() / "tb_exp_fail";
  fs::remove_all(dir);
  json c = small_config(dir);
  c["analysis"].push_back({{"op", "rotation_check"}});  // not a mirek model
  try {
    run_experiment(ExperimentConfig::from_json(c));
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.kind() == FailureKind::Usage);
    CHECK(e.stage() == "analysis[4]:rotation_check");
  }
  CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("analytic non-existence is classified") {
  json c = small_config("");
  c["params"]["m"] = {{"kind", "two_point"}, {"a", 0.5}, {"b", 0.9}, {"p", 0.5}};
  c["analysis"] = json::array({{{"op", "solve_kappa"}}});
  try {
    run_experiment(ExperimentConfig::from_json(c));
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.kind() == FailureKind::Analytic);
  }
}

TEST_CASE("failed assertions are reported, not thrown") {
  json c = small_config("");
  c["analysis"] = json::array({{{"op", "hill"}, {"k", 500}, {"assert", {{"index_in", {5.0, 6.0}}}}}});
  const RunReport r = run_experiment(ExperimentConfig::from_json(c));
  CHECK_FALSE(r.passed());
  CHECK(r.to_json()["passed"] == false);
}
