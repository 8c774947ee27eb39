#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "tailbound/errors.hpp"

namespace tailbound {

inline constexpr const char* kVersion = "0.1.0";

/// {model_id, params, seed, n_samples, mode, analysis: [{op, ...}], output_dir}.
struct ExperimentConfig {
  std::string model_id;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::size_t n_samples = 100'000;
  nlohmann::json mode = {{"kind", "backward"}, {"depth", 0}};
  nlohmann::json analysis = nlohmann::json::array();
  std::string output_dir;

  /// Throws std::invalid_argument on schema errors (missing seed, unknown model_id, ...).
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

enum class FailureKind { Usage, Analytic, Runtime };

/// A pipeline stage failed; `kind` drives the CLI exit code.
class StageError : public Error {
 public:
  StageError(std::string stage, FailureKind kind, const std::string& what)
      : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)), kind_(kind) {}
  const std::string& stage() const noexcept { return stage_; }
  FailureKind kind() const noexcept { return kind_; }

 private:
  std::string stage_;
  FailureKind kind_;
};

struct AssertionResult {
  std::string name;
  bool passed = false;
  nlohmann::json detail;
};

struct AnalysisResult {
  std::string op;
  nlohmann::json result;
  std::vector<AssertionResult> assertions;
};

struct RunReport {
  nlohmann::json config;
  nlohmann::json sample;  // summary of the main sample
  std::vector<AnalysisResult> analyses;
  std::vector<std::string> files;
  double wall_seconds = 0.0;  // kept out of to_json so reports stay byte-identical

  bool passed() const;
  nlohmann::json to_json() const;
};

/// Simulates the model once, runs every analysis on that sample and writes
/// report.json, timing.json, samples.csv and plot data to output_dir (when
/// set). On failure all files written so far are removed and StageError is
/// thrown.
RunReport run_experiment(const ExperimentConfig& config);

/// Names of supported analysis ops.
const std::vector<std::string>& analysis_ops();

}  // namespace tailbound
