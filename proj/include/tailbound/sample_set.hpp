#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace tailbound {

/// Whether values are distances d(x0, X) or raw scalar states.
enum class ValueKind { Distance, Raw };

struct SampleMeta {
  std::string model_id;
  std::uint64_t seed = 0;
  std::string mode;       // backward, long_run, perpetuity, lindley, ...
  std::size_t depth = 0;  // backward depth, or burn-in for long_run
  std::size_t thin = 0;
  ValueKind kind = ValueKind::Distance;
  std::vector<double> start;
  std::vector<std::string> warnings;
  nlohmann::json extra = nlohmann::json::object();
};

/// Immutable collection of stationary draws with a sorted view.
class SampleSet {
 public:
  SampleSet(std::vector<double> values, SampleMeta meta);

  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<double>& values() const noexcept { return values_; }
  /// Ascending order.
  const std::vector<double>& sorted() const noexcept { return sorted_; }
  const SampleMeta& meta() const noexcept { return meta_; }

  /// Empirical P(X > t), strict inequality.
  double survival(double t) const;
  /// Order statistic at rank floor(q * (n - 1)).
  double quantile(double q) const;
  double mean() const;

  SampleSet scaled(double c) const;

  std::string to_csv() const;
  nlohmann::json to_json() const;
  void write_csv(const std::string& path) const;
  void write_json(const std::string& path) const;
  static SampleSet read_csv(const std::string& path);

 private:
  std::vector<double> values_;
  std::vector<double> sorted_;
  SampleMeta meta_;
};

const char* to_string(ValueKind k) noexcept;

}  // namespace tailbound
