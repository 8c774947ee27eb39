#include "tailbound/sample_set.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace tailbound {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace

const char* to_string(ValueKind k) noexcept { return k == ValueKind::Distance ? "distance" : "raw"; }

SampleSet::SampleSet(std::vector<double> values, SampleMeta meta)
    : values_(std::move(values)), meta_(std::move(meta)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]))
      throw std::invalid_argument("sample " + std::to_string(i) + " is not finite");
    if (meta_.kind == ValueKind::Distance && values_[i] < 0.0)
      throw std::invalid_argument("distance sample " + std::to_string(i) + " is negative");
  }
  sorted_ = values_;
  std::sort(sorted_.begin(), sorted_.end());
}

double SampleSet::survival(double t) const {
  if (sorted_.empty()) return 0.0;
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), t);
  return static_cast<double>(sorted_.end() - it) / static_cast<double>(sorted_.size());
}

double SampleSet::quantile(double q) const {
  if (sorted_.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level must lie in [0, 1]");
  const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(sorted_.size() - 1)));
  return sorted_[idx];
}

double SampleSet::mean() const {
  if (values_.empty()) return 0.0;
  return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
}

SampleSet SampleSet::scaled(double c) const {
  if (!(c > 0.0)) throw std::invalid_argument("scale factor must be positive");
  std::vector<double> v(values_);
  for (double& x : v) x *= c;
  SampleMeta m = meta_;
  m.extra["scaled_by"] = c;
  return SampleSet(std::move(v), std::move(m));
}

std::string SampleSet::to_csv() const {
  std::string out;
  out.reserve(values_.size() * 24 + 256);
  out += "# model_id=" + meta_.model_id + "\n";
  out += "# seed=" + std::to_string(meta_.seed) + "\n";
  out += "# mode=" + meta_.mode + "\n";
  out += "# depth=" + std::to_string(meta_.depth) + "\n";
  out += "# kind=" + std::string(to_string(meta_.kind)) + "\n";
  out += "value\n";
  for (double v : values_) {
    out += format_double(v);
    out += '\n';
  }
  return out;
}

nlohmann::json SampleSet::to_json() const {
  nlohmann::json j;
  j["model_id"] = meta_.model_id;
  j["seed"] = meta_.seed;
  j["mode"] = meta_.mode;
  j["depth"] = meta_.depth;
  j["thin"] = meta_.thin;
  j["kind"] = to_string(meta_.kind);
  j["start"] = meta_.start;
  j["warnings"] = meta_.warnings;
  j["extra"] = meta_.extra;
  j["n"] = values_.size();
  if (!sorted_.empty()) {
    j["summary"] = {{"min", sorted_.front()},
                    {"median", quantile(0.5)},
                    {"q99", quantile(0.99)},
                    {"max", sorted_.back()}};
  }
  j["values"] = values_;
  return j;
}

void SampleSet::write_csv(const std::string& path) const { write_text(path, to_csv()); }

void SampleSet::write_json(const std::string& path) const { write_text(path, to_json().dump(1)); }

SampleSet SampleSet::read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  SampleMeta meta;
  std::vector<double> values;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(2, eq - 2);
      std::string val = line.substr(eq + 1);
      if (key == "model_id") meta.model_id = val;
      else if (key == "seed") meta.seed = std::stoull(val);
      else if (key == "mode") meta.mode = val;
      else if (key == "depth") meta.depth = std::stoull(val);
      else if (key == "kind") meta.kind = val == "raw" ? ValueKind::Raw : ValueKind::Distance;
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      if (line == "value") continue;
    }
    values.push_back(std::stod(line));
  }
  return SampleSet(std::move(values), std::move(meta));
}

}  // namespace tailbound
