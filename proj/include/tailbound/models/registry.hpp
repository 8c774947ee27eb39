#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tailbound/cramer.hpp"
#include "tailbound/ifs.hpp"
#include "tailbound/sandwich.hpp"

namespace tailbound::models {

/// A registered model: the chain whose distance tail is studied plus its
/// closed-form analytic companions.
struct Model {
  std::string id;
  nlohmann::json params;  // normalized echo
  FamilyPtr family;
  /// Closed-form sandwich at r; empty when the model has none.
  std::function<SandwichBounds(double r)> bounds;
  double default_r = 0.0;
  /// Law of the multiplicative factor whose Cramer root is the tail index.
  std::optional<FactorLaw> m_law;
  std::optional<FactorProvider> factors;
  std::function<CertificateForm()> certificate;
  /// Multiplier from the sampled quantity's index to the reported one
  /// (2 for ARCH: W = X^2).
  double index_scale = 1.0;
  /// Backward depth when the contraction diagnostic is not informative; 0 = auto.
  std::size_t default_depth = 0;
  /// Scalar models whose state is its own distance to the reference.
  bool scalar_state = true;
};

const std::vector<std::string>& model_ids();
/// Throws std::invalid_argument for unknown ids or bad parameters.
Model make_model(const std::string& id, const nlohmann::json& params);

}  // namespace tailbound::models
