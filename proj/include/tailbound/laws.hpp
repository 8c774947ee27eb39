#pragma once

#include <variant>

#include "json.hpp"
#include "tailbound/rng.hpp"

namespace tailbound {

namespace law {
struct Constant {
  double value;
};
/// P(X = a) = p, P(X = b) = 1 - p.
struct TwoPoint {
  double a, b, p;
};
struct Uniform {
  double lo, hi;
};
struct LogNormal {
  double mu, sigma;
};
struct Exponential {
  double rate;
};
struct Normal {
  double mu, sigma;
};
}  // namespace law

/// A univariate law used for model coefficients (Q, xi, beta, gamma, ...).
class ScalarLaw {
 public:
  using Kind = std::variant<law::Constant, law::TwoPoint, law::Uniform, law::LogNormal,
                            law::Exponential, law::Normal>;

  ScalarLaw(Kind kind);  // NOLINT: implicit from any alternative is intended
  ScalarLaw(law::Constant c) : ScalarLaw(Kind{c}) {}
  ScalarLaw(law::TwoPoint t) : ScalarLaw(Kind{t}) {}
  ScalarLaw(law::Uniform u) : ScalarLaw(Kind{u}) {}
  ScalarLaw(law::LogNormal l) : ScalarLaw(Kind{l}) {}
  ScalarLaw(law::Exponential e) : ScalarLaw(Kind{e}) {}
  ScalarLaw(law::Normal n) : ScalarLaw(Kind{n}) {}

  /// Accepts a bare number (constant) or {"kind": ..., params...}.
  static ScalarLaw from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  double sample(StepRng& rng) const;

  double support_min() const;
  double support_max() const;
  bool nonnegative() const { return support_min() >= 0.0; }
  /// Symmetric about zero.
  bool symmetric() const;
  const Kind& kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace tailbound
