#include "tailbound/laws.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace tailbound {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();

double required(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw std::invalid_argument(std::string("law parameter '") + key + "' missing or not a number");
  return j.at(key).get<double>();
}

}  // namespace

ScalarLaw::ScalarLaw(Kind kind) : kind_(kind) {
  std::visit(Overloaded{
                 [](const law::Constant& c) {
                   if (!std::isfinite(c.value)) throw std::invalid_argument("constant law must be finite");
                 },
                 [](const law::TwoPoint& t) {
                   if (!std::isfinite(t.a) || !std::isfinite(t.b) || !(t.p >= 0.0 && t.p <= 1.0))
                     throw std::invalid_argument("two_point law needs finite a, b and p in [0, 1]");
                 },
                 [](const law::Uniform& u) {
                   if (!(u.lo <= u.hi) || !std::isfinite(u.lo) || !std::isfinite(u.hi))
                     throw std::invalid_argument("uniform law needs finite lo <= hi");
                 },
                 [](const law::LogNormal& l) {
                   if (!(l.sigma >= 0.0) || !std::isfinite(l.mu))
                     throw std::invalid_argument("lognormal law needs sigma >= 0");
                 },
                 [](const law::Exponential& e) {
                   if (!(e.rate > 0.0)) throw std::invalid_argument("exponential law needs rate > 0");
                 },
                 [](const law::Normal& n) {
                   if (!(n.sigma >= 0.0) || !std::isfinite(n.mu))
                     throw std::invalid_argument("normal law needs sigma >= 0");
                 },
             },
             kind_);
}

ScalarLaw ScalarLaw::from_json(const nlohmann::json& j) {
  if (j.is_number()) return law::Constant{j.get<double>()};
  if (!j.is_object() || !j.contains("kind"))
    throw std::invalid_argument("law must be a number or an object with a 'kind' field");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "constant") return law::Constant{required(j, "value")};
  if (kind == "two_point") return law::TwoPoint{required(j, "a"), required(j, "b"), required(j, "p")};
  if (kind == "uniform") return law::Uniform{required(j, "lo"), required(j, "hi")};
  if (kind == "lognormal") return law::LogNormal{required(j, "mu"), required(j, "sigma")};
  if (kind == "exponential") return law::Exponential{j.value("rate", 1.0)};
  if (kind == "normal") return law::Normal{j.value("mu", 0.0), j.value("sigma", 1.0)};
  throw std::invalid_argument("unknown law kind '" + kind + "'");
}

nlohmann::json ScalarLaw::to_json() const {
  return std::visit(
      Overloaded{
          [](const law::Constant& c) -> nlohmann::json { return {{"kind", "constant"}, {"value", c.value}}; },
          [](const law::TwoPoint& t) -> nlohmann::json {
            return {{"kind", "two_point"}, {"a", t.a}, {"b", t.b}, {"p", t.p}};
          },
          [](const law::Uniform& u) -> nlohmann::json { return {{"kind", "uniform"}, {"lo", u.lo}, {"hi", u.hi}}; },
          [](const law::LogNormal& l) -> nlohmann::json {
            return {{"kind", "lognormal"}, {"mu", l.mu}, {"sigma", l.sigma}};
          },
          [](const law::Exponential& e) -> nlohmann::json { return {{"kind", "exponential"}, {"rate", e.rate}}; },
          [](const law::Normal& n) -> nlohmann::json { return {{"kind", "normal"}, {"mu", n.mu}, {"sigma", n.sigma}}; },
      },
      kind_);
}

double ScalarLaw::sample(StepRng& rng) const {
  return std::visit(Overloaded{
                        [](const law::Constant& c) { return c.value; },
                        [&](const law::TwoPoint& t) { return rng.uniform() < t.p ? t.a : t.b; },
                        [&](const law::Uniform& u) { return u.lo + (u.hi - u.lo) * rng.uniform(); },
                        [&](const law::LogNormal& l) { return std::exp(l.mu + l.sigma * rng.normal()); },
                        [&](const law::Exponential& e) { return rng.exponential() / e.rate; },
                        [&](const law::Normal& n) { return n.mu + n.sigma * rng.normal(); },
                    },
                    kind_);
}

double ScalarLaw::support_min() const {
  return std::visit(Overloaded{
                        [](const law::Constant& c) { return c.value; },
                        [](const law::TwoPoint& t) {
                          if (t.p == 0.0) return t.b;
                          if (t.p == 1.0) return t.a;
                          return std::min(t.a, t.b);
                        },
                        [](const law::Uniform& u) { return u.lo; },
                        [](const law::LogNormal&) { return 0.0; },
                        [](const law::Exponential&) { return 0.0; },
                        [](const law::Normal& n) { return n.sigma == 0.0 ? n.mu : -kInf; },
                    },
                    kind_);
}

double ScalarLaw::support_max() const {
  return std::visit(Overloaded{
                        [](const law::Constant& c) { return c.value; },
                        [](const law::TwoPoint& t) {
                          if (t.p == 0.0) return t.b;
                          if (t.p == 1.0) return t.a;
                          return std::max(t.a, t.b);
                        },
                        [](const law::Uniform& u) { return u.hi; },
                        [](const law::LogNormal& l) { return l.sigma == 0.0 ? std::exp(l.mu) : kInf; },
                        [](const law::Exponential&) { return kInf; },
                        [](const law::Normal& n) { return n.sigma == 0.0 ? n.mu : kInf; },
                    },
                    kind_);
}

bool ScalarLaw::symmetric() const {
  return std::visit(Overloaded{
                        [](const law::Constant& c) { return c.value == 0.0; },
                        [](const law::TwoPoint& t) {
                          return (t.a == -t.b && t.p == 0.5) || (t.a == 0.0 && t.b == 0.0);
                        },
                        [](const law::Uniform& u) { return u.lo == -u.hi; },
                        [](const law::LogNormal&) { return false; },
                        [](const law::Exponential&) { return false; },
                        [](const law::Normal& n) { return n.mu == 0.0; },
                    },
                    kind_);
}

}  // namespace tailbound
