#include "tailbound/models/registry.hpp"

#include <cmath>
#include <stdexcept>

#include "tailbound/fixed_points.hpp"
#include "tailbound/models/arch.hpp"
#include "tailbound/models/dual_law.hpp"
#include "tailbound/models/logistic.hpp"
#include "tailbound/models/mirek.hpp"
#include "tailbound/models/ricker.hpp"

namespace tailbound::models {

namespace {

ScalarLaw law_or(const nlohmann::json& p, const char* key, ScalarLaw fallback) {
  return p.contains(key) ? ScalarLaw::from_json(p.at(key)) : fallback;
}

std::size_t depth_from_factor(const FactorLaw& law) {
  const double ml = mean_log(law).value;
  return std::isfinite(ml) && ml < 0.0 ? backward_depth_for(ml) : 0;
}

Model perpetuity(const nlohmann::json& p) {
  const ScalarLaw m = law_or(p, "m", law::TwoPoint{0.5, 3.0, 0.8});
  const ScalarLaw q = law_or(p, "q", law::Constant{1.0});
  const Nonarithmetic na = nonarithmetic_from_json(p);
  Model out;
  out.id = "perpetuity";
  out.params = {{"m", m.to_json()}, {"q", q.to_json()}, {"nonarithmetic", to_string(na)}};
  out.family = std::make_shared<AffineFamily>(m, q);
  const bool nonneg = m.nonnegative() && q.nonnegative();
  out.bounds = [nonneg](double) {
    SandwichBounds b;
    if (nonneg) {
      b.lower_form = LowerForm::Affine;
      b.coefficients = [](std::span<const double> t) { return Coefficients{t[0], t[0], t[1], t[1]}; };
    } else {
      b.lower_form = LowerForm::PositivePart;
      b.coefficients = [](std::span<const double> t) {
        const double am = std::fabs(t[0]), aq = std::fabs(t[1]);
        return Coefficients{am, am, -aq, aq};
      };
    }
    return b;
  };
  if (m.nonnegative()) {
    out.m_law = factor_from_scalar(m, na);
    out.default_depth = depth_from_factor(*out.m_law);
  }
  if (nonneg) {
    const auto ml = out.m_law;
    out.certificate = [ml] {
      CertificateForm f;
      f.form = "affine_signed";
      f.coefficients = [](std::span<const double> t) { return std::array<double, 3>{t[0], t[1], t[1]}; };
      f.m_law = ml;
      return f;
    };
  }
  return out;
}

Model lindley(const nlohmann::json& p) {
  LindleySpec s;
  s.r = p.value("r", 1.0);
  s.m_law = law_or(p, "m", law::TwoPoint{0.5, 3.0, 0.8});
  s.q_law = law_or(p, "q", law::Uniform{0.0, 2.0});
  const Nonarithmetic na = nonarithmetic_from_json(p);
  Model out;
  out.id = "lindley";
  out.params = {{"r", s.r}, {"m", s.m_law.to_json()}, {"q", s.q_law.to_json()}, {"nonarithmetic", to_string(na)}};
  out.family = std::make_shared<LindleyFamily>(s);
  const double r = s.r;
  out.default_r = r;
  out.bounds = [r](double) {
    SandwichBounds b;
    b.r = r;
    b.lower_form = LowerForm::MaxType;
    b.coefficients = [](std::span<const double> t) { return Coefficients{t[0], t[0], t[1], t[1]}; };
    return b;
  };
  out.m_law = factor_from_scalar(s.m_law, na);
  out.default_depth = depth_from_factor(*out.m_law);
  const auto ml = out.m_law;
  out.certificate = [ml, r] {
    CertificateForm f;
    f.form = "max_type";
    f.r = r;
    f.coefficients = [](std::span<const double> t) { return std::array<double, 3>{t[0], t[1], t[1]}; };
    f.m_law = ml;
    return f;
  };
  return out;
}

Model arch(const nlohmann::json& p) {
  const ArchSpec s = ArchSpec::from_json(p);
  Model out;
  out.id = "arch";
  out.params = s.to_json();
  out.family = std::make_shared<ArchWFamily>(s);
  out.bounds = [s](double) { return arch_bounds(s); };
  out.m_law = arch_factor_law(s);
  out.certificate = [s] { return arch_certificate_form(s); };
  out.index_scale = 2.0;
  out.default_depth = depth_from_factor(*out.m_law);
  return out;
}

Model logistic(const nlohmann::json& p) {
  const LogisticSpec s = LogisticSpec::from_json(p);
  Model out;
  out.id = "logistic";
  out.params = s.to_json();
  out.family = std::make_shared<LogisticWFamily>(s);
  out.bounds = [s](double) { return s.a_lower ? logistic_bounds(s) : logistic_lower_only(s); };
  out.m_law = logistic_factor_law(s);
  if (s.a_lower) out.certificate = [s] { return logistic_certificate_form(s); };
  out.default_depth = depth_from_factor(*out.m_law);
  return out;
}

Model ricker(const nlohmann::json& p) {
  const RickerSpec s = RickerSpec::from_json(p);
  Model out;
  out.id = "ricker";
  out.params = s.to_json();
  out.family = std::make_shared<RickerWFamily>(s);
  out.default_r = p.value("r", 5.0);
  out.params["r"] = out.default_r;
  out.bounds = [s](double r) { return s.a_lower ? ricker_bounds(s, r) : ricker_lower_only(s); };
  out.m_law = ricker_factor_law(s);
  out.factors = ricker_factor_provider(s);
  out.default_depth = depth_from_factor(*out.m_law);
  return out;
}

Model mirek(const nlohmann::json& p) {
  const MirekSpec s = MirekSpec::from_json(p);
  Model out;
  out.id = "mirek";
  out.params = s.to_json();
  out.family = std::make_shared<MirekFamily>(s);
  out.bounds = [s](double) { return mirek_bounds(s); };
  out.m_law = mirek_factor_law(s);
  out.certificate = [s] { return mirek_certificate_form(s); };
  // the angular part is neutral, so the pair diagnostic cannot see the radial contraction
  out.default_depth = depth_from_factor(*out.m_law);
  out.scalar_state = false;
  return out;
}

Model dual_law(const nlohmann::json& p) {
  const DualLawSpec s = DualLawSpec::from_json(p);
  Model out;
  out.id = "dual_law";
  out.params = s.to_json();
  out.family = std::make_shared<DualLawFamily>(s);
  out.bounds = [s](double) { return dual_law_bounds(s); };
  out.m_law = dual_law_factor_law(s);
  out.certificate = [s] { return dual_law_certificate_form(s); };
  out.default_depth = depth_from_factor(*out.m_law);
  out.scalar_state = false;
  return out;
}

}  // namespace

const std::vector<std::string>& model_ids() {
  static const std::vector<std::string> ids{"perpetuity", "lindley", "arch", "logistic", "ricker", "mirek", "dual_law"};
  return ids;
}

Model make_model(const std::string& id, const nlohmann::json& params) {
  const nlohmann::json p = params.is_null() ? nlohmann::json::object() : params;
  if (!p.is_object()) throw std::invalid_argument("model params must be a JSON object");
  if (id == "perpetuity") return perpetuity(p);
  if (id == "lindley") return lindley(p);
  if (id == "arch") return arch(p);
  if (id == "logistic") return logistic(p);
  if (id == "ricker") return ricker(p);
  if (id == "mirek") return mirek(p);
  if (id == "dual_law") return dual_law(p);
  throw std::invalid_argument("unknown model_id '" + id + "'");
}

}  // namespace tailbound::models
