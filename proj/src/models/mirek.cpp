#include "tailbound/models/mirek.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "tailbound/errors.hpp"

namespace tailbound::models {

namespace {

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace

MirekSpec MirekSpec::from_json(const nlohmann::json& j) {
  MirekSpec s;
  s.dim = j.value("dim", std::size_t{2});
  if (j.contains("beta")) s.beta_law = ScalarLaw::from_json(j.at("beta"));
  s.rotation = j.value("rotation", std::string("haar"));
  if (j.contains("perturbation")) {
    const auto& p = j.at("perturbation");
    s.perturbation = p.value("kind", std::string("radial"));
    s.q = p.value("q", 1.0);
    if (p.contains("u")) {
      s.u_lo = p.at("u").at(0).get<double>();
      s.u_hi = p.at("u").at(1).get<double>();
    }
    s.v = p.value("v", 0.5);
  }
  s.nonarithmetic = nonarithmetic_from_json(j);
  s.validate();
  return s;
}

nlohmann::json MirekSpec::to_json() const {
  nlohmann::json p{{"kind", perturbation}};
  if (perturbation == "fixed") p["q"] = q;
  if (perturbation == "radial") {
    p["u"] = {u_lo, u_hi};
    p["v"] = v;
  }
  return {{"dim", dim},
          {"beta", beta_law.to_json()},
          {"rotation", rotation},
          {"perturbation", p},
          {"nonarithmetic", tailbound::to_string(nonarithmetic)}};
}

void MirekSpec::validate() const {
  if (dim < 2) throw std::invalid_argument("mirek needs dim >= 2");
  if (!(beta_law.support_min() > 0.0) && !std::holds_alternative<law::LogNormal>(beta_law.kind()))
    throw std::invalid_argument("mirek beta law must be positive");
  if (rotation != "haar" && rotation != "identity") throw std::invalid_argument("mirek rotation must be haar or identity");
  if (perturbation == "fixed") {
    if (!(q > 0.0)) throw std::invalid_argument("mirek fixed perturbation needs q > 0");
  } else if (perturbation == "radial") {
    if (!(u_lo >= 1.0 && u_hi >= u_lo && v >= 0.0))
      throw std::invalid_argument("mirek radial perturbation needs 1 <= u_lo <= u_hi and v >= 0");
  } else if (perturbation != "none") {
    throw std::invalid_argument("mirek perturbation must be none, fixed or radial");
  }
}

void sample_rotation(StepRng& rng, std::size_t dim, std::span<double> g) {
  if (dim == 2) {
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    const double c = std::cos(phi), s = std::sin(phi);
    g[0] = c;
    g[1] = -s;
    g[2] = s;
    g[3] = c;
    return;
  }
  // Gram-Schmidt on Gaussian columns: positive R diagonal, so the law is Haar
  std::vector<double> a(dim * dim);
  for (auto& v : a) v = rng.normal();
  for (std::size_t j = 0; j < dim; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      double dot = 0.0;
      for (std::size_t i = 0; i < dim; ++i) dot += a[i * dim + k] * a[i * dim + j];
      for (std::size_t i = 0; i < dim; ++i) a[i * dim + j] -= dot * a[i * dim + k];
    }
    double nrm = 0.0;
    for (std::size_t i = 0; i < dim; ++i) nrm += a[i * dim + j] * a[i * dim + j];
    nrm = std::sqrt(nrm);
    for (std::size_t i = 0; i < dim; ++i) a[i * dim + j] /= nrm;
  }
  std::copy(a.begin(), a.end(), g.begin());
}

MirekFamily::MirekFamily(MirekSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

void MirekFamily::sample_env(StepRng& rng, std::span<double> theta) const {
  const std::size_t m = spec_.dim;
  theta[0] = spec_.beta_law.sample(rng);
  if (!(theta[0] > 0.0)) throw ContractViolation("mirek beta must be positive");
  auto g = theta.subspan(1, m * m);
  if (spec_.rotation == "identity") {
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) g[i * m + i] = 1.0;
  } else {
    sample_rotation(rng, m, g);
  }
  double u = 0.0, v = 0.0;
  if (spec_.perturbation == "fixed") {
    u = spec_.q * rng.uniform();
  } else if (spec_.perturbation == "radial") {
    u = spec_.u_lo + (spec_.u_hi - spec_.u_lo) * rng.uniform();
    v = spec_.v * (2.0 * rng.uniform() - 1.0);
  }
  theta[1 + m * m] = u;
  theta[2 + m * m] = v;
}

void MirekFamily::apply(std::span<const double> theta, std::span<const double> x, std::span<double> out) const {
  const std::size_t m = spec_.dim;
  const double beta = theta[0];
  const double u = theta[1 + m * m], v = theta[2 + m * m];
  thread_local std::vector<double> y;
  y.resize(m);
  for (std::size_t i = 0; i < m; ++i) y[i] = beta * x[i];
  if (spec_.perturbation == "fixed") {
    y[0] += u;
  } else if (spec_.perturbation == "radial") {
    const double s = 1.0 / std::max(1.0, norm(x));
    for (std::size_t i = 0; i < m; ++i) y[i] += u * s * x[i];
    for (std::size_t i = 0; i + 1 < m; i += 2) {
      y[i] -= v * s * x[i + 1];
      y[i + 1] += v * s * x[i];
    }
  }
  const double* g = theta.data() + 1;
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < m; ++k) acc += g[i * m + k] * y[k];
    out[i] = acc;
  }
}

double MirekFamily::q_of(std::span<const double> theta) const {
  const std::size_t m = spec_.dim;
  const double u = theta[1 + m * m], v = theta[2 + m * m];
  if (spec_.perturbation == "fixed") return u;
  if (spec_.perturbation == "radial") return std::hypot(u, v);
  return 0.0;
}

double MirekFamily::q_prime_of(std::span<const double> theta) const {
  if (spec_.perturbation == "radial") return theta[1 + spec_.dim * spec_.dim];
  return -q_of(theta);
}

double MirekFamily::lipschitz_bound(std::span<const double> theta) const {
  // nu is 1-Lipschitz (projection onto the unit ball) and |J| <= 1
  return theta[0] + (spec_.perturbation == "radial" ? q_of(theta) : 0.0);
}

State MirekFamily::default_start() const {
  State s(spec_.dim, 0.0);
  s[0] = 1.0;
  return s;
}

void MirekFamily::sample_point(StepRng& rng, std::span<double> x) const {
  double n = 0.0;
  for (auto& v : x) {
    v = rng.normal();
    n += v * v;
  }
  n = std::sqrt(n);
  const double radius = spec_.perturbation == "radial" ? std::pow(10.0, 6.0 * rng.uniform())
                                                       : std::pow(10.0, -3.0 + 9.0 * rng.uniform());
  for (auto& v : x) v *= radius / n;
}

bool MirekFamily::in_state_space(std::span<const double> x) const {
  return spec_.perturbation != "radial" || norm(x) >= 1.0 - 1e-12;
}

nlohmann::json MirekFamily::describe() const {
  auto j = spec_.to_json();
  j["model_id"] = id();
  if (spec_.perturbation == "radial") j["state_space"] = "|x| >= 1";
  return j;
}

nlohmann::json RotationCheck::to_json() const {
  return {{"samples", samples}, {"max_norm_error", max_norm_error}, {"max_orthogonality_error", max_orthogonality_error}};
}

RotationCheck mirek_rotation_check(const MirekSpec& spec, std::size_t n, std::uint64_t seed) {
  const std::size_t m = spec.dim;
  std::vector<double> g(m * m), x(m);
  RotationCheck rep;
  rep.samples = n;
  for (std::size_t s = 0; s < n; ++s) {
    StepRng rng(seed, derive_stream(0x2070, 0), s);
    sample_rotation(rng, m, g);
    for (auto& v : x) v = rng.normal();
    double nx = 0.0, ngx = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < m; ++k) acc += g[i * m + k] * x[k];
      ngx += acc * acc;
      nx += x[i] * x[i];
    }
    rep.max_norm_error = std::max(rep.max_norm_error, std::fabs(std::sqrt(ngx) - std::sqrt(nx)) / std::sqrt(nx));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < m; ++k) acc += g[k * m + i] * g[k * m + j];
        rep.max_orthogonality_error = std::max(rep.max_orthogonality_error, std::fabs(acc - (i == j ? 1.0 : 0.0)));
      }
  }
  return rep;
}

SandwichBounds mirek_bounds(const MirekSpec& spec) {
  auto fam = std::make_shared<MirekFamily>(spec);
  SandwichBounds b;
  b.lower_form = LowerForm::PositivePart;
  b.coefficients = [fam](std::span<const double> theta) {
    return Coefficients{theta[0], theta[0], fam->q_prime_of(theta), fam->q_of(theta)};
  };
  return b;
}

FactorLaw mirek_factor_law(const MirekSpec& spec) { return factor_from_scalar(spec.beta_law, spec.nonarithmetic); }

CertificateForm mirek_certificate_form(const MirekSpec& spec) {
  auto fam = std::make_shared<MirekFamily>(spec);
  CertificateForm f;
  f.form = "affine_signed";
  f.coefficients = [fam](std::span<const double> theta) {
    return std::array<double, 3>{theta[0], fam->q_prime_of(theta), fam->q_of(theta)};
  };
  f.m_law = mirek_factor_law(spec);
  return f;
}

}  // namespace tailbound::models
