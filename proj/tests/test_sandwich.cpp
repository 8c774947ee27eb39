#include <cmath>
#include <memory>

#include "doctest.h"
#include "oracles.hpp"
#include "tailbound/fixed_points.hpp"
#include "tailbound/models/registry.hpp"
#include "tailbound/sandwich.hpp"

using namespace tailbound;

namespace {

SandwichBounds affine_exact() {
  SandwichBounds b;
  b.lower_form = LowerForm::Affine;
  b.coefficients = [](std::span<const double> t) { return Coefficients{t[0], t[0], t[1], t[1]}; };
  return b;
}

}  // namespace

TEST_CASE("bound maps evaluate each lower form") {
  const Coefficients c{2.0, 3.0, 1.0, 4.0};
  SandwichBounds b;
  b.r = 1.0;
  b.lower_form = LowerForm::MaxType;
  CHECK(b.lower(c, 0.5) == 1.0);  // below r only Q_lo
  CHECK(b.lower(c, 2.0) == 4.0);
  b.lower_form = LowerForm::Affine;
  CHECK(b.lower(c, 2.0) == 5.0);
  b.lower_form = LowerForm::PositivePart;
  CHECK(b.lower(Coefficients{2.0, 3.0, -5.0, 4.0}, 1.0) == 0.0);
  CHECK(b.upper(c, 2.0) == 10.0);
}

TEST_CASE("perpetuity sandwich is exact and the corrupted one fails") {
  auto fam = std::make_shared<AffineFamily>(law::TwoPoint{0.5, 3.0, 0.8}, law::Constant{1.0});
  const SandwichReport ok = verify_sandwich(*fam, affine_exact(), 2000, 50, 1);
  CHECK(ok.total_violations() == 0);
  CHECK(ok.slack_tolerance == -1e-9);
  CHECK(ok.by_depth.size() == 3);  // depth 1 plus the default 2 and 5
  const SandwichReport bad = verify_sandwich(*fam, corrupt_upper(affine_exact()), 2000, 50, 1);
  CHECK(bad.violations_upper > 0);
}

TEST_CASE("reference shift keeps the sandwich valid") {
  auto base = std::make_shared<AffineFamily>(law::TwoPoint{0.5, 3.0, 0.8}, law::Uniform{0.0, 1.0});
  const double delta = 5.0;
  const ReferenceShiftedFamily shifted(base, State{delta});
  const SandwichBounds b = shift_reference(affine_exact(), delta);
  CHECK(b.shift == delta);
  const SandwichReport rep = verify_sandwich(shifted, b, 2000, 50, 2);
  CHECK(rep.total_violations() == 0);
  // unshifted bounds are wrong at the new reference point
  CHECK(verify_sandwich(shifted, affine_exact(), 2000, 50, 2).total_violations() > 0);
}

TEST_CASE("numeric mesh bounds bracket the closed form") {
  auto fam = std::make_shared<AffineFamily>(law::TwoPoint{0.5, 3.0, 0.8}, law::Constant{1.0});
  const SandwichBounds b = bounds_numeric_mesh(fam, 0.0, 1e4, 2000);
  CHECK(b.provenance == Provenance::NumericMesh);
  StepRng rng(1, 0, 0);
  double th[2];
  fam->sample_env(rng, th);
  const Coefficients c = b.coefficients(th);
  CHECK(c.m_upper == doctest::Approx(th[0]).epsilon(1e-6));
  CHECK(c.q_upper == doctest::Approx(th[1]).epsilon(1e-6));
}

TEST_CASE("shape check sees the max-type jump") {
  LindleySpec s;
  s.r = 1.0;
  const LindleyFamily fam(s);
  SandwichBounds b;
  b.r = 1.0;
  b.lower_form = LowerForm::MaxType;
  b.coefficients = [](std::span<const double> t) { return Coefficients{t[0], t[0], t[1], t[1]}; };
  const MonotoneCheck m = check_bound_shape(fam, b, 1000, 4);
  CHECK(m.decreasing == 0);
  CHECK(m.coefficient_order_violations == 0);
  CHECK(m.discontinuous_lower > 0);  // M r > Q happens with M = 3
}

TEST_CASE("index bracket collapses for the exact affine sandwich") {
  auto fam = std::make_shared<AffineFamily>(law::TwoPoint{0.5, 3.0, 0.8}, law::Constant{1.0});
  const std::vector<double> grid{1.0, 10.0};
  FactorProvider fp;
  fp.m_lower = fp.m_upper = [](double) -> std::optional<FactorLaw> { return FactorLaw::two_point(0.5, 3.0, 0.8); };
  const IndexBracket br = index_bracket(*fam, [](double) { return affine_exact(); }, fp, grid);
  REQUIRE(br.entries.size() == 2);
  CHECK(br.entries[0].alpha->kappa == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(br.entries[0].beta->kappa == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(br.beta_le_alpha);
}

TEST_CASE("Ricker bracket follows the G_r factor") {
  const auto m = models::make_model("ricker", {{"a_lower", 1.35}});
  const std::vector<double> grid{5.0, 20.0, 100.0};
  const IndexBracket br = index_bracket(*m.family, m.bounds, *m.factors, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double s = std::exp(1.0 / grid[i]);
    REQUIRE(br.entries[i].beta);
    CHECK(br.entries[i].beta->kappa == doctest::Approx(oracle::two_point_kappa(0.5 * s, 3.0 * s, 0.8)).epsilon(1e-9));
  }
  CHECK(br.beta_nondecreasing);
}

TEST_CASE("certificate issues for a perpetuity and declines otherwise") {
  const AffineFamily fam(law::TwoPoint{0.5, 3.0, 0.8}, law::Constant{1.0});
  CertificateForm f;
  f.form = "affine_signed";
  f.coefficients = [](std::span<const double> t) { return std::array<double, 3>{t[0], t[1], t[1]}; };
  f.m_law = FactorLaw::two_point(0.5, 3.0, 0.8, Nonarithmetic::Declared);
  const Certificate c = exact_index_certificate(fam, f, 20000, 1);
  CHECK(c.issued);
  REQUIRE(c.kappa);
  CHECK(*c.kappa == doctest::Approx(1.0).epsilon(1e-10));

  f.m_law = FactorLaw::two_point(0.5, 3.0, 0.8, Nonarithmetic::Unknown);
  const Certificate u = exact_index_certificate(fam, f, 20000, 1);
  CHECK_FALSE(u.issued);
  CHECK(u.failed_premises.size() == 1);

  const AffineFamily small(law::TwoPoint{0.5, 0.9, 0.5}, law::Constant{1.0});
  f.m_law = FactorLaw::two_point(0.5, 0.9, 0.5, Nonarithmetic::Declared);
  CHECK_FALSE(exact_index_certificate(small, f, 20000, 1).issued);
}

TEST_CASE("moment heuristic") {
  CHECK(moment_looks_finite(std::vector<double>(1000, 1.0)));
  std::vector<double> spike(1000, 1.0);
  spike[3] = 1e6;
  CHECK_FALSE(moment_looks_finite(spike));
}
