#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tailbound/cramer.hpp"
#include "tailbound/ifs.hpp"
#include "tailbound/tail_stats.hpp"

namespace tailbound {

/// Shape of the lower bounding map.
///   MaxType:      F(t) = Q_lo v (M_lo t 1{t > r})
///   Affine:       F(t) = Q_lo + M_lo t        (Q_lo may be negative)
///   PositivePart: F(t) = (Q_lo + M_lo t)^+
/// The upper map is always G(t) = Q_hi + M_hi t.
enum class LowerForm { MaxType, Affine, PositivePart };
enum class Provenance { ClosedForm, NumericMesh };

struct Coefficients {
  double m_lower = 0.0;
  double m_upper = 0.0;
  double q_lower = 0.0;
  double q_upper = 0.0;
};

using CoefficientFn = std::function<Coefficients(std::span<const double> theta)>;

struct SandwichBounds {
  double r = 0.0;
  LowerForm lower_form = LowerForm::MaxType;
  CoefficientFn coefficients;
  /// Distance d(x0, x1) to a new reference point; see shift_reference.
  double shift = 0.0;
  Provenance provenance = Provenance::ClosedForm;
  double mesh_max = 0.0;
  std::size_t mesh_nodes = 0;
  std::string note;

  double lower(const Coefficients& c, double t) const;
  double upper(const Coefficients& c, double t) const;
  nlohmann::json to_json() const;
};

/// Bounds for a reference point at distance delta from the old one.
///
/// For t' = d(x1, x) and t = d(x0, x) we have t' - delta <= t <= t' + delta,
/// so the maps are evaluated at the shifted argument:
///   upper  Q_hi + delta (1 + M_hi) + M_hi t'
///   affine Q_lo - delta (1 + M_lo) + M_lo t'
///   max    (Q_lo - delta)^+ v ((M_lo t' - delta (1 + M_lo)) 1{t' > r + delta})
/// Slopes are unchanged.
SandwichBounds shift_reference(const SandwichBounds& bounds, double delta);

/// Debug negative control: upper slope halved.
SandwichBounds corrupt_upper(const SandwichBounds& bounds);

/// The same maps with a different reference point.
class ReferenceShiftedFamily final : public MapFamily {
 public:
  ReferenceShiftedFamily(FamilyPtr base, State reference);
  std::string id() const override { return base_->id(); }
  std::size_t state_dim() const override { return base_->state_dim(); }
  std::size_t env_dim() const override { return base_->env_dim(); }
  void sample_env(StepRng& rng, std::span<double> theta) const override { base_->sample_env(rng, theta); }
  void apply(std::span<const double> theta, std::span<const double> x, std::span<double> out) const override {
    base_->apply(theta, x, out);
  }
  double lipschitz_bound(std::span<const double> theta) const override { return base_->lipschitz_bound(theta); }
  double metric(std::span<const double> x, std::span<const double> y) const override { return base_->metric(x, y); }
  State reference_point() const override { return reference_; }
  State default_start() const override { return base_->default_start(); }
  void sample_point(StepRng& rng, std::span<double> x) const override { base_->sample_point(rng, x); }
  bool in_state_space(std::span<const double> x) const override { return base_->in_state_space(x); }

 private:
  FamilyPtr base_;
  State reference_;
};

enum class BoundSide { Lower, Upper };

/// Scalar IFS t -> F(t) or t -> G(t) driven by the model's environments.
class BoundingChain final : public MapFamily {
 public:
  BoundingChain(FamilyPtr model, SandwichBounds bounds, BoundSide side);
  std::string id() const override;
  std::size_t env_dim() const override { return model_->env_dim(); }
  void sample_env(StepRng& rng, std::span<double> theta) const override { model_->sample_env(rng, theta); }
  void apply(std::span<const double> theta, std::span<const double> x, std::span<double> out) const override;
  double lipschitz_bound(std::span<const double> theta) const override;
  void sample_point(StepRng& rng, std::span<double> x) const override;

 private:
  FamilyPtr model_;
  SandwichBounds bounds_;
  BoundSide side_;
};

/// inf/sup of d(x0, Psi(x)) over a log mesh on (r, mesh_max] and a linear mesh
/// on the ball {d <= r}, along +-coordinate directions. Sound only on the mesh.
SandwichBounds bounds_numeric_mesh(FamilyPtr family, double r, double mesh_max = 1e6, std::size_t nodes = 10'000);

struct DepthViolations {
  std::size_t depth = 0;
  std::size_t violations_lower = 0;
  std::size_t violations_upper = 0;
  double worst_slack_lower = 0.0;
  double worst_slack_upper = 0.0;
};

struct SandwichReport {
  std::size_t n_envs = 0;
  std::size_t n_points = 0;
  std::size_t violations_lower = 0;  // depth 1
  std::size_t violations_upper = 0;
  double worst_slack_lower = 0.0;  // min relative slack, all depths
  double worst_slack_upper = 0.0;
  std::vector<DepthViolations> by_depth;
  std::uint64_t seed = 0;
  double slack_tolerance = -1e-9;

  std::size_t total_violations() const;
  nlohmann::json to_json() const;
};

using PointSampler = std::function<void(StepRng&, std::span<double>)>;

/// Pathwise check of F(d(x0,x)) <= d(x0, Psi(x)) <= G(d(x0,x)) at depth 1 and
/// of the composed inequality at the given depths. Relative slack below
/// -1e-9 counts as a violation. point_sampler defaults to family.sample_point.
SandwichReport verify_sandwich(const MapFamily& family, const SandwichBounds& bounds, std::size_t n_envs,
                               std::size_t n_points, std::uint64_t seed, const PointSampler& point_sampler = {},
                               std::vector<std::size_t> depths = {2, 5});

/// Spot check that F and G are nondecreasing on a grid; continuity is
/// reported separately since the max-type F jumps at r when M_lo r > Q_lo.
struct MonotoneCheck {
  std::size_t envs = 0;
  std::size_t decreasing = 0;
  std::size_t discontinuous_lower = 0;
  std::size_t coefficient_order_violations = 0;  // 0 <= M_lo <= M_hi, Q_lo <= Q_hi
};
MonotoneCheck check_bound_shape(const MapFamily& family, const SandwichBounds& bounds, std::size_t n_envs,
                                std::uint64_t seed);

struct BracketEntry {
  double r = 0.0;
  std::optional<CramerSolution> alpha;  // from M_lo(r)
  std::optional<CramerSolution> beta;   // from M_hi(r)
  std::string alpha_error;
  std::string beta_error;
  // heuristic moment checks, Monte Carlo
  double p_q_lower_above_r = 0.0;
  bool q_lower_moment_stable = false;
  double mean_q_upper_pow_beta = 0.0;
  bool q_upper_moment_stable = false;
};

struct IndexBracket {
  std::vector<BracketEntry> entries;
  std::optional<double> alpha_limit;
  std::optional<double> beta_limit;
  std::optional<double> point_index;
  bool alpha_nonincreasing = true;
  bool beta_nondecreasing = true;
  bool beta_le_alpha = true;
  /// KS distance between sampled M_lo(r) and M_hi(r) at the largest r.
  double ui_ks_distance = 0.0;
  bool ui_diagnostic_equal = false;

  nlohmann::json to_json() const;
};

struct FactorProvider {
  /// Laws of M_lo(r), M_hi(r); nullopt means "use the empirical law of the
  /// coefficient sampler".
  std::function<std::optional<FactorLaw>(double r)> m_lower;
  std::function<std::optional<FactorLaw>(double r)> m_upper;
};

struct BracketOptions {
  SolveOptions solver;
  std::size_t moment_samples = 100'000;
  std::uint64_t seed = 0;
};

IndexBracket index_bracket(const MapFamily& family, const std::function<SandwichBounds(double)>& bounds_at,
                           const FactorProvider& factors, std::span<const double> r_grid,
                           const BracketOptions& opts = {});

/// F(t) = R_lo v (M t 1{t > r}) with G(t) = R_hi + M t (max_type), or
/// F(t) = R_lo + M t with signed R_lo (affine_signed).
struct CertificateForm {
  std::string form = "max_type";
  double r = 0.0;
  /// (M, R_lo, R_hi) for an environment.
  std::function<std::array<double, 3>(std::span<const double> theta)> coefficients;
  std::optional<FactorLaw> m_law;  // empirical from samples when absent
};

struct PremiseCheck {
  std::string name;
  bool passed = false;
  double value = 0.0;
  bool heuristic = false;
};

struct Certificate {
  bool issued = false;
  std::string form;
  std::optional<double> kappa;
  std::vector<PremiseCheck> checks;
  std::vector<std::string> failed_premises;

  nlohmann::json to_json() const;
};

Certificate exact_index_certificate(const MapFamily& family, const CertificateForm& form, std::size_t n_samples = 100'000,
                                    std::uint64_t seed = 0, const SolveOptions& solver = {});

/// Heuristic finiteness of E X^p from a sample of X^p: the largest term
/// carries < 5% of the sum and the half-sample mean is within 10%.
bool moment_looks_finite(std::span<const double> powered);

struct OrderingReport {
  std::size_t n_samples = 0;
  std::size_t depth = 0;
  std::vector<SurvivalPoint> lower_vs_model;
  std::vector<SurvivalPoint> model_vs_upper;
  std::size_t failures = 0;
  nlohmann::json to_json() const;
};

/// Survival curves of the F-chain, the model (distance to x0) and the G-chain,
/// all by backward iteration on a shared environment stream, compared on a
/// log grid between the model's 0.5 and 0.999 quantiles.
OrderingReport stochastic_ordering(FamilyPtr family, const SandwichBounds& bounds, std::size_t n_samples,
                                   std::uint64_t seed, std::size_t grid_points = 20, std::size_t depth = 0);

const char* to_string(LowerForm f) noexcept;

}  // namespace tailbound
