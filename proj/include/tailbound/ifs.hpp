#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "tailbound/laws.hpp"
#include "tailbound/rng.hpp"
#include "tailbound/sample_set.hpp"

namespace tailbound {

using State = std::vector<double>;

/// A family of random Lipschitz maps x -> Psi(theta, x) on R^d.
///
/// Environments theta are flat arrays of env_dim() doubles drawn from a
/// StepRng. apply() must tolerate out aliasing x.
class MapFamily {
 public:
  virtual ~MapFamily() = default;

  virtual std::string id() const = 0;
  virtual std::size_t state_dim() const { return 1; }
  virtual std::size_t env_dim() const = 0;
  virtual void sample_env(StepRng& rng, std::span<double> theta) const = 0;
  virtual void apply(std::span<const double> theta, std::span<const double> x,
                     std::span<double> out) const = 0;
  /// L(Psi(theta, .)) or a certified upper bound; +inf when none is known.
  virtual double lipschitz_bound(std::span<const double> theta) const = 0;

  /// Euclidean unless overridden.
  virtual double metric(std::span<const double> x, std::span<const double> y) const;
  /// Origin unless overridden.
  virtual State reference_point() const;
  /// Start used when the caller gives none. Must lie in the state space.
  virtual State default_start() const { return reference_point(); }
  /// Random state for property checks; spreads over many scales.
  virtual void sample_point(StepRng& rng, std::span<double> x) const;
  virtual bool in_state_space(std::span<const double> /*x*/) const { return true; }
  virtual nlohmann::json describe() const { return {{"model_id", id()}}; }

  double distance_from_reference(std::span<const double> x) const;
};

using FamilyPtr = std::shared_ptr<const MapFamily>;

/// Draws theta_{step + 1} of stream `stream` (0-based counter step).
void draw_env(const MapFamily& family, std::uint64_t seed, std::uint64_t stream, std::uint64_t step,
              std::span<double> theta);

/// Psi(theta, x) = x.
class IdentityFamily final : public MapFamily {
 public:
  explicit IdentityFamily(std::size_t dim = 1) : dim_(dim) {}
  std::string id() const override { return "identity"; }
  std::size_t state_dim() const override { return dim_; }
  std::size_t env_dim() const override { return 0; }
  void sample_env(StepRng&, std::span<double>) const override {}
  void apply(std::span<const double>, std::span<const double> x, std::span<double> out) const override;
  double lipschitz_bound(std::span<const double>) const override { return 1.0; }

 private:
  std::size_t dim_;
};

/// Psi(x) = M x + Q. theta = (M, Q).
///
/// The state space is [0, inf) when M, Q >= 0 a.s. (it is invariant then),
/// R otherwise.
class AffineFamily final : public MapFamily {
 public:
  using JointSampler = std::function<std::pair<double, double>(StepRng&)>;

  AffineFamily(ScalarLaw m_law, ScalarLaw q_law);
  /// Dependent (M, Q); the marginal laws are kept for reporting only.
  AffineFamily(ScalarLaw m_law, ScalarLaw q_law, JointSampler joint);

  std::string id() const override { return "perpetuity"; }
  std::size_t env_dim() const override { return 2; }
  void sample_env(StepRng& rng, std::span<double> theta) const override;
  void apply(std::span<const double> theta, std::span<const double> x, std::span<double> out) const override;
  double lipschitz_bound(std::span<const double> theta) const override;
  void sample_point(StepRng& rng, std::span<double> x) const override;
  bool in_state_space(std::span<const double> x) const override { return !half_line_ || x[0] >= 0.0; }
  nlohmann::json describe() const override;

  bool half_line() const noexcept { return half_line_; }
  const ScalarLaw& m_law() const noexcept { return m_law_; }
  const ScalarLaw& q_law() const noexcept { return q_law_; }

 private:
  ScalarLaw m_law_;
  ScalarLaw q_law_;
  JointSampler joint_;
  bool half_line_;
};

enum class Direction { Forward, Backward };

/// States X_0..X_n (forward) or the partial compositions
/// Psi_{k+1..n}(start) for k = n, n-1, ..., 0 (backward; the last entry is
/// Psi_1 o ... o Psi_n(start)).
struct Trajectory {
  std::size_t dim = 1;
  std::vector<double> flat;
  Direction direction = Direction::Forward;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::size_t env_count = 0;

  std::size_t length() const noexcept { return dim == 0 ? 0 : flat.size() / dim; }
  std::span<const double> state(std::size_t k) const { return {flat.data() + k * dim, dim}; }
  std::span<const double> final_state() const { return state(length() - 1); }
};

Trajectory iterate_forward(const MapFamily& family, std::span<const double> start, std::size_t n,
                           std::uint64_t seed, std::uint64_t stream = 0);
Trajectory iterate_backward(const MapFamily& family, std::span<const double> start, std::size_t n,
                            std::uint64_t seed, std::uint64_t stream = 0);

/// Final states only; `replicate` tags divergence errors.
void forward_final(const MapFamily& family, std::span<const double> start, std::size_t n,
                   std::uint64_t seed, std::uint64_t stream, std::span<double> out);
void backward_final(const MapFamily& family, std::span<const double> start, std::size_t n,
                    std::uint64_t seed, std::uint64_t stream, std::span<double> out);

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

struct ContractionReport {
  Estimate mean_log_lipschitz;
  Estimate top_lyapunov;
  Estimate jump_size_moment;
  std::size_t n_depth = 0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  bool mean_contractive = false;
  bool contractive = false;

  nlohmann::json to_json() const;
};

/// Monte Carlo contraction diagnostics.
///
/// top_lyapunov follows a pair of nearby trajectories and renormalises their
/// separation every step. Per-step ratios below 1e-16 (coalescence) are
/// clamped there.
ContractionReport diagnose_contraction(const MapFamily& family, std::size_t depth, std::size_t reps,
                                       std::uint64_t seed);

struct LongRun {
  std::size_t burn_in = 1000;
  std::size_t thin = 1;
};
struct Backward {
  std::size_t depth = 0;  // 0: chosen from a contraction diagnostic
};
using StationaryMode = std::variant<LongRun, Backward>;

struct SampleOptions {
  ValueKind kind = ValueKind::Distance;
  std::optional<State> start;
  std::string model_id;  // defaults to family.id()
};

SampleSet sample_stationary(const MapFamily& family, const StationaryMode& mode, std::size_t n_samples,
                            std::uint64_t seed, const SampleOptions& options = {});

/// Depth with depth * lyapunov < log(1e-12), doubled, clamped to [50, 100000].
std::size_t backward_depth_for(double top_lyapunov);

struct LipschitzCheck {
  std::size_t triples = 0;
  std::size_t violations = 0;
  double worst_relative_slack = 0.0;  // min over triples of (L d(x,y) - d(Psi x, Psi y)) / scale
};

/// Tests d(Psi x, Psi y) <= L(theta) d(x, y) on random triples, slack -1e-9.
LipschitzCheck check_lipschitz(const MapFamily& family, std::size_t triples, std::uint64_t seed);

/// Throws DivergenceError if x is non-finite or beyond the 1e300 guard.
void guard_state(std::span<const double> x, std::size_t step, std::size_t replicate);

}  // namespace tailbound
