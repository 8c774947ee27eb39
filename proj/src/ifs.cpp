#include "tailbound/ifs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tailbound/errors.hpp"
#include "tailbound/parallel.hpp"

namespace tailbound {

namespace {

constexpr double kGuard = 1e300;

void check_step(const MapFamily& family, std::span<const double> x, std::size_t step, std::size_t rep) {
  guard_state(x, step, rep);
  if (!family.in_state_space(x))
    throw DivergenceError(step, rep,
                          "state left the state space of '" + family.id() + "' at step " + std::to_string(step) +
                              " (replicate " + std::to_string(rep) + ")");
}

void require_dim(const MapFamily& family, std::span<const double> start) {
  if (start.size() != family.state_dim())
    throw std::invalid_argument("start has dimension " + std::to_string(start.size()) + ", family '" +
                                family.id() + "' expects " + std::to_string(family.state_dim()));
}

struct MeanAcc {
  double sum = 0.0, sum2 = 0.0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    sum2 += v * v;
    ++n;
  }
  Estimate estimate() const {
    if (n == 0) return {};
    const double m = sum / static_cast<double>(n);
    const double var = n > 1 ? std::max(0.0, (sum2 - sum * m) / static_cast<double>(n - 1)) : 0.0;
    return {m, std::sqrt(var / static_cast<double>(n))};
  }
};

}  // namespace

void guard_state(std::span<const double> x, std::size_t step, std::size_t replicate) {
  for (double v : x) {
    if (!std::isfinite(v) || std::fabs(v) > kGuard)
      throw DivergenceError(step, replicate,
                            "divergent state at step " + std::to_string(step) + " (replicate " +
                                std::to_string(replicate) + ")");
  }
}

double MapFamily::metric(std::span<const double> x, std::span<const double> y) const {
  if (x.size() == 1) return std::fabs(x[0] - y[0]);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s);
}

State MapFamily::reference_point() const { return State(state_dim(), 0.0); }

void MapFamily::sample_point(StepRng& rng, std::span<double> x) const {
  const State ref = reference_point();
  // log-uniform radius over [1e-3, 1e6], Gaussian direction
  const double radius = std::pow(10.0, -3.0 + 9.0 * rng.uniform());
  double norm = 0.0;
  for (auto& v : x) {
    v = rng.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = ref[i] + radius * x[i] / norm;
}

double MapFamily::distance_from_reference(std::span<const double> x) const {
  const State ref = reference_point();
  return metric(ref, x);
}

void draw_env(const MapFamily& family, std::uint64_t seed, std::uint64_t stream, std::uint64_t step,
              std::span<double> theta) {
  StepRng rng(seed, stream, step);
  family.sample_env(rng, theta);
}

void IdentityFamily::apply(std::span<const double>, std::span<const double> x, std::span<double> out) const {
  std::copy(x.begin(), x.end(), out.begin());
}

AffineFamily::AffineFamily(ScalarLaw m_law, ScalarLaw q_law)
    : m_law_(m_law), q_law_(q_law), half_line_(m_law_.nonnegative() && q_law_.nonnegative()) {}

AffineFamily::AffineFamily(ScalarLaw m_law, ScalarLaw q_law, JointSampler joint)
    : m_law_(m_law), q_law_(q_law), joint_(std::move(joint)),
      half_line_(m_law_.nonnegative() && q_law_.nonnegative()) {}

void AffineFamily::sample_point(StepRng& rng, std::span<double> x) const {
  MapFamily::sample_point(rng, x);
  if (half_line_) x[0] = std::fabs(x[0]);
}

void AffineFamily::sample_env(StepRng& rng, std::span<double> theta) const {
  if (joint_) {
    const auto [m, q] = joint_(rng);
    theta[0] = m;
    theta[1] = q;
    return;
  }
  theta[0] = m_law_.sample(rng);
  theta[1] = q_law_.sample(rng);
}

void AffineFamily::apply(std::span<const double> theta, std::span<const double> x, std::span<double> out) const {
  out[0] = theta[0] * x[0] + theta[1];
}

double AffineFamily::lipschitz_bound(std::span<const double> theta) const { return std::fabs(theta[0]); }

nlohmann::json AffineFamily::describe() const {
  return {{"model_id", id()},
          {"m", m_law_.to_json()},
          {"q", q_law_.to_json()},
          {"coupling", joint_ ? "joint" : "independent"},
          {"state_space", half_line_ ? "[0, inf)" : "R"}};
}

void forward_final(const MapFamily& family, std::span<const double> start, std::size_t n, std::uint64_t seed,
                   std::uint64_t stream, std::span<double> out) {
  require_dim(family, start);
  std::vector<double> theta(family.env_dim());
  std::copy(start.begin(), start.end(), out.begin());
  for (std::size_t k = 0; k < n; ++k) {
    draw_env(family, seed, stream, k, theta);
    family.apply(theta, out, out);
    check_step(family, out, k + 1, stream);
  }
}

void backward_final(const MapFamily& family, std::span<const double> start, std::size_t n, std::uint64_t seed,
                    std::uint64_t stream, std::span<double> out) {
  require_dim(family, start);
  std::vector<double> theta(family.env_dim());
  std::copy(start.begin(), start.end(), out.begin());
  for (std::size_t k = n; k-- > 0;) {
    draw_env(family, seed, stream, k, theta);
    family.apply(theta, out, out);
    check_step(family, out, k + 1, stream);
  }
}

Trajectory iterate_forward(const MapFamily& family, std::span<const double> start, std::size_t n,
                           std::uint64_t seed, std::uint64_t stream) {
  require_dim(family, start);
  const std::size_t d = family.state_dim();
  Trajectory t{d, std::vector<double>((n + 1) * d), Direction::Forward, seed, stream, n};
  std::copy(start.begin(), start.end(), t.flat.begin());
  std::vector<double> theta(family.env_dim());
  for (std::size_t k = 0; k < n; ++k) {
    draw_env(family, seed, stream, k, theta);
    std::span<const double> prev(t.flat.data() + k * d, d);
    std::span<double> next(t.flat.data() + (k + 1) * d, d);
    family.apply(theta, prev, next);
    check_step(family, next, k + 1, stream);
  }
  return t;
}

Trajectory iterate_backward(const MapFamily& family, std::span<const double> start, std::size_t n,
                            std::uint64_t seed, std::uint64_t stream) {
  require_dim(family, start);
  const std::size_t d = family.state_dim();
  Trajectory t{d, std::vector<double>((n + 1) * d), Direction::Backward, seed, stream, n};
  std::copy(start.begin(), start.end(), t.flat.begin());
  std::vector<double> theta(family.env_dim());
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t k = n - 1 - j;  // theta_{k+1}
    draw_env(family, seed, stream, k, theta);
    std::span<const double> prev(t.flat.data() + j * d, d);
    std::span<double> next(t.flat.data() + (j + 1) * d, d);
    family.apply(theta, prev, next);
    check_step(family, next, k + 1, stream);
  }
  return t;
}

nlohmann::json ContractionReport::to_json() const {
  auto est = [](const Estimate& e) { return nlohmann::json{{"value", e.value}, {"se", e.se}}; };
  return {{"mean_log_lipschitz", est(mean_log_lipschitz)},
          {"top_lyapunov", est(top_lyapunov)},
          {"jump_size_moment", est(jump_size_moment)},
          {"n_depth", n_depth},
          {"reps", reps},
          {"seed", seed},
          {"mean_contractive", mean_contractive},
          {"contractive", contractive}};
}

ContractionReport diagnose_contraction(const MapFamily& family, std::size_t depth, std::size_t reps,
                                       std::uint64_t seed) {
  if (reps < 2) throw std::invalid_argument("diagnose_contraction needs reps >= 2");
  if (depth < 1) throw std::invalid_argument("diagnose_contraction needs depth >= 1");
  const std::size_t d = family.state_dim();
  const State ref = family.reference_point();
  const State start = family.default_start();
  constexpr double kMinRatio = 1e-16;
  constexpr double kTiny = std::numeric_limits<double>::min();

  std::vector<double> rep_log_l(reps), rep_lyap(reps), rep_jump(reps);
  parallel_for(reps, [&](std::size_t begin, std::size_t end) {
    std::vector<double> theta(family.env_dim()), x(d), y(d), x_next(d), y_next(d), psi_ref(d);
    for (std::size_t rep = begin; rep < end; ++rep) {
      std::copy(start.begin(), start.end(), x.begin());
      double h = 1e-6 * std::max(1.0, family.metric(ref, x));
      y = x;
      y[0] += h;
      double sum_log_l = 0.0, sum_ratio = 0.0, sum_jump = 0.0;
      for (std::size_t k = 0; k < depth; ++k) {
        draw_env(family, seed, rep, k, theta);
        const double lip = family.lipschitz_bound(theta);
        if (!std::isfinite(lip))
          throw std::domain_error("lipschitz_bound is not finite for family '" + family.id() + "'");
        sum_log_l += std::log(std::max(lip, kTiny));

        family.apply(theta, ref, psi_ref);
        sum_jump += std::max(0.0, std::log(std::max(family.metric(ref, psi_ref), kTiny)));

        const double sep0 = family.metric(x, y);
        family.apply(theta, x, x_next);
        family.apply(theta, y, y_next);
        check_step(family, x_next, k + 1, rep);
        const double sep1 = family.metric(x_next, y_next);
        sum_ratio += std::log(std::max(sep1 / sep0, kMinRatio));

        x = x_next;
        h = 1e-6 * std::max(1.0, family.metric(ref, x));
        if (sep1 > 0.0 && std::isfinite(sep1)) {
          for (std::size_t i = 0; i < d; ++i) y[i] = x[i] + h * (y_next[i] - x_next[i]) / sep1;
        } else {
          y = x;
          y[0] += h;
        }
        if (!family.in_state_space(y)) {
          y = x;
          y[0] += h;
        }
      }
      const double n = static_cast<double>(depth);
      rep_log_l[rep] = sum_log_l / n;
      rep_lyap[rep] = sum_ratio / n;
      rep_jump[rep] = sum_jump / n;
    }
  });

  MeanAcc a, b, c;
  for (std::size_t i = 0; i < reps; ++i) {
    a.add(rep_log_l[i]);
    b.add(rep_lyap[i]);
    c.add(rep_jump[i]);
  }
  ContractionReport r;
  r.mean_log_lipschitz = a.estimate();
  r.top_lyapunov = b.estimate();
  r.jump_size_moment = c.estimate();
  r.n_depth = depth;
  r.reps = reps;
  r.seed = seed;
  r.mean_contractive = r.mean_log_lipschitz.value + 2.0 * r.mean_log_lipschitz.se < 0.0;
  r.contractive = r.top_lyapunov.value + 2.0 * r.top_lyapunov.se < 0.0;
  return r;
}

std::size_t backward_depth_for(double top_lyapunov) {
  if (!(top_lyapunov < 0.0)) return 1000;
  const double raw = 2.0 * std::ceil(std::log(1e-12) / top_lyapunov);
  return static_cast<std::size_t>(std::clamp(raw, 50.0, 100000.0));
}

SampleSet sample_stationary(const MapFamily& family, const StationaryMode& mode, std::size_t n_samples,
                            std::uint64_t seed, const SampleOptions& options) {
  if (options.kind == ValueKind::Raw && family.state_dim() != 1)
    throw std::invalid_argument("raw values are only available for scalar families");
  const std::size_t d = family.state_dim();
  const State start = options.start ? *options.start : family.default_start();
  require_dim(family, start);

  SampleMeta meta;
  meta.model_id = options.model_id.empty() ? family.id() : options.model_id;
  meta.seed = seed;
  meta.kind = options.kind;
  meta.start = start;
  meta.extra["family"] = family.describe();

  const State ref = family.reference_point();
  auto value_of = [&](std::span<const double> x) {
    return options.kind == ValueKind::Raw ? x[0] : family.metric(ref, x);
  };

  std::vector<double> values(n_samples);
  if (const auto* lr = std::get_if<LongRun>(&mode)) {
    if (lr->thin == 0) throw std::invalid_argument("long_run thin must be >= 1");
    meta.mode = "long_run";
    meta.depth = lr->burn_in;
    meta.thin = lr->thin;
    std::vector<double> theta(family.env_dim()), x(start);
    std::size_t step = 0;
    auto advance = [&] {
      draw_env(family, seed, 0, step, theta);
      family.apply(theta, x, x);
      ++step;
      check_step(family, x, step, 0);
    };
    for (std::size_t k = 0; k < lr->burn_in; ++k) advance();
    for (std::size_t i = 0; i < n_samples; ++i) {
      for (std::size_t k = 0; k < lr->thin; ++k) advance();
      values[i] = value_of(x);
    }
    return SampleSet(std::move(values), std::move(meta));
  }

  const auto& bw = std::get<Backward>(mode);
  std::size_t depth = bw.depth;
  meta.mode = "backward";
  if (depth == 0) {
    try {
      const auto diag = diagnose_contraction(family, 200, 256, derive_stream(seed, 0xD1A6));
      meta.extra["contraction"] = diag.to_json();
      if (!diag.contractive)
        meta.warnings.push_back("contraction diagnostic does not indicate contraction; depth fallback used");
      depth = backward_depth_for(diag.contractive ? diag.top_lyapunov.value + 2.0 * diag.top_lyapunov.se : 0.0);
    } catch (const std::domain_error&) {
      meta.warnings.push_back("no finite Lipschitz bound; backward depth set to 500");
      depth = 500;
    }
  }
  meta.depth = depth;

  parallel_for(n_samples, [&](std::size_t begin, std::size_t end) {
    std::vector<double> x(d);
    for (std::size_t i = begin; i < end; ++i) {
      backward_final(family, start, depth, seed, i, x);
      values[i] = value_of(x);
    }
  });
  return SampleSet(std::move(values), std::move(meta));
}

LipschitzCheck check_lipschitz(const MapFamily& family, std::size_t triples, std::uint64_t seed) {
  const std::size_t d = family.state_dim();
  LipschitzCheck out;
  out.triples = triples;
  out.worst_relative_slack = std::numeric_limits<double>::infinity();
  std::vector<double> theta(family.env_dim()), x(d), y(d), px(d), py(d);
  for (std::size_t i = 0; i < triples; ++i) {
    StepRng rng(seed, derive_stream(0x11B5, i), 0);
    family.sample_env(rng, theta);
    family.sample_point(rng, x);
    // half the pairs are close together, half independent
    if (rng.uniform() < 0.5) {
      family.sample_point(rng, y);
    } else {
      const double h = std::pow(10.0, -4.0 + 3.0 * rng.uniform()) * std::max(1.0, family.distance_from_reference(x));
      double norm = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        y[j] = rng.normal();
        norm += y[j] * y[j];
      }
      norm = std::sqrt(norm);
      for (std::size_t j = 0; j < d; ++j) y[j] = x[j] + h * y[j] / norm;
      if (!family.in_state_space(y)) {
        y = x;
        y[0] += h;
      }
    }
    family.apply(theta, x, px);
    family.apply(theta, y, py);
    const double lhs = family.metric(px, py);
    const double rhs = family.lipschitz_bound(theta) * family.metric(x, y);
    const double scale = std::max({lhs, rhs, std::numeric_limits<double>::min()});
    const double slack = (rhs - lhs) / scale;
    out.worst_relative_slack = std::min(out.worst_relative_slack, slack);
    if (slack < -1e-9) ++out.violations;
  }
  return out;
}

}  // namespace tailbound
