#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tailbound/sample_set.hpp"

namespace tailbound {

struct TailEstimate {
  std::string method;  // hill | loglog_regression
  double index = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t k = 0;  // hill: number of upper order statistics; loglog: points in window
  double q_lo = 0.0;
  double q_hi = 0.0;
  std::size_t n = 0;

  nlohmann::json to_json() const;
};

/// round(n^0.6).
std::size_t default_hill_k(std::size_t n);

/// Hill estimator on the top k order statistics. k = 0 selects default_hill_k.
TailEstimate hill(const SampleSet& samples, std::size_t k = 0);
/// Same on an ascending sorted array.
TailEstimate hill_sorted(std::span<const double> sorted, std::size_t k = 0);

/// OLS slope of log empirical survival against log x over the order
/// statistics between the q_lo and q_hi quantiles.
TailEstimate loglog_tail(const SampleSet& samples, double q_lo = 0.98, double q_hi = 0.9998);

enum class Verdict { ConsistentWithExact, Inconclusive, Inconsistent };
const char* to_string(Verdict v) noexcept;

struct ExactnessOptions {
  std::size_t grid_points = 20;
  double decade = 10.0;  // grid spans [t_hi / decade, t_hi]
  std::size_t min_top = 20;
  double top_fraction = 1e-4;  // t_hi leaves max(min_top, ceil(n * top_fraction)) exceedances
  double slope_tolerance = 0.1;
};

struct ExactnessReport {
  double kappa_used = 0.0;
  std::vector<double> t_grid;
  std::vector<double> scaled_survival;
  double slope = 0.0;
  double slope_se = 0.0;
  Verdict verdict = Verdict::Inconclusive;
  double slope_tolerance = 0.1;
  std::size_t exceedances_at_top = 0;

  nlohmann::json to_json() const;
};

/// Slope of log(t^kappa * survival(t)) over the top decade of the data.
/// consistent iff |slope| <= tol + 2 SE, inconsistent iff |slope| > tol + 4 SE.
ExactnessReport exactness(const SampleSet& samples, double kappa, const ExactnessOptions& opts = {});

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;

  nlohmann::json to_json() const;
};

/// Asymptotic Kolmogorov tail P(K > lambda).
double kolmogorov_sf(double lambda);
KsResult ks_two_sample(std::span<const double> sorted_a, std::span<const double> sorted_b);
KsResult ks_two_sample(const SampleSet& a, const SampleSet& b);

struct SurvivalPoint {
  double t = 0.0;
  double lower = 0.0;  // survival of the sample expected to be smaller
  double upper = 0.0;
  double pooled_se = 0.0;
  bool ordered = true;  // lower <= upper + sigmas * pooled_se
};

/// Checks P(A > t) <= P(B > t) up to `sigmas` pooled binomial standard errors.
std::vector<SurvivalPoint> compare_survival(const SampleSet& a, const SampleSet& b, std::span<const double> t_grid,
                                            double sigmas = 3.0);

/// Log-spaced grid of `points` thresholds between the q_lo and q_hi quantiles
/// of `s`.
std::vector<double> quantile_log_grid(const SampleSet& s, double q_lo, double q_hi, std::size_t points);

/// Writes (log t, log survival) and, when kappa is given, (log t, log t^kappa survival).
void write_plot_data(const SampleSet& samples, const std::string& survival_path,
                     const std::optional<std::string>& scaled_path = std::nullopt,
                     std::optional<double> kappa = std::nullopt);

}  // namespace tailbound
