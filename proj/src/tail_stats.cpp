#include "tailbound/tail_stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace tailbound {

namespace {

struct Fit {
  double slope;
  double se;
};

Fit ols(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 3) throw std::invalid_argument("regression needs at least 3 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("regression abscissae are all equal");
  const double slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - my - slope * (x[i] - mx);
    rss += r * r;
  }
  return {slope, std::sqrt(rss / static_cast<double>(n - 2) / sxx)};
}

// Empirical P(X > t) on an ascending array.
double survival_sorted(std::span<const double> sorted, double t) {
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
  return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
}

}  // namespace

nlohmann::json TailEstimate::to_json() const {
  nlohmann::json j{{"method", method}, {"index", index}, {"se", se}, {"ci", {ci_low, ci_high}}, {"n", n}};
  if (method == "hill") {
    j["k"] = k;
  } else {
    j["window"] = {q_lo, q_hi};
    j["points"] = k;
  }
  return j;
}

std::size_t default_hill_k(std::size_t n) {
  return static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(n), 0.6)));
}

TailEstimate hill_sorted(std::span<const double> sorted, std::size_t k) {
  const std::size_t n = sorted.size();
  if (k == 0) k = default_hill_k(n);
  if (k < 2 || k >= n) throw std::invalid_argument("hill needs 2 <= k < n");
  if (sorted.front() < 0.0) throw std::invalid_argument("hill needs nonnegative samples");
  const double threshold = sorted[n - k - 1];
  if (!(threshold > 0.0))
    throw std::invalid_argument("hill: k exceeds the number of positive samples");
  double s = 0.0;
  for (std::size_t i = n - k; i < n; ++i) s += std::log(sorted[i] / threshold);
  if (!(s > 0.0)) throw std::invalid_argument("hill: zero log spacings (tied upper order statistics)");
  TailEstimate e;
  e.method = "hill";
  e.index = static_cast<double>(k) / s;
  e.se = e.index / std::sqrt(static_cast<double>(k));
  e.ci_low = e.index * (1.0 - 1.96 / std::sqrt(static_cast<double>(k)));
  e.ci_high = e.index * (1.0 + 1.96 / std::sqrt(static_cast<double>(k)));
  e.k = k;
  e.n = n;
  return e;
}

TailEstimate hill(const SampleSet& samples, std::size_t k) { return hill_sorted(samples.sorted(), k); }

TailEstimate loglog_tail(const SampleSet& samples, double q_lo, double q_hi) {
  if (!(q_lo >= 0.5 && q_lo < q_hi && q_hi < 1.0))
    throw std::invalid_argument("loglog_tail needs 0.5 <= q_lo < q_hi < 1");
  const auto& s = samples.sorted();
  const std::size_t n = s.size();
  if (n == 0) throw std::invalid_argument("loglog_tail on empty sample");
  const auto i0 = static_cast<std::size_t>(std::floor(q_lo * static_cast<double>(n)));
  const auto i1 = std::min(n - 1, static_cast<std::size_t>(std::floor(q_hi * static_cast<double>(n))));
  std::vector<double> lx, ly;
  for (std::size_t i = i0; i <= i1 && i < n; ++i) {
    if (i + 1 < n && s[i + 1] == s[i]) continue;  // last of a tie block
    const double surv = static_cast<double>(n - 1 - i) / static_cast<double>(n);
    if (!(s[i] > 0.0) || !(surv > 0.0)) continue;
    lx.push_back(std::log(s[i]));
    ly.push_back(std::log(surv));
  }
  if (lx.size() < 20) throw std::invalid_argument("loglog_tail: fewer than 20 points in window");
  const Fit f = ols(lx, ly);
  TailEstimate e;
  e.method = "loglog_regression";
  e.index = -f.slope;
  e.se = f.se;
  e.ci_low = e.index - 1.96 * f.se;
  e.ci_high = e.index + 1.96 * f.se;
  e.k = lx.size();
  e.q_lo = q_lo;
  e.q_hi = q_hi;
  e.n = n;
  return e;
}

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::ConsistentWithExact:
      return "consistent_with_exact";
    case Verdict::Inconsistent:
      return "inconsistent";
    default:
      return "inconclusive";
  }
}

nlohmann::json ExactnessReport::to_json() const {
  return {{"kappa_used", kappa_used},
          {"t_grid", t_grid},
          {"scaled_survival", scaled_survival},
          {"loglog_slope", slope},
          {"slope_se", slope_se},
          {"verdict", to_string(verdict)},
          {"thresholds", {{"consistent", "|slope| <= tol + 2 se"}, {"inconsistent", "|slope| > tol + 4 se"}, {"tol", slope_tolerance}}},
          {"exceedances_at_top", exceedances_at_top}};
}

ExactnessReport exactness(const SampleSet& samples, double kappa, const ExactnessOptions& opts) {
  if (!(kappa > 0.0)) throw std::invalid_argument("exactness needs kappa > 0");
  if (opts.grid_points < 3 || !(opts.decade > 1.0)) throw std::invalid_argument("exactness grid is too small");
  const auto& s = samples.sorted();
  const std::size_t n = s.size();
  const std::size_t top = std::max(opts.min_top, static_cast<std::size_t>(std::ceil(static_cast<double>(n) * opts.top_fraction)));
  if (n <= top) throw std::invalid_argument("exactness: empty tail decade");
  const double t_hi = s[n - top - 1];
  if (!(t_hi > 0.0)) throw std::invalid_argument("exactness: empty tail decade");
  const double t_lo = t_hi / opts.decade;

  ExactnessReport r;
  r.kappa_used = kappa;
  r.slope_tolerance = opts.slope_tolerance;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < opts.grid_points; ++i) {
    const double t = t_lo * std::pow(opts.decade, static_cast<double>(i) / static_cast<double>(opts.grid_points - 1));
    const double surv = survival_sorted(s, t);
    if (!(surv > 0.0)) throw std::invalid_argument("exactness: empty tail decade");
    r.t_grid.push_back(t);
    r.scaled_survival.push_back(std::pow(t, kappa) * surv);
    lx.push_back(std::log(t));
    ly.push_back(std::log(r.scaled_survival.back()));
  }
  r.exceedances_at_top = static_cast<std::size_t>(std::llround(survival_sorted(s, t_hi) * static_cast<double>(n)));
  const Fit f = ols(lx, ly);
  r.slope = f.slope;
  r.slope_se = f.se;
  const double a = std::fabs(f.slope);
  if (a <= opts.slope_tolerance + 2.0 * f.se)
    r.verdict = Verdict::ConsistentWithExact;
  else if (a > opts.slope_tolerance + 4.0 * f.se)
    r.verdict = Verdict::Inconsistent;
  else
    r.verdict = Verdict::Inconclusive;
  return r;
}

nlohmann::json KsResult::to_json() const {
  return {{"statistic", statistic}, {"p_value", p_value}, {"n_a", n_a}, {"n_b", n_b}};
}

double kolmogorov_sf(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  if (lambda < 1.18) {
    // theta-function form, converges fast for small lambda
    const double c = std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
    double s = 0.0;
    for (int j = 1; j <= 20; ++j) s += std::exp(-static_cast<double>((2 * j - 1) * (2 * j - 1)) * c);
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    s += (j % 2 == 1 ? term : -term);
    if (term < 1e-300) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample needs nonempty samples");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  KsResult r;
  r.statistic = d;
  r.n_a = a.size();
  r.n_b = b.size();
  const double ne = na * nb / (na + nb);
  const double sq = std::sqrt(ne);
  r.p_value = d == 0.0 ? 1.0 : kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d);
  return r;
}

KsResult ks_two_sample(const SampleSet& a, const SampleSet& b) { return ks_two_sample(a.sorted(), b.sorted()); }

std::vector<SurvivalPoint> compare_survival(const SampleSet& a, const SampleSet& b, std::span<const double> t_grid,
                                            double sigmas) {
  std::vector<SurvivalPoint> out;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  for (double t : t_grid) {
    SurvivalPoint p;
    p.t = t;
    p.lower = a.survival(t);
    p.upper = b.survival(t);
    p.pooled_se = std::sqrt(p.lower * (1.0 - p.lower) / na + p.upper * (1.0 - p.upper) / nb);
    p.ordered = p.lower <= p.upper + sigmas * p.pooled_se;
    out.push_back(p);
  }
  return out;
}

std::vector<double> quantile_log_grid(const SampleSet& s, double q_lo, double q_hi, std::size_t points) {
  if (points < 2) throw std::invalid_argument("grid needs at least 2 points");
  const double lo = s.quantile(q_lo), hi = s.quantile(q_hi);
  if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("quantile grid needs 0 < q_lo quantile < q_hi quantile");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(points - 1));
  return g;
}

void write_plot_data(const SampleSet& samples, const std::string& survival_path,
                     const std::optional<std::string>& scaled_path, std::optional<double> kappa) {
  const auto& s = samples.sorted();
  const std::size_t n = s.size();
  std::ofstream surv(survival_path);
  if (!surv) throw std::runtime_error("cannot open '" + survival_path + "'");
  std::ofstream scaled;
  if (scaled_path && kappa) {
    scaled.open(*scaled_path);
    if (!scaled) throw std::runtime_error("cannot open '" + *scaled_path + "'");
  }
  // upper half of the data, thinned to at most ~2000 rows, geometric in rank
  char line[96];
  std::size_t last = n;
  for (double m = 1.0; m <= static_cast<double>(n) / 2.0; m *= 1.005) {
    const std::size_t exceed = static_cast<std::size_t>(m);
    const std::size_t i = n - 1 - exceed;
    if (i == last) continue;
    last = i;
    if (!(s[i] > 0.0)) continue;
    const double surv_v = survival_sorted(s, s[i]);
    if (!(surv_v > 0.0)) continue;
    std::snprintf(line, sizeof line, "%.10g %.10g\n", std::log(s[i]), std::log(surv_v));
    surv << line;
    if (scaled.is_open()) {
      std::snprintf(line, sizeof line, "%.10g %.10g\n", std::log(s[i]), *kappa * std::log(s[i]) + std::log(surv_v));
      scaled << line;
    }
  }
}

}  // namespace tailbound
