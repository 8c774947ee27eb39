#pragma once

// Reference computations written independently of the library code paths.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "tailbound/rng.hpp"

namespace oracle {

/// Positive root of f on (lo, hi) by plain bisection in long double.
inline double bisect(const std::function<long double(long double)>& f, long double lo, long double hi,
                     int iters = 200) {
  long double flo = f(lo);
  for (int i = 0; i < iters; ++i) {
    const long double mid = 0.5L * (lo + hi);
    const long double fm = f(mid);
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return static_cast<double>(0.5L * (lo + hi));
}

/// kappa with p a^kappa + (1 - p) b^kappa = 1, for a < 1 < b.
inline double two_point_kappa(double a, double b, double p) {
  auto f = [=](long double k) { return p * std::pow((long double)a, k) + (1 - p) * std::pow((long double)b, k) - 1; };
  long double hi = 1;
  while (f(hi) < 0) hi *= 2;
  return bisect(f, 1e-9L, hi);
}

/// E ((alpha + eta)^2)^kappa for standard normal eta, composite Simpson on [-14, 14].
inline double sag_moment(double alpha, double kappa, int panels = 40000) {
  const long double lo = -14, hi = 14, h = (hi - lo) / panels;
  long double s = 0;
  for (int i = 0; i <= panels; ++i) {
    const long double x = lo + i * h;
    const long double w = (i == 0 || i == panels) ? 1 : (i % 2 ? 4 : 2);
    const long double y = (alpha + x) * (alpha + x);
    s += w * std::pow(y, (long double)kappa) * std::exp(-x * x / 2);
  }
  return static_cast<double>(s * h / 3 / std::sqrt(2 * 3.14159265358979323846L));
}

inline double sag_kappa(double alpha) {
  auto f = [=](long double k) { return (long double)sag_moment(alpha, (double)k) - 1; };
  return bisect(f, 0.05L, 8.0L, 60);
}

/// Pareto(theta) on [1, inf) by inverse CDF: X = U^{-1/theta}.
inline std::vector<double> pareto(double theta, std::size_t n, std::uint64_t seed) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    tailbound::StepRng rng(seed, 7, i);
    x[i] = std::pow(rng.uniform(), -1.0 / theta);
  }
  return x;
}

/// Kolmogorov tail 2 sum (-1)^{k-1} exp(-2 k^2 l^2).
inline double kolmogorov_tail(double l) {
  long double s = 0;
  for (int k = 1; k <= 200; ++k) s += (k % 2 ? 1 : -1) * std::exp(-2.0L * k * k * l * l);
  return static_cast<double>(2 * s);
}

}  // namespace oracle
