#include "pmls/stats.hpp"

#include <algorithm>
#include <cmath>

namespace pmls {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

double sample_skewness(const std::vector<double>& v) {
  if (v.size() < 3) return 0.0;
  const double m = mean_of(v);
  double m2 = 0.0, m3 = 0.0;
  for (double x : v) {
    const double d = x - m;
    m2 += d * d;
    m3 += d * d * d;
  }
  const double n = static_cast<double>(v.size());
  m2 /= n;
  m3 /= n;
  if (m2 <= 0.0) return 0.0;
  return m3 / std::pow(m2, 1.5);
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  q = std::clamp(q, 0.0, 1.0);
  const double h = q * static_cast<double>(v.size() - 1);
  const size_t lo = static_cast<size_t>(h);
  const size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

double median_of(std::vector<double> v) { return quantile(std::move(v), 0.5); }

FiveNumber five_number_summary(std::vector<double> v) {
  FiveNumber f;
  if (v.empty()) return f;
  std::sort(v.begin(), v.end());
  f.min = v.front();
  f.max = v.back();
  f.q1 = quantile(v, 0.25);
  f.median = quantile(v, 0.5);
  f.q3 = quantile(v, 0.75);
  const double iqr = f.q3 - f.q1;
  const double lo_fence = f.q1 - 1.5 * iqr;
  const double hi_fence = f.q3 + 1.5 * iqr;
  f.whisker_lo = f.max;
  f.whisker_hi = f.min;
  for (double x : v) {
    if (x < lo_fence || x > hi_fence) {
      f.outliers.push_back(x);
    } else {
      f.whisker_lo = std::min(f.whisker_lo, x);
      f.whisker_hi = std::max(f.whisker_hi, x);
    }
  }
  return f;
}

}  // namespace pmls
