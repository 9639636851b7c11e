#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace fracanalog {

/// Pairwise (cascade) summation. The split points depend only on the length,
/// so the result is reproducible for a given input order.
inline double pairwise_sum(std::span<const double> v) {
  constexpr std::size_t kBlock = 64;
  if (v.size() <= kBlock) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline double mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean: empty input");
  return pairwise_sum(v) / static_cast<double>(v.size());
}

/// Population variance (divides by n), two-pass.
inline double variance(std::span<const double> v) {
  const double m = mean(v);
  std::vector<double> sq(v.size());
  std::transform(v.begin(), v.end(), sq.begin(), [m](double x) { return (x - m) * (x - m); });
  return pairwise_sum(sq) / static_cast<double>(v.size());
}

/// Result of a straight-line least-squares fit y = intercept + slope * x.
struct LinearFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double slope_stderr = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::quiet_NaN();  // residual sum of squares
  std::size_t n_points = 0;
};

/// Ordinary least squares on centered data. Needs at least two points with
/// distinct abscissae; the slope stderr is zero for exactly two points.
inline LinearFit ols_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("ols_fit: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("ols_fit: need at least two points");
  const std::size_t n = x.size();
  const double mx = mean(x);
  const double my = mean(y);
  std::vector<double> sxx(n), sxy(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    sxx[i] = dx * dx;
    sxy[i] = dx * (y[i] - my);
  }
  const double Sxx = pairwise_sum(sxx);
  if (!(Sxx > 0.0)) throw std::invalid_argument("ols_fit: abscissae are all equal");
  LinearFit fit;
  fit.n_points = n;
  fit.slope = pairwise_sum(sxy) / Sxx;
  fit.intercept = my - fit.slope * mx;
  std::vector<double> r2(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    r2[i] = r * r;
  }
  fit.residual = pairwise_sum(r2);
  fit.slope_stderr = n > 2 ? std::sqrt(fit.residual / static_cast<double>(n - 2) / Sxx) : 0.0;
  return fit;
}

/// Theil-Sen slope estimate on the deterministic pair set (i, i + n/2).
/// The intercept is the median of y - slope * x; the stderr is the
/// MAD-based normal-consistent spread of the pair slopes over sqrt(#pairs).
inline LinearFit theil_sen_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("theil_sen_fit: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("theil_sen_fit: need at least two points");
  const std::size_t n = x.size();
  const std::size_t half = n / 2;
  std::vector<double> slopes;
  slopes.reserve(half);
  for (std::size_t i = 0; i < half; ++i) {
    const double dx = x[i + half] - x[i];
    if (dx != 0.0) slopes.push_back((y[i + half] - y[i]) / dx);
  }
  if (slopes.empty()) throw std::invalid_argument("theil_sen_fit: abscissae are all equal");
  auto median = [](std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
      m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return m;
  };
  LinearFit fit;
  fit.n_points = n;
  fit.slope = median(slopes);
  std::vector<double> offsets(n);
  for (std::size_t i = 0; i < n; ++i) offsets[i] = y[i] - fit.slope * x[i];
  fit.intercept = median(offsets);
  std::vector<double> dev(slopes.size());
  for (std::size_t i = 0; i < slopes.size(); ++i) dev[i] = std::abs(slopes[i] - fit.slope);
  fit.slope_stderr = 1.4826 * median(dev) / std::sqrt(static_cast<double>(slopes.size()));
  std::vector<double> r2(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = offsets[i] - fit.intercept;
    r2[i] = r * r;
  }
  fit.residual = pairwise_sum(r2);
  return fit;
}

/// Integer grid log-uniform in [lo, hi]: round(10^(i / per_decade)) for every
/// value inside the interval, deduplicated, plus both rounded endpoints.
inline std::vector<std::size_t> log_uniform_grid(double lo, double hi, int per_decade) {
  if (!(lo >= 1.0) || !(hi >= lo) || per_decade <= 0) {
    throw std::invalid_argument("log_uniform_grid: need 1 <= lo <= hi and per_decade > 0");
  }
  std::vector<std::size_t> grid;
  const auto first = static_cast<long>(std::floor(std::log10(lo) * per_decade));
  const auto last = static_cast<long>(std::ceil(std::log10(hi) * per_decade));
  for (long i = first; i <= last; ++i) {
    const double v = std::round(std::pow(10.0, static_cast<double>(i) / per_decade));
    if (v >= std::round(lo) && v <= std::round(hi)) grid.push_back(static_cast<std::size_t>(v));
  }
  grid.push_back(static_cast<std::size_t>(std::round(lo)));
  grid.push_back(static_cast<std::size_t>(std::round(hi)));
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace fracanalog
