#pragma once

// Regularized fractional Brownian motion (c2 = 0) and regularized
// multifractal random walk (c2 > 0):
//
//   x(t) = sum_s K(t - s) M(s) W(s) sqrt(dt)
//   K(t) = psi_T(t) * t / ||t||^(3/2 - H),     ||t|| = sqrt(t^2 + tau_k^2)
//   psi_T(t) = exp(-t^2 / (2 T^2))
//   M(s) = exp(-sqrt(c2) X(s) - c2/2 Var X)
//
// X is a stationary Gaussian field with covariance max(0, ln(T / ||t||)),
// sampled by circulant embedding. The convolution is circular and the result
// is standardized to zero mean and unit variance.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracanalog/fft.hpp"
#include "fracanalog/numeric.hpp"
#include "fracanalog/random.hpp"
#include "fracanalog/series.hpp"

namespace fracanalog {

/// sqrt(t^2 + tau_k^2)
inline double regularized_norm(double t, double tau_k) noexcept { return std::hypot(t, tau_k); }

/// Power-law profile 1 / ||t||^(1/2 - H).
inline double power_law_profile(double t, double hurst, double tau_k) noexcept {
  return std::pow(regularized_norm(t, tau_k), hurst - 0.5);
}

/// Gaussian large-scale cutoff; big_t is its standard deviation.
inline double large_scale_cutoff(double t, double big_t) noexcept {
  return std::exp(-t * t / (2.0 * big_t * big_t));
}

/// Signed lag of FFT slot j on a circle of n samples: j for j <= n/2, j - n above.
inline double wrap_lag(std::size_t j, std::size_t n) noexcept {
  return j <= n / 2 ? static_cast<double>(j) : -static_cast<double>(n - j);
}

/// n i.i.d. standard normals from the white-noise stream of seed.
inline TimeSeries gaussian_white_noise(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("gaussian_white_noise: n must be positive");
  TimeSeries ts;
  ts.values.resize(n);
  make_rng(seed, Stream::kWhiteNoise).fill_normal(ts.values);
  return ts;
}

/// Synthesis kernel tabulated in FFT wraparound order, lags in units of dt.
///
/// The kernel is odd, kernel[j] = -kernel[n - j]. For even n the self-mirrored
/// slot n/2 is set to zero.
inline std::vector<double> synthesis_kernel(const ProcessParams& params) {
  params.validate();
  const std::size_t n = params.n;
  std::vector<double> k(n, 0.0);
  for (std::size_t j = 1; j < n; ++j) {
    if (n % 2 == 0 && j == n / 2) continue;
    const double t = wrap_lag(j, n);
    const double norm = regularized_norm(t, params.tau_k);
    k[j] = large_scale_cutoff(t, params.big_t) * (t / norm) *
           power_law_profile(t, params.hurst, params.tau_k);
  }
  return k;
}

/// Covariance of the log-correlated field at lag t: max(0, ln(T / ||t||)).
inline double log_covariance(double t, double tau_k, double big_t) noexcept {
  return std::max(0.0, std::log(big_t / regularized_norm(t, tau_k)));
}

struct LogCorrelatedField {
  TimeSeries series;
  /// Exact variance of the generated field, mean of the clipped eigenvalues.
  double variance = 0.0;
  /// Negative circulant eigenvalue mass over total absolute mass.
  double clipped_fraction = 0.0;
};

/// Stationary Gaussian field with covariance log_covariance, generated by
/// circulant embedding on n samples from the log-field stream of the seed.
/// Throws std::runtime_error if more than 1% of the eigenvalue mass is negative.
inline LogCorrelatedField log_correlated_field(const ProcessParams& params) {
  params.validate();
  const std::size_t n = params.n;
  std::vector<double> row(n);
  for (std::size_t j = 0; j < n; ++j) {
    row[j] = log_covariance(std::abs(wrap_lag(j, n)), params.tau_k, params.big_t);
  }
  RealFft fft(n);
  const auto spectrum = fft.forward(row);

  // Full-spectrum sums: interior bins appear twice.
  double negative = 0.0, total = 0.0, kept = 0.0;
  std::vector<double> root(spectrum.size());
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    const double lambda = spectrum[i].real();
    const double mult = (i == 0 || (n % 2 == 0 && i == n / 2)) ? 1.0 : 2.0;
    total += mult * std::abs(lambda);
    if (lambda < 0.0) {
      negative += mult * -lambda;
      root[i] = 0.0;
    } else {
      kept += mult * lambda;
      root[i] = std::sqrt(lambda);
    }
  }
  LogCorrelatedField out;
  out.clipped_fraction = total > 0.0 ? negative / total : 0.0;
  if (out.clipped_fraction > 0.01) {
    throw std::runtime_error("log_correlated_field: clipped eigenvalue mass " +
                             std::to_string(out.clipped_fraction * 100.0) +
                             "% exceeds 1% (circulant embedding not positive enough)");
  }
  out.variance = kept / static_cast<double>(n);

  std::vector<double> z(n);
  make_rng(params.seed, Stream::kLogField).fill_normal(z);
  auto zf = fft.forward(z);
  for (std::size_t i = 0; i < zf.size(); ++i) zf[i] *= root[i];
  out.series.values = fft.inverse(zf);
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : out.series.values) v *= scale;
  out.series.dt = params.dt;
  out.series.params = params;
  return out;
}

/// exp(-sqrt(c2) X - (c2/2) Var X); identically one when c2 == 0.
inline std::vector<double> multiplicative_chaos(const LogCorrelatedField& field, double c2) {
  if (!(c2 >= 0.0)) throw std::invalid_argument("multiplicative_chaos: c2 must be >= 0");
  const double a = std::sqrt(c2);
  const double shift = 0.5 * c2 * field.variance;
  std::vector<double> m(field.series.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::exp(-a * field.series.values[i] - shift);
  return m;
}

/// Subtracts the mean and divides by the population standard deviation.
inline void standardize(std::vector<double>& v) {
  const double m = mean(v);
  for (double& x : v) x -= m;
  const double sd = std::sqrt(variance(v));
  if (!(sd > 0.0)) throw std::runtime_error("standardize: series has zero variance");
  for (double& x : v) x /= sd;
}

/// One realization, standardized; bit-identical for identical params.
inline TimeSeries synthesize(const ProcessParams& params) {
  params.validate();
  const std::size_t n = params.n;
  std::vector<double> source = gaussian_white_noise(n, params.seed).values;
  if (params.c2 > 0.0) {
    const auto chaos = multiplicative_chaos(log_correlated_field(params), params.c2);
    for (std::size_t i = 0; i < n; ++i) source[i] *= chaos[i];
  }
  const double sqrt_dt = std::sqrt(params.dt);
  for (double& v : source) v *= sqrt_dt;

  TimeSeries out;
  out.values = circular_convolve(synthesis_kernel(params), source);
  standardize(out.values);
  out.dt = params.dt;
  out.params = params;
  return out;
}

}  // namespace fracanalog
