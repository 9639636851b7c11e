#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "fracanalog/fft.hpp"
#include "fracanalog/numeric.hpp"
#include "fracanalog/synthesis.hpp"

using namespace fracanalog;

namespace {

ProcessParams params(double hurst, double c2, std::size_t n, double tau_k = 5.0, double big_t = 512.0,
                     std::uint64_t seed = 11) {
  ProcessParams p;
  p.hurst = hurst;
  p.c2 = c2;
  p.n = n;
  p.tau_k = tau_k;
  p.big_t = big_t;
  p.seed = seed;
  return p;
}

double flatness(const std::vector<double>& x, std::size_t lag) {
  double s2 = 0.0, s4 = 0.0;
  for (std::size_t i = lag; i < x.size(); ++i) {
    const double d = x[i] - x[i - lag];
    s2 += d * d;
    s4 += d * d * d * d;
  }
  const double n = static_cast<double>(x.size() - lag);
  return (s4 / n) / ((s2 / n) * (s2 / n));
}

double increment_skewness(const std::vector<double>& x, std::size_t lag) {
  std::vector<double> d(x.size() - lag);
  for (std::size_t i = lag; i < x.size(); ++i) d[i - lag] = x[i] - x[i - lag];
  const double m = mean(d);
  double s2 = 0.0, s3 = 0.0;
  for (double v : d) {
    s2 += (v - m) * (v - m);
    s3 += (v - m) * (v - m) * (v - m);
  }
  const double n = static_cast<double>(d.size());
  return (s3 / n) / std::pow(s2 / n, 1.5);
}

}  // namespace

TEST(Kernel, ProfileAtOrigin) { EXPECT_NEAR(power_law_profile(0.0, 0.3, 5.0), std::pow(5.0, -0.2), 1e-15); }

TEST(Kernel, ProfileAtOriginValue) { EXPECT_NEAR(power_law_profile(0.0, 0.3, 5.0), 0.7248, 5e-5); }

TEST(Kernel, ProfileIsFlatForBrownianExponent) {
  for (double t : {0.0, 1.0, 17.0, -400.0, 1e5}) EXPECT_DOUBLE_EQ(power_law_profile(t, 0.5, 5.0), 1.0);
}

TEST(Kernel, ProfileAndCutoffAreEven) {
  for (double t : {0.5, 3.0, 50.0, 999.0}) {
    EXPECT_EQ(power_law_profile(t, 0.3, 5.0), power_law_profile(-t, 0.3, 5.0));
    EXPECT_EQ(large_scale_cutoff(t, 512.0), large_scale_cutoff(-t, 512.0));
  }
  EXPECT_EQ(large_scale_cutoff(0.0, 512.0), 1.0);
  EXPECT_NEAR(large_scale_cutoff(512.0, 512.0), std::exp(-0.5), 1e-15);
}

TEST(Kernel, OddInWraparoundOrder) {
  for (std::size_t n : {std::size_t{1024}, std::size_t{1001}}) {
    const auto k = synthesis_kernel(params(0.3, 0.0, n, 5.0, 100.0));
    ASSERT_EQ(k.size(), n);
    EXPECT_EQ(k[0], 0.0);
    for (std::size_t j = 1; j < n; ++j) ASSERT_EQ(k[j], -k[n - j]) << "j=" << j;
  }
}

TEST(Kernel, MatchesCutoffTimesProfileTimesSign) {
  const auto p = params(0.7, 0.0, 4096, 5.0, 300.0);
  const auto k = synthesis_kernel(p);
  for (std::size_t j : {1u, 5u, 40u, 1000u}) {
    const double t = static_cast<double>(j);
    const double expected =
        large_scale_cutoff(t, 300.0) * power_law_profile(t, 0.7, 5.0) * t / regularized_norm(t, 5.0);
    EXPECT_NEAR(k[j], expected, 1e-15 * std::abs(expected) + 1e-300);
  }
}

TEST(Fft, RoundTrip) {
  std::vector<double> x(37);
  std::iota(x.begin(), x.end(), -3.0);
  RealFft fft(x.size());
  const auto back = fft.inverse(fft.forward(x));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(back[i] / 37.0, x[i], 1e-12);
}

TEST(Fft, CircularConvolutionMatchesDirectSum) {
  const std::size_t n = 24;
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = std::sin(0.3 * static_cast<double>(i));
    b[i] = 1.0 / (1.0 + static_cast<double>(i));
  }
  const auto c = circular_convolve(a, b);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += a[j] * b[(i + n - j) % n];
    EXPECT_NEAR(c[i], s, 1e-12);
  }
}

TEST(LogField, CovarianceFunction) {
  EXPECT_NEAR(log_covariance(0.0, 5.0, 2350.0), std::log(470.0), 1e-12);
  EXPECT_EQ(log_covariance(2350.0, 5.0, 2350.0), 0.0);
  EXPECT_EQ(log_covariance(1e5, 5.0, 2350.0), 0.0);
}

TEST(LogField, VarianceAtFixedTimeOverRealizations) {
  // 1000 independent realizations. Each contributes three fixed times whose
  // separation exceeds T; the covariance vanishes there, so the three samples
  // are independent and the estimate has a 2.6% standard error.
  constexpr int kRealizations = 1000;
  auto p = params(0.5, 0.1, 8192, 5.0, 2350.0);
  const std::size_t times[] = {0, 2731, 5462};
  double s = 0.0;
  for (int r = 0; r < kRealizations; ++r) {
    p.seed = 1000 + static_cast<std::uint64_t>(r);
    const auto field = log_correlated_field(p);
    EXPECT_LT(field.clipped_fraction, 0.01);
    for (std::size_t t : times) s += field.series.values[t] * field.series.values[t];  // zero-mean field
  }
  EXPECT_NEAR(s / (3.0 * kRealizations), std::log(470.0), 0.05 * std::log(470.0));
}

TEST(LogField, ReportedVarianceIsKeptEigenvalueMass) {
  const auto field = log_correlated_field(params(0.5, 0.1, 8192, 5.0, 2350.0));
  EXPECT_NEAR(field.variance, std::log(470.0), 1e-3);
}

TEST(LogField, DecorrelatesBeyondIntegralScale) {
  auto p = params(0.5, 0.1, 1 << 16, 5.0, 256.0);
  double lag_t = 0.0, lag_2t = 0.0;
  std::size_t count = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    p.seed = seed;
    const auto x = log_correlated_field(p).series.values;
    for (std::size_t i = 0; i + 512 < x.size(); ++i) {
      lag_t += x[i] * x[i + 256];
      lag_2t += x[i] * x[i + 512];
      ++count;
    }
  }
  EXPECT_NEAR(lag_t / static_cast<double>(count), 0.0, 0.05);
  EXPECT_NEAR(lag_2t / static_cast<double>(count), 0.0, 0.05);
}

TEST(LogField, CovarianceDecaysWithUnitLogSlope) {
  // Between tau_k and T the covariance is ln T - ln t.
  auto p = params(0.5, 0.1, 1 << 16, 2.0, 4096.0);
  const std::vector<std::size_t> lags{16, 32, 64, 128, 256};
  std::vector<double> cov(lags.size(), 0.0);
  std::size_t count = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    p.seed = seed;
    const auto x = log_correlated_field(p).series.values;
    for (std::size_t i = 0; i + lags.back() < x.size(); ++i) {
      for (std::size_t l = 0; l < lags.size(); ++l) cov[l] += x[i] * x[i + lags[l]];
    }
    count += x.size() - lags.back();
  }
  std::vector<double> lx, ly;
  for (std::size_t l = 0; l < lags.size(); ++l) {
    lx.push_back(std::log(static_cast<double>(lags[l])));
    ly.push_back(cov[l] / static_cast<double>(count));
  }
  EXPECT_NEAR(ols_fit(lx, ly).slope, -1.0, 0.1);
}

TEST(LogField, RejectsExcessiveClipping) {
  // On a 4-point circle the wrapped covariance is far from positive definite.
  EXPECT_THROW(log_correlated_field(params(0.5, 0.1, 4, 0.9, 2.1)), std::runtime_error);
  EXPECT_THROW(synthesize(params(0.5, 0.1, 4, 0.9, 2.1)), std::runtime_error);
  EXPECT_NO_THROW(synthesize(params(0.5, 0.0, 4, 0.9, 2.1)));  // c2 = 0 never builds the field
}

TEST(Chaos, UnitWhenIntermittencyVanishes) {
  const auto field = log_correlated_field(params(0.5, 0.1, 4096, 5.0, 512.0));
  for (double m : multiplicative_chaos(field, 0.0)) ASSERT_EQ(m, 1.0);
}

TEST(Chaos, MeanOneAndPositive) {
  // 160 realizations of 2^16 samples, about 1e7 in total.
  double sum = 0.0;
  std::size_t count = 0;
  auto p = params(0.5, 0.1, 1 << 16, 5.0, 512.0);
  for (std::uint64_t seed = 1; seed <= 160; ++seed) {
    p.seed = seed;
    for (double m : multiplicative_chaos(log_correlated_field(p), 0.1)) {
      ASSERT_GT(m, 0.0);
      sum += m;
      ++count;
    }
  }
  EXPECT_NEAR(sum / static_cast<double>(count), 1.0, 0.02);
}

TEST(Synthesize, StandardizedMoments) {
  for (double c2 : {0.0, 0.1}) {
    const auto x = synthesize(params(0.3, c2, 1 << 14, 5.0, 512.0)).values;
    EXPECT_NEAR(mean(x), 0.0, 1e-12);
    EXPECT_NEAR(variance(x), 1.0, 1e-12);
    for (double v : x) ASSERT_TRUE(std::isfinite(v));
  }
}

TEST(Synthesize, DeterministicAndEchoesParams) {
  const auto p = params(0.7, 0.05, 1 << 13, 5.0, 256.0, 99);
  const auto a = synthesize(p);
  const auto b = synthesize(p);
  EXPECT_EQ(a.values, b.values);
  ASSERT_TRUE(a.params.has_value());
  EXPECT_EQ(*a.params, p);
  auto q = p;
  q.seed = 100;
  EXPECT_NE(synthesize(q).values, a.values);
}

TEST(Synthesize, InvalidParamsRejected) {
  EXPECT_THROW(synthesize(params(1.5, 0.0, 1024)), std::invalid_argument);
  EXPECT_THROW(synthesize(params(0.5, -0.1, 1024)), std::invalid_argument);
  EXPECT_THROW(synthesize(params(0.5, 0.0, 1024, 5.0, 4.0)), std::invalid_argument);
  EXPECT_THROW(synthesize(params(0.5, 0.0, 256, 5.0, 300.0)), std::invalid_argument);
}

TEST(Synthesize, ShortSeriesWarns) {
  EXPECT_FALSE(params(0.5, 0.0, 1024, 5.0, 200.0).warnings().empty());
  EXPECT_TRUE(params(0.5, 0.0, 1 << 14, 5.0, 200.0).warnings().empty());
}

TEST(Synthesize, SpectrumSlopeForBrownianExponent) {
  // Periodogram averaged over 8 realizations and in log-spaced frequency bands
  // well inside (1 / T, 1 / tau_k).
  const std::size_t n = 1 << 18;
  auto p = params(0.5, 0.0, n, 1.0, 16384.0);
  const std::size_t nb = n / 2 + 1;
  std::vector<double> power(nb, 0.0);
  RealFft fft(n);
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    p.seed = seed;
    const auto spec = fft.forward(synthesize(p).values);
    for (std::size_t i = 0; i < nb; ++i) power[i] += std::norm(spec[i]);
  }
  const double f_lo = 30.0 / 16384.0, f_hi = 1.0 / 30.0;
  std::vector<double> lx, ly;
  const int bands = 20;
  for (int b = 0; b < bands; ++b) {
    const double lo = f_lo * std::pow(f_hi / f_lo, static_cast<double>(b) / bands);
    const double hi = f_lo * std::pow(f_hi / f_lo, static_cast<double>(b + 1) / bands);
    double s = 0.0, sf = 0.0;
    int count = 0;
    for (std::size_t i = 1; i < nb; ++i) {
      const double f = static_cast<double>(i) / static_cast<double>(n);
      if (f >= lo && f < hi) {
        s += power[i];
        sf += std::log(f);
        ++count;
      }
    }
    if (count > 0) {
      lx.push_back(sf / count);
      ly.push_back(std::log(s / count));
    }
  }
  EXPECT_NEAR(ols_fit(lx, ly).slope, -2.0, 0.15);
}

TEST(Synthesize, GaussianIncrementsAreSymmetric) {
  for (double h : {0.3, 0.5, 0.7}) {
    const auto x = synthesize(params(h, 0.0, 1 << 20, 5.0, 512.0, 5)).values;
    for (std::size_t lag : {1u, 5u, 15u, 50u}) {
      EXPECT_LT(std::abs(increment_skewness(x, lag)), 0.05) << "H=" << h << " lag=" << lag;
    }
  }
}

TEST(Synthesize, FlatnessAtSmallestInertialLag) {
  const std::size_t lag = 15;  // 3 tau_k
  const auto gaussian = synthesize(params(0.7, 0.0, 1 << 20, 5.0, 512.0, 3)).values;
  EXPECT_NEAR(flatness(gaussian, lag), 3.0, 0.2);
  const auto intermittent = synthesize(params(0.7, 0.1, 1 << 20, 5.0, 512.0, 3)).values;
  EXPECT_GT(flatness(intermittent, lag), 3.3);
}
