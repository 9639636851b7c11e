#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracanalog/numeric.hpp"
#include "fracanalog/volumes.hpp"

namespace fracanalog {

// ---------------------------------------------------------------------------
// Distribution of log analogue volumes

/// Normalized histogram of log(delta_a). mean and stddev are computed on the raw
/// samples, not on the binned counts.
struct LogVolumePdf {
  std::vector<double> bin_centers;
  std::vector<double> densities;
  double bin_width = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  bool degenerate = false;  // all samples equal; stddev reported as 0
  std::size_t n_samples = 0;
  std::size_t dropped = 0;  // zero volumes excluded from the logs
};

/// Histogram of log(volume) over n_bins equal bins spanning [min, max].
///
/// Zero volumes cannot be logged; they are dropped and counted, and the call
/// fails if they exceed 0.1% of the input.
inline LogVolumePdf log_volume_pdf(std::span<const double> volumes, std::size_t n_bins) {
  if (n_bins == 0) throw std::invalid_argument("log_volume_pdf: n_bins must be positive");
  LogVolumePdf pdf;
  std::vector<double> logs;
  logs.reserve(volumes.size());
  for (double v : volumes) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("log_volume_pdf: volumes must be finite and >= 0");
    if (v == 0.0) {
      ++pdf.dropped;
    } else {
      logs.push_back(std::log(v));
    }
  }
  if (static_cast<double>(pdf.dropped) > 1e-3 * static_cast<double>(volumes.size())) {
    throw std::runtime_error("log_volume_pdf: " + std::to_string(pdf.dropped) + " of " +
                             std::to_string(volumes.size()) + " volumes are zero (limit 0.1%)");
  }
  if (logs.empty()) throw std::invalid_argument("log_volume_pdf: no positive volumes");
  pdf.n_samples = logs.size();
  pdf.mean = mean(logs);
  pdf.stddev = std::sqrt(variance(logs));

  const auto [lo_it, hi_it] = std::minmax_element(logs.begin(), logs.end());
  const double lo = *lo_it, hi = *hi_it;
  const double n = static_cast<double>(logs.size());
  if (!(hi > lo)) {
    pdf.degenerate = true;
    pdf.stddev = 0.0;
    pdf.bin_width = 1.0;
    pdf.bin_centers = {lo};
    pdf.densities = {1.0};
    return pdf;
  }
  pdf.bin_width = (hi - lo) / static_cast<double>(n_bins);
  std::vector<std::size_t> counts(n_bins, 0);
  for (double x : logs) {
    auto b = static_cast<std::size_t>((x - lo) / pdf.bin_width);
    ++counts[std::min(b, n_bins - 1)];
  }
  pdf.bin_centers.resize(n_bins);
  pdf.densities.resize(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    pdf.bin_centers[b] = lo + (static_cast<double>(b) + 0.5) * pdf.bin_width;
    pdf.densities[b] = static_cast<double>(counts[b]) / (n * pdf.bin_width);
  }
  return pdf;
}

inline LogVolumePdf log_volume_pdf(const VolumeRecords& records, std::size_t n_bins) {
  std::vector<double> a(records.records.size());
  std::transform(records.records.begin(), records.records.end(), a.begin(),
                 [](const VolumeRecord& r) { return r.delta_a; });
  return log_volume_pdf(a, n_bins);
}

/// Abscissa mapped to (x - mean) / std and densities multiplied by std, so the
/// unit integral is preserved.
inline LogVolumePdf rescaled_pdf(const LogVolumePdf& pdf) {
  if (pdf.degenerate || !(pdf.stddev > 0.0)) {
    throw std::invalid_argument("rescaled_pdf: degenerate distribution (std = 0)");
  }
  LogVolumePdf out = pdf;
  for (double& c : out.bin_centers) c = (c - pdf.mean) / pdf.stddev;
  for (double& d : out.densities) d *= pdf.stddev;
  out.bin_width = pdf.bin_width / pdf.stddev;
  out.mean = 0.0;
  out.stddev = 1.0;
  return out;
}

// ---------------------------------------------------------------------------
// Successor dispersion

enum class AlphaMethod { kOls, kTheilSen };

/// Per-tau mean successor volume and the log-log slope alpha of delta_s
/// against delta_a across targets.
struct DispersionCurve {
  std::vector<double> taus;
  std::vector<double> mean_delta_s;      // arithmetic mean over targets
  std::vector<double> mean_log_delta_s;  // mean of ln(delta_s), reported only
  std::vector<double> alpha;
  std::vector<double> alpha_stderr;
  std::vector<std::size_t> rejected_taus;  // taus with a zero or non-finite delta_s
  std::size_t skipped_targets = 0;          // targets with delta_a == 0, left out of alpha
};

inline DispersionCurve dispersion_curve(const VolumeRecords& records, AlphaMethod method = AlphaMethod::kOls) {
  const auto& recs = records.records;
  if (recs.size() < 3) throw std::invalid_argument("dispersion_curve: need at least 3 records");
  DispersionCurve curve;
  std::vector<std::size_t> used;
  std::vector<double> x;
  used.reserve(recs.size());
  x.reserve(recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (recs[i].delta_s.size() != records.taus.size()) {
      throw std::invalid_argument("dispersion_curve: record " + std::to_string(i) + " does not match the tau grid");
    }
    if (recs[i].delta_a > 0.0 && std::isfinite(recs[i].delta_a)) {
      used.push_back(i);
      x.push_back(std::log(recs[i].delta_a));
    }
  }
  curve.skipped_targets = recs.size() - used.size();
  if (used.size() < 3) throw std::invalid_argument("dispersion_curve: fewer than 3 targets with delta_a > 0");

  std::vector<double> all(recs.size()), y(used.size()), ly(recs.size());
  for (std::size_t ti = 0; ti < records.taus.size(); ++ti) {
    bool ok = true;
    for (std::size_t i = 0; i < recs.size() && ok; ++i) {
      const double v = recs[i].delta_s[ti];
      ok = std::isfinite(v) && v > 0.0;
      all[i] = v;
      ly[i] = ok ? std::log(v) : 0.0;
    }
    if (!ok) {
      curve.rejected_taus.push_back(records.taus[ti]);
      continue;
    }
    for (std::size_t j = 0; j < used.size(); ++j) y[j] = ly[used[j]];
    const LinearFit fit = method == AlphaMethod::kOls ? ols_fit(x, y) : theil_sen_fit(x, y);
    curve.taus.push_back(static_cast<double>(records.taus[ti]));
    curve.mean_delta_s.push_back(mean(all));
    curve.mean_log_delta_s.push_back(mean(ly));
    curve.alpha.push_back(fit.slope);
    curve.alpha_stderr.push_back(fit.slope_stderr);
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Scale-domain fits

struct ScalingFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double stderr_slope = std::numeric_limits<double>::quiet_NaN();
  double tau_lo = 0.0;
  double tau_hi = 0.0;
  std::size_t n_points = 0;
};

/// Scale-domain boundaries as multiples of tau_k and T.
struct DomainWindows {
  double inertial_lo_factor = 3.0;        // inertial fit starts at this * tau_k
  double inertial_hi_fraction = 1.0 / 3;  // and ends at this * T
  double plateau_factor = 2.0;            // plateau averages taus above this * T
};

struct DomainFits {
  ScalingFit dissipative;
  ScalingFit inertial;
  double plateau_level = std::numeric_limits<double>::quiet_NaN();
  std::size_t plateau_points = 0;
};

/// Straight-line fit of ln(mean delta_s) against ln(tau / T) for taus in [lo, hi].
inline ScalingFit fit_log_log(const DispersionCurve& curve, double big_t, double lo, double hi,
                              bool include_hi = true) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < curve.taus.size(); ++i) {
    const double tau = curve.taus[i];
    const bool in = tau >= lo && (include_hi ? tau <= hi : tau < hi);
    if (in) {
      x.push_back(std::log(tau / big_t));
      y.push_back(std::log(curve.mean_delta_s[i]));
    }
  }
  if (x.size() < 3) {
    throw std::invalid_argument("fit_log_log: fewer than 3 grid points in [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + "]");
  }
  const auto f = ols_fit(x, y);
  return {f.slope, f.intercept, f.slope_stderr, lo, hi, f.n_points};
}

/// Dissipative fit over tau < tau_k, inertial fit over the configured window
/// and the mean level of mean_delta_s beyond plateau_factor * T.
inline DomainFits fit_domain_slopes(const DispersionCurve& curve, double tau_k, double big_t,
                                    const DomainWindows& w = {}) {
  DomainFits out;
  double first_tau = curve.taus.empty() ? 1.0 : curve.taus.front();
  out.dissipative = fit_log_log(curve, big_t, first_tau, tau_k, false);
  out.inertial = fit_log_log(curve, big_t, w.inertial_lo_factor * tau_k, w.inertial_hi_fraction * big_t);
  std::vector<double> plateau;
  for (std::size_t i = 0; i < curve.taus.size(); ++i) {
    if (curve.taus[i] > w.plateau_factor * big_t) plateau.push_back(curve.mean_delta_s[i]);
  }
  if (plateau.size() < 3) {
    throw std::invalid_argument("fit_domain_slopes: fewer than 3 grid points above " +
                                std::to_string(w.plateau_factor * big_t));
  }
  out.plateau_level = mean(plateau);
  out.plateau_points = plateau.size();
  return out;
}

// ---------------------------------------------------------------------------
// Intermittency dependence of alpha

/// Sufficient statistics of the through-origin fit alpha = gamma * u with
/// u = -sqrt(c2) ln(tau / T), restricted to the inertial window.
struct GammaSums {
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  std::size_t n = 0;

  GammaSums& operator+=(const GammaSums& o) {
    sxy += o.sxy;
    sxx += o.sxx;
    syy += o.syy;
    n += o.n;
    return *this;
  }
};

inline GammaSums gamma_sums(const DispersionCurve& curve, double c2, double tau_k, double big_t,
                            const DomainWindows& w = {}) {
  GammaSums s;
  const double root = std::sqrt(c2);
  for (std::size_t i = 0; i < curve.taus.size(); ++i) {
    const double tau = curve.taus[i];
    if (tau < w.inertial_lo_factor * tau_k || tau > w.inertial_hi_fraction * big_t) continue;
    const double u = -root * std::log(tau / big_t);
    s.sxy += u * curve.alpha[i];
    s.sxx += u * u;
    s.syy += curve.alpha[i] * curve.alpha[i];
    ++s.n;
  }
  return s;
}

struct GammaFit {
  double gamma = std::numeric_limits<double>::quiet_NaN();
  double stderr_gamma = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_points = 0;
  std::size_t n_curves = 0;
};

inline GammaFit gamma_from_sums(const GammaSums& s) {
  if (s.n < 2 || !(s.sxx > 0.0)) throw std::invalid_argument("gamma fit: degenerate design");
  GammaFit g;
  g.gamma = s.sxy / s.sxx;
  g.n_points = s.n;
  const double rss = std::max(0.0, s.syy - 2.0 * g.gamma * s.sxy + g.gamma * g.gamma * s.sxx);
  g.stderr_gamma = std::sqrt(rss / static_cast<double>(s.n - 1) / s.sxx);
  return g;
}

/// Pooled estimate of gamma in alpha(tau) = -gamma sqrt(c2) ln(tau / T) over
/// inertial taus. Curves with c2 <= 0 carry no information and are skipped;
/// at least two distinct positive c2 values are required.
inline GammaFit fit_alpha_intermittency(const std::map<double, DispersionCurve>& curves, double tau_k,
                                        double big_t, const DomainWindows& w = {}) {
  GammaSums total;
  std::size_t n_curves = 0;
  for (const auto& [c2, curve] : curves) {
    if (!(c2 > 0.0)) continue;
    total += gamma_sums(curve, c2, tau_k, big_t, w);
    ++n_curves;
  }
  if (n_curves < 2) {
    throw std::invalid_argument("fit_alpha_intermittency: need at least two distinct c2 > 0, got " +
                                std::to_string(n_curves));
  }
  GammaFit g = gamma_from_sums(total);
  g.n_curves = n_curves;
  return g;
}

}  // namespace fracanalog
