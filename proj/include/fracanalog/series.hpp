#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracanalog {

/// Parameters of a regularized fBm / MRW realization.
///
/// tau_k and big_t are expressed in units of dt (sample lags); dt only scales
/// the white-noise increment and is carried as metadata.
struct ProcessParams {
  double hurst = 0.5;
  double c2 = 0.0;            // intermittency coefficient, 0 for r-fBm
  double tau_k = 5.0;         // regularization scale
  double big_t = 512.0;       // large-scale cutoff
  std::size_t n = 1u << 20;   // sample count
  double dt = 1.0;
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument naming the first violated invariant.
  void validate() const {
    if (!(hurst > 0.0 && hurst < 1.0)) {
      throw std::invalid_argument("hurst must satisfy 0 < H < 1 (got " + std::to_string(hurst) + ")");
    }
    if (!(c2 >= 0.0) || !std::isfinite(c2)) throw std::invalid_argument("c2 must be finite and >= 0");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be finite and > 0");
    if (n == 0) throw std::invalid_argument("n must be positive");
    if (!(tau_k > 0.0)) throw std::invalid_argument("tau_k must be > 0");
    if (!(big_t > tau_k)) throw std::invalid_argument("big_t must be > tau_k");
    if (!(big_t < static_cast<double>(n))) {
      throw std::invalid_argument("big_t must be shorter than the series (big_t < n)");
    }
  }

  /// Non-fatal conditions worth reporting.
  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    if (static_cast<double>(n) < 8.0 * big_t) {
      w.emplace_back("n < 8 * big_t: circular wraparound of the large-scale cutoff is not negligible");
    }
    return w;
  }

  friend bool operator==(const ProcessParams&, const ProcessParams&) = default;
};

/// Uniformly sampled scalar series. params is empty for externally loaded data.
struct TimeSeries {
  std::vector<double> values;
  double dt = 1.0;
  std::optional<ProcessParams> params;

  std::size_t size() const noexcept { return values.size(); }
};

}  // namespace fracanalog
