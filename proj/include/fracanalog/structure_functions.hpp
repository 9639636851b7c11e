#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracanalog/numeric.hpp"
#include "fracanalog/series.hpp"

namespace fracanalog {

/// E|x(t) - x(t - lag)|^q on a (lag, order) grid, row-major by lag.
struct StructureFunctionTable {
  std::vector<std::size_t> lags;
  std::vector<double> orders;
  std::vector<double> values;

  double at(std::size_t lag_i, std::size_t order_i) const { return values[lag_i * orders.size() + order_i]; }
};

namespace detail {

inline double abs_pow(double a, double q) {
  if (q == 0.0) return 1.0;
  if (q == 1.0) return a;
  if (q == 2.0) return a * a;
  const double r = std::round(q);
  if (r == q && r > 0.0 && r <= 16.0) {
    double p = 1.0;
    for (int i = 0; i < static_cast<int>(r); ++i) p *= a;
    return p;
  }
  return std::pow(a, q);
}

}  // namespace detail

/// Empirical moments of |increments| for every lag and order. Lags must be in
/// [1, n); a maximum lag below n/10 is advisable for stable moments.
inline StructureFunctionTable structure_functions(const TimeSeries& series, std::span<const std::size_t> lags,
                                                  std::span<const double> orders) {
  const std::size_t n = series.size();
  for (std::size_t lag : lags) {
    if (lag == 0 || lag >= n) {
      throw std::invalid_argument("structure_functions: lag " + std::to_string(lag) +
                                  " outside [1, " + std::to_string(n) + ")");
    }
  }
  StructureFunctionTable table;
  table.lags.assign(lags.begin(), lags.end());
  table.orders.assign(orders.begin(), orders.end());
  table.values.resize(lags.size() * orders.size());

  const auto& x = series.values;
  std::vector<double> terms;
  std::vector<double> incr;
  for (std::size_t li = 0; li < lags.size(); ++li) {
    const std::size_t lag = lags[li];
    const std::size_t count = n - lag;
    incr.resize(count);
    for (std::size_t t = 0; t < count; ++t) incr[t] = std::abs(x[t + lag] - x[t]);
    terms.resize(count);
    for (std::size_t qi = 0; qi < orders.size(); ++qi) {
      const double q = orders[qi];
      for (std::size_t t = 0; t < count; ++t) terms[t] = detail::abs_pow(incr[t], q);
      table.values[li * orders.size() + qi] = pairwise_sum(terms) / static_cast<double>(count);
    }
  }
  return table;
}

struct ScalingExponent {
  double order = 0.0;
  double zeta = std::numeric_limits<double>::quiet_NaN();
  double std_error = std::numeric_limits<double>::quiet_NaN();
  double log_prefactor = std::numeric_limits<double>::quiet_NaN();  // ln k_q
  std::size_t n_points = 0;
  bool degenerate = false;  // fewer than 3 finite log points
};

/// Least-squares slope of ln S_q(tau) against ln tau for lags in [lo, hi].
///
/// Throws if fewer than five lags fall in the range. Orders whose table holds
/// fewer than three positive finite values are returned with degenerate set.
inline std::vector<ScalingExponent> scaling_exponents(const StructureFunctionTable& table, double lo, double hi) {
  std::vector<std::size_t> in_range;
  for (std::size_t li = 0; li < table.lags.size(); ++li) {
    const double lag = static_cast<double>(table.lags[li]);
    if (lag >= lo && lag <= hi) in_range.push_back(li);
  }
  if (in_range.size() < 5) {
    throw std::invalid_argument("scaling_exponents: need at least 5 lags in [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + "], have " + std::to_string(in_range.size()));
  }
  std::vector<ScalingExponent> out;
  out.reserve(table.orders.size());
  for (std::size_t qi = 0; qi < table.orders.size(); ++qi) {
    ScalingExponent e;
    e.order = table.orders[qi];
    std::vector<double> lx, ly;
    for (std::size_t li : in_range) {
      const double v = table.at(li, qi);
      if (v > 0.0 && std::isfinite(v)) {
        lx.push_back(std::log(static_cast<double>(table.lags[li])));
        ly.push_back(std::log(v));
      }
    }
    e.n_points = lx.size();
    if (lx.size() < 3) {
      e.degenerate = true;
    } else {
      const auto fit = ols_fit(lx, ly);
      e.zeta = fit.slope;
      e.std_error = fit.slope_stderr;
      e.log_prefactor = fit.intercept;
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace fracanalog
