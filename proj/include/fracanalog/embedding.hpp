#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracanalog/series.hpp"

namespace fracanalog {

struct EmbedParams {
  std::size_t p = 3;  // embedding dimension
  std::size_t m = 1;  // delay in samples

  void validate() const {
    if (p < 1) throw std::invalid_argument("embedding dimension p must be >= 1");
    if (m < 1) throw std::invalid_argument("delay multiplier m must be >= 1");
  }
};

/// Delay vectors of a series, stored row-major.
///
/// Row i is the state at time index t_i = first_time_index() + i and holds
/// (x(t_i), x(t_i - m), ..., x(t_i - (p-1) m)), most recent value first.
class EmbeddedSeries {
 public:
  EmbeddedSeries() = default;

  std::size_t size() const noexcept { return rows_; }
  std::size_t dimension() const noexcept { return params_.p; }
  std::size_t delay() const noexcept { return params_.m; }
  std::size_t first_time_index() const noexcept { return (params_.p - 1) * params_.m; }
  std::size_t time_index(std::size_t row) const noexcept { return first_time_index() + row; }
  std::size_t row_of(std::size_t time_index) const {
    if (time_index < first_time_index() || time_index - first_time_index() >= rows_) {
      throw std::out_of_range("EmbeddedSeries: time index " + std::to_string(time_index) + " has no state");
    }
    return time_index - first_time_index();
  }

  std::span<const double> state(std::size_t row) const {
    return std::span<const double>(states_).subspan(row * params_.p, params_.p);
  }
  std::span<const double> data() const noexcept { return states_; }

  /// Generation parameters of the source series, when it had any.
  const std::optional<ProcessParams>& source_params() const noexcept { return source_params_; }
  std::size_t source_length() const noexcept { return source_length_; }

  friend EmbeddedSeries takens_embed(const TimeSeries& series, const EmbedParams& params);

 private:
  EmbedParams params_;
  std::size_t rows_ = 0;
  std::vector<double> states_;
  std::optional<ProcessParams> source_params_;
  std::size_t source_length_ = 0;
};

/// Takens delay embedding. Requires n > (p - 1) m.
inline EmbeddedSeries takens_embed(const TimeSeries& series, const EmbedParams& params) {
  params.validate();
  const std::size_t span = (params.p - 1) * params.m;
  const std::size_t n = series.size();
  if (n <= span) {
    throw std::invalid_argument("takens_embed: series of length " + std::to_string(n) +
                                " too short; need at least " + std::to_string(span + 1) + " samples for p=" +
                                std::to_string(params.p) + ", m=" + std::to_string(params.m));
  }
  EmbeddedSeries e;
  e.params_ = params;
  e.rows_ = n - span;
  e.states_.resize(e.rows_ * params.p);
  e.source_params_ = series.params;
  e.source_length_ = n;
  for (std::size_t i = 0; i < e.rows_; ++i) {
    const std::size_t t = span + i;
    for (std::size_t c = 0; c < params.p; ++c) e.states_[i * params.p + c] = series.values[t - c * params.m];
  }
  return e;
}

}  // namespace fracanalog
