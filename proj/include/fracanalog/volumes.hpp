#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracanalog/analogues.hpp"
#include "fracanalog/embedding.hpp"
#include "fracanalog/parallel.hpp"

namespace fracanalog {

/// k states of dimension p, row-major.
struct StatesView {
  std::span<const double> coords;
  std::size_t dimension = 1;

  std::size_t count() const noexcept { return dimension == 0 ? 0 : coords.size() / dimension; }
};

namespace detail {

inline std::size_t checked_count(const StatesView& s) {
  if (s.dimension == 0 || s.coords.size() % s.dimension != 0) {
    throw std::invalid_argument("volume: coordinate count is not a multiple of the dimension");
  }
  const std::size_t k = s.count();
  if (k < 2) throw std::invalid_argument("volume: need at least 2 states, got " + std::to_string(k));
  return k;
}

}  // namespace detail

/// Mean squared Euclidean distance over all unordered pairs, summed literally
/// (i outer, j < i inner). O(k^2 p); kept as the reference path.
inline double pairwise_volume(const StatesView& s) {
  const std::size_t k = detail::checked_count(s);
  const std::size_t p = s.dimension;
  double sum = 0.0;
  for (std::size_t i = 1; i < k; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < p; ++c) {
        const double e = s.coords[i * p + c] - s.coords[j * p + c];
        d2 += e * e;
      }
      sum += d2;
    }
  }
  return 2.0 * sum / (static_cast<double>(k) * static_cast<double>(k - 1));
}

/// Same quantity through the scatter identity
///   mean pairwise |xi - xj|^2 = 2k/(k-1) * sum_c Var_c
/// with per-coordinate population variances. O(k p).
inline double analogue_volume(const StatesView& s) {
  const std::size_t k = detail::checked_count(s);
  const std::size_t p = s.dimension;
  const double kd = static_cast<double>(k);
  double scatter = 0.0;
  for (std::size_t c = 0; c < p; ++c) {
    double m = 0.0;
    for (std::size_t i = 0; i < k; ++i) m += s.coords[i * p + c];
    m /= kd;
    double ss = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double e = s.coords[i * p + c] - m;
      ss += e * e;
    }
    scatter += ss / kd;
  }
  return 2.0 * kd / (kd - 1.0) * scatter;
}

/// Dispersion of the analogue successors; identical formula to analogue_volume.
inline double successor_volume(const StatesView& s) { return analogue_volume(s); }

/// Per-target analogue volume and successor volumes over a shared tau grid.
struct VolumeRecord {
  std::size_t target_time_index = 0;
  double delta_a = 0.0;
  std::vector<double> delta_s;  // aligned with VolumeRecords::taus
};

struct VolumeRecords {
  std::vector<std::size_t> taus;
  std::vector<VolumeRecord> records;
};

/// One record per embedded measure state, ordered by target time index.
inline VolumeRecords compute_volume_records(const NeighborIndex& index, const EmbeddedSeries& database,
                                            const EmbeddedSeries& measure, std::size_t k,
                                            std::span<const std::size_t> taus, unsigned threads = 1) {
  if (measure.dimension() != index.dimension() || database.dimension() != index.dimension()) {
    throw std::invalid_argument("compute_volume_records: dimension mismatch between index, database and measure");
  }
  if (k < 2) throw std::invalid_argument("compute_volume_records: k must be >= 2");
  for (std::size_t tau : taus) {
    if (tau < 1 || tau > index.tau_max()) {
      throw std::invalid_argument("compute_volume_records: tau " + std::to_string(tau) + " outside [1, " +
                                  std::to_string(index.tau_max()) + "]");
    }
  }
  const std::size_t p = database.dimension();
  const auto db = database.data();
  const std::size_t first = database.first_time_index();

  VolumeRecords out;
  out.taus.assign(taus.begin(), taus.end());
  out.records.resize(measure.size());

  const std::size_t n_workers =
      std::max<std::size_t>(1, std::min<std::size_t>(resolve_threads(threads), measure.size()));
  const std::size_t block = (measure.size() + n_workers - 1) / n_workers;
  parallel_for(n_workers, threads, [&](std::size_t w) {
    NeighborIndex::Scratch scratch;
    std::vector<double> buf(k * p);
    const std::size_t end = std::min(measure.size(), (w + 1) * block);
    for (std::size_t row = w * block; row < end; ++row) {
      const auto ens = index.k_nearest(measure.state(row), k, scratch);
      VolumeRecord& rec = out.records[row];
      rec.target_time_index = measure.time_index(row);
      auto gather = [&](std::size_t shift) {
        for (std::size_t i = 0; i < k; ++i) {
          const std::size_t r = ens.analogue_time_indices[i] - first + shift;
          std::copy_n(db.begin() + static_cast<std::ptrdiff_t>(r * p), p,
                      buf.begin() + static_cast<std::ptrdiff_t>(i * p));
        }
        return StatesView{buf, p};
      };
      rec.delta_a = analogue_volume(gather(0));
      rec.delta_s.resize(taus.size());
      for (std::size_t ti = 0; ti < taus.size(); ++ti) rec.delta_s[ti] = successor_volume(gather(taus[ti]));
    }
  });
  return out;
}

}  // namespace fracanalog
