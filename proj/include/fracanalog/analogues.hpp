#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fracanalog/embedding.hpp"

namespace fracanalog {

/// The k nearest database states of one target, closest first.
struct AnalogEnsemble {
  std::size_t target_time_index = 0;
  std::vector<std::size_t> analogue_time_indices;
  std::vector<double> distances;  // Euclidean, non-decreasing
  double epsilon_k = 0.0;         // distance to the k-th analogue

  std::size_t size() const noexcept { return analogue_time_indices.size(); }
};

/// Exact Euclidean k-nearest-neighbour index over the admissible prefix of a
/// database: rows whose successors exist for every shift up to tau_max.
///
/// Neighbours are ordered by (squared distance, time index), so equidistant
/// states resolve to the earlier one. The tree shape only affects speed; the
/// answer always equals a linear scan using the same squared-distance sum.
class NeighborIndex {
 public:
  struct Scratch {
    std::vector<std::pair<double, std::uint32_t>> heap;
    std::vector<std::uint32_t> stack;
  };

  NeighborIndex(const EmbeddedSeries& database, std::size_t tau_max, std::size_t leaf_size = 16)
      : dim_(database.dimension()), first_time_(database.first_time_index()), tau_max_(tau_max) {
    if (database.size() == 0) throw std::invalid_argument("build_index: database is empty");
    if (tau_max >= database.size()) {
      throw std::invalid_argument("build_index: empty admissible range (tau_max " + std::to_string(tau_max) +
                                  " >= database size " + std::to_string(database.size()) + ")");
    }
    if (database.size() > std::numeric_limits<std::uint32_t>::max()) {
      throw std::invalid_argument("build_index: database too large for 32-bit row ids");
    }
    count_ = database.size() - tau_max;
    leaf_size_ = std::max<std::size_t>(leaf_size, 1);

    rows_.resize(count_);
    std::iota(rows_.begin(), rows_.end(), 0u);
    const auto src = database.data();
    nodes_.reserve(2 * (count_ / leaf_size_ + 1));
    build(src, 0, count_);

    points_.resize(count_ * dim_);
    for (std::size_t i = 0; i < count_; ++i) {
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(rows_[i] * dim_), dim_,
                  points_.begin() + static_cast<std::ptrdiff_t>(i * dim_));
    }
  }

  std::size_t dimension() const noexcept { return dim_; }
  std::size_t tau_max() const noexcept { return tau_max_; }
  std::size_t admissible_count() const noexcept { return count_; }
  /// Largest time index an analogue can have.
  std::size_t admissible_range() const noexcept { return first_time_ + count_ - 1; }

  AnalogEnsemble k_nearest(std::span<const double> target, std::size_t k) const {
    Scratch scratch;
    return k_nearest(target, k, scratch);
  }

  AnalogEnsemble k_nearest(std::span<const double> target, std::size_t k, Scratch& scratch) const {
    if (target.size() != dim_) {
      throw std::invalid_argument("k_nearest: target has dimension " + std::to_string(target.size()) +
                                  ", index has " + std::to_string(dim_));
    }
    if (k == 0 || k > count_) {
      throw std::invalid_argument("k_nearest: k=" + std::to_string(k) + " outside [1, " +
                                  std::to_string(count_) + "] admissible states");
    }
    switch (dim_) {
      case 1: search<1>(target, k, scratch); break;
      case 2: search<2>(target, k, scratch); break;
      case 3: search<3>(target, k, scratch); break;
      case 4: search<4>(target, k, scratch); break;
      default: search<0>(target, k, scratch); break;
    }
    auto& heap = scratch.heap;
    std::sort_heap(heap.begin(), heap.end());
    AnalogEnsemble out;
    out.analogue_time_indices.resize(k);
    out.distances.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      out.analogue_time_indices[i] = first_time_ + heap[i].second;
      out.distances[i] = std::sqrt(heap[i].first);
    }
    out.epsilon_k = out.distances.back();
    return out;
  }

 private:
  struct Node {
    std::uint32_t begin = 0, end = 0;
    std::uint32_t left = 0, right = 0;  // 0 marks a leaf (the root is never a child)
  };

  std::uint32_t build(std::span<const double> src, std::size_t begin, std::size_t end) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back({static_cast<std::uint32_t>(begin), static_cast<std::uint32_t>(end), 0, 0});
    bounds_.resize(bounds_.size() + 2 * dim_);
    double* lo = &bounds_[id * 2 * dim_];
    double* hi = lo + dim_;
    std::fill(lo, lo + dim_, std::numeric_limits<double>::infinity());
    std::fill(hi, hi + dim_, -std::numeric_limits<double>::infinity());
    for (std::size_t i = begin; i < end; ++i) {
      const double* x = &src[rows_[i] * dim_];
      for (std::size_t c = 0; c < dim_; ++c) {
        lo[c] = std::min(lo[c], x[c]);
        hi[c] = std::max(hi[c], x[c]);
      }
    }
    if (end - begin <= leaf_size_) return id;

    std::size_t axis = 0;
    double extent = -1.0;
    for (std::size_t c = 0; c < dim_; ++c) {
      if (hi[c] - lo[c] > extent) {
        extent = hi[c] - lo[c];
        axis = c;
      }
    }
    if (!(extent > 0.0)) return id;  // all points coincide

    const std::size_t mid = begin + (end - begin) / 2;
    const auto first = rows_.begin() + static_cast<std::ptrdiff_t>(begin);
    std::nth_element(first, rows_.begin() + static_cast<std::ptrdiff_t>(mid),
                     rows_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::uint32_t a, std::uint32_t b) {
                       const double va = src[a * dim_ + axis], vb = src[b * dim_ + axis];
                       return va < vb || (va == vb && a < b);
                     });
    const std::uint32_t left = build(src, begin, mid);
    const std::uint32_t right = build(src, mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  template <std::size_t P>
  double box_distance2(std::uint32_t node, std::span<const double> q) const {
    const std::size_t d = P == 0 ? dim_ : P;
    const double* lo = &bounds_[node * 2 * dim_];
    const double* hi = lo + dim_;
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      double e = 0.0;
      if (q[c] < lo[c]) e = lo[c] - q[c];
      else if (q[c] > hi[c]) e = q[c] - hi[c];
      s += e * e;
    }
    return s;
  }

  template <std::size_t P>
  void search(std::span<const double> q, std::size_t k, Scratch& scratch) const {
    const std::size_t d = P == 0 ? dim_ : P;
    auto& heap = scratch.heap;
    auto& stack = scratch.stack;
    heap.clear();
    stack.clear();
    stack.push_back(0);
    while (!stack.empty()) {
      const std::uint32_t id = stack.back();
      stack.pop_back();
      if (heap.size() == k && box_distance2<P>(id, q) > heap.front().first) continue;
      const Node& node = nodes_[id];
      if (node.left == 0) {
        for (std::uint32_t i = node.begin; i < node.end; ++i) {
          const double* x = &points_[static_cast<std::size_t>(i) * dim_];
          double s = 0.0;
          for (std::size_t c = 0; c < d; ++c) {
            const double e = q[c] - x[c];
            s += e * e;
          }
          const std::pair<double, std::uint32_t> cand{s, rows_[i]};
          if (heap.size() < k) {
            heap.push_back(cand);
            std::push_heap(heap.begin(), heap.end());
          } else if (cand < heap.front()) {
            std::pop_heap(heap.begin(), heap.end());
            heap.back() = cand;
            std::push_heap(heap.begin(), heap.end());
          }
        }
        continue;
      }
      // Push the farther child first so the nearer one is explored next.
      const double dl = box_distance2<P>(node.left, q);
      const double dr = box_distance2<P>(node.right, q);
      if (dl <= dr) {
        stack.push_back(node.right);
        stack.push_back(node.left);
      } else {
        stack.push_back(node.left);
        stack.push_back(node.right);
      }
    }
  }

  std::size_t dim_;
  std::size_t first_time_;
  std::size_t tau_max_;
  std::size_t count_ = 0;
  std::size_t leaf_size_ = 16;
  std::vector<std::uint32_t> rows_;
  std::vector<double> points_;
  std::vector<Node> nodes_;
  std::vector<double> bounds_;
};

inline NeighborIndex build_index(const EmbeddedSeries& database, std::size_t tau_max) {
  return NeighborIndex(database, tau_max);
}

inline AnalogEnsemble k_nearest(const NeighborIndex& index, std::span<const double> target, std::size_t k) {
  return index.k_nearest(target, k);
}

/// Database states at each analogue's time index shifted by tau, in ensemble
/// order, flattened row-major (k rows of p values).
inline std::vector<double> successors(const EmbeddedSeries& database, const AnalogEnsemble& ensemble,
                                      std::size_t tau) {
  const std::size_t p = database.dimension();
  std::vector<double> out(ensemble.size() * p);
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const std::size_t t = ensemble.analogue_time_indices[i] + tau;
    if (t < database.first_time_index() || t - database.first_time_index() >= database.size()) {
      throw std::out_of_range("successors: tau=" + std::to_string(tau) + " moves analogue at time " +
                              std::to_string(ensemble.analogue_time_indices[i]) + " past the database end");
    }
    const auto s = database.state(t - database.first_time_index());
    std::copy(s.begin(), s.end(), out.begin() + static_cast<std::ptrdiff_t>(i * p));
  }
  return out;
}

}  // namespace fracanalog
