// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "adq/dataset.hpp"

namespace adq {

/// One round of greedy selection. Members are kept in selection order.
struct Bin {
  std::size_t index = 0;  // 1-based bin number
  std::vector<std::size_t> members;

  std::size_t size() const noexcept { return members.size(); }
  friend bool operator==(const Bin&, const Bin&) = default;
};

/// Sufficient statistics of the current partial bin S and the remaining pool R:
/// counts, coordinate sums and sums of squared norms. With these the GraphCut
/// gain of any candidate costs O(d).
struct PoolMoments {
  std::size_t pool_count = 0;
  std::vector<double> pool_sum;
  double pool_sumsq = 0.0;
  std::size_t bin_count = 0;
  std::vector<double> bin_sum;
  double bin_sumsq = 0.0;

  explicit PoolMoments(std::size_t dim = 0) : pool_sum(dim, 0.0), bin_sum(dim, 0.0) {}

  /// Direct sums over explicit id sets. Throws UnknownId.
  static PoolMoments from_sets(const FeatureTable& features, std::span<const std::size_t> bin,
                               std::span<const std::size_t> pool);

  /// Moves one item's contribution from the pool to the bin.
  void move_to_bin(std::span<const float> feature);
  /// Starts a new (empty) bin; the pool keeps what it has.
  void reset_bin();
};

/// P(x) = sum_{p in bin} |f(p)-f(x)|^2 - sum_{p in pool} |f(p)-f(x)|^2 by
/// direct double loop. The candidate must be in the pool (its own term is 0).
/// Throws UnknownId when an id is out of range or the candidate is not in pool.
double naive_gain(std::size_t candidate, std::span<const std::size_t> current_bin,
                  std::span<const std::size_t> pool, const FeatureTable& features);

/// Same gain from the moments: A_S(x) - A_R(x), with
/// A(x) = Q - 2<m, f(x)> + n |f(x)|^2. Throws UnknownId.
double fast_gain(std::size_t candidate, const PoolMoments& moments, const FeatureTable& features);

enum class Execution { Parallel, Serial };

/// Bin size used by generate_bins: ceil(M / m).
std::size_t bin_capacity(std::size_t items, std::size_t bins);

/// Greedy GraphCut partition into m disjoint bins of K = ceil(M/m) items
/// (the last bin takes the remainder). Each step moves the pool item with
/// the largest gain into the current bin; ties go to the smallest id.
/// Deterministic, and identical for every thread count. Throws InvalidBinCount.
std::vector<Bin> generate_bins(const FeatureTable& features, std::size_t m,
                               Execution execution = Execution::Parallel);

/// Checks disjointness, coverage and the K/remainder sizes. Throws
/// InvariantViolation naming the first problem found.
void validate_partition(std::span<const Bin> bins, std::size_t items);

/// {"m": int, "K": int, "bins": [[id, ...], ...]}, selection order preserved.
std::string bins_to_json(std::span<const Bin> bins, std::size_t items);
std::vector<Bin> bins_from_json(const std::string& text);

}  // namespace adq
