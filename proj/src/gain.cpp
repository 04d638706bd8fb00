// SPDX-License-Identifier: Apache-2.0
#include <algorithm>

#include "adq/bins.hpp"
#include "adq/error.hpp"

namespace adq {

namespace {

void check_id(std::size_t id, const FeatureTable& features) {
  if (id >= features.size()) {
    throw Error(Errc::UnknownId, "id " + std::to_string(id) + " not in [0, " + std::to_string(features.size()) + ")");
  }
}

double squared_distance(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = static_cast<double>(a[k]) - static_cast<double>(b[k]);
    acc += diff * diff;
  }
  return acc;
}

}  // namespace

PoolMoments PoolMoments::from_sets(const FeatureTable& features, std::span<const std::size_t> bin,
                                   std::span<const std::size_t> pool) {
  const std::size_t dim = features.dim();
  PoolMoments moments(dim);
  const auto accumulate = [&](std::span<const std::size_t> ids, std::vector<double>& sum, double& sumsq) {
    for (auto id : ids) {
      check_id(id, features);
      const auto f = features.row(id);
      for (std::size_t k = 0; k < dim; ++k) {
        sum[k] += f[k];
        sumsq += static_cast<double>(f[k]) * f[k];
      }
    }
  };
  accumulate(bin, moments.bin_sum, moments.bin_sumsq);
  accumulate(pool, moments.pool_sum, moments.pool_sumsq);
  moments.bin_count = bin.size();
  moments.pool_count = pool.size();
  return moments;
}

void PoolMoments::move_to_bin(std::span<const float> feature) {
  double norm2 = 0.0;
  for (std::size_t k = 0; k < feature.size(); ++k) {
    const double v = feature[k];
    pool_sum[k] -= v;
    bin_sum[k] += v;
    norm2 += v * v;
  }
  pool_sumsq -= norm2;
  bin_sumsq += norm2;
  --pool_count;
  ++bin_count;
}

void PoolMoments::reset_bin() {
  bin_count = 0;
  std::fill(bin_sum.begin(), bin_sum.end(), 0.0);
  bin_sumsq = 0.0;
}

double naive_gain(std::size_t candidate, std::span<const std::size_t> current_bin, std::span<const std::size_t> pool,
                  const FeatureTable& features) {
  check_id(candidate, features);
  if (std::find(pool.begin(), pool.end(), candidate) == pool.end()) {
    throw Error(Errc::UnknownId, "candidate " + std::to_string(candidate) + " is not in the pool");
  }
  const auto x = features.row(candidate);
  double to_bin = 0.0;
  for (auto p : current_bin) {
    check_id(p, features);
    to_bin += squared_distance(features.row(p), x);
  }
  double to_pool = 0.0;
  for (auto p : pool) {
    check_id(p, features);
    to_pool += squared_distance(features.row(p), x);
  }
  return to_bin - to_pool;
}

double fast_gain(std::size_t candidate, const PoolMoments& moments, const FeatureTable& features) {
  check_id(candidate, features);
  const auto x = features.row(candidate);
  double dot_bin = 0.0, dot_pool = 0.0, norm2 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double v = x[k];
    dot_bin += moments.bin_sum[k] * v;
    dot_pool += moments.pool_sum[k] * v;
    norm2 += v * v;
  }
  const double a_bin = moments.bin_count == 0
                           ? 0.0
                           : moments.bin_sumsq - 2.0 * dot_bin + static_cast<double>(moments.bin_count) * norm2;
  const double a_pool = moments.pool_sumsq - 2.0 * dot_pool + static_cast<double>(moments.pool_count) * norm2;
  return a_bin - a_pool;
}

}  // namespace adq
