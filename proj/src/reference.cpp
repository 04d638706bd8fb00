// SPDX-License-Identifier: Apache-2.0
#include "adq/reference.hpp"

#include <algorithm>
#include <limits>

#include "adq/error.hpp"

namespace adq::reference {

std::vector<Bin> generate_bins_naive(const FeatureTable& features, std::size_t m) {
  const std::size_t items = features.size();
  if (m == 0 || m > items) throw Error(Errc::InvalidBinCount, "m out of range");
  const std::size_t capacity = bin_capacity(items, m);
  if ((m - 1) * capacity >= items) throw Error(Errc::InvalidBinCount, "final bin would be empty");

  std::vector<std::size_t> pool(items);
  for (std::size_t i = 0; i < items; ++i) pool[i] = i;

  std::vector<Bin> bins(m);
  for (std::size_t n = 0; n < m; ++n) {
    bins[n].index = n + 1;
    const std::size_t target = n + 1 < m ? capacity : pool.size();
    auto& members = bins[n].members;
    while (members.size() < target) {
      double best_gain = -std::numeric_limits<double>::infinity();
      std::size_t best = std::numeric_limits<std::size_t>::max();
      // pool is kept sorted, so strict > already prefers the smaller id.
      for (auto candidate : pool) {
        const double gain = naive_gain(candidate, members, pool, features);
        if (gain > best_gain) {
          best_gain = gain;
          best = candidate;
        }
      }
      members.push_back(best);
      pool.erase(std::lower_bound(pool.begin(), pool.end(), best));
    }
  }
  return bins;
}

}  // namespace adq::reference
