// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "adq/bins.hpp"

/// Serial reference paths kept for verification and benchmarking. They are
/// deliberately slow and never used by the pipeline.
namespace adq::reference {

/// Greedy bin generation where every candidate is scored by naive_gain over
/// explicit id sets: O(M^2 d) per step. Same K, remainder and tie-break
/// rules as generate_bins.
std::vector<Bin> generate_bins_naive(const FeatureTable& features, std::size_t m);

}  // namespace adq::reference
