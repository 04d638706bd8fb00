// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <limits>

#include "adq/bins.hpp"
#include "adq/error.hpp"
#include "json.hpp"

namespace adq {

std::size_t bin_capacity(std::size_t items, std::size_t bins) {
  if (bins == 0) throw Error(Errc::InvalidBinCount, "m must be >= 1");
  return (items + bins - 1) / bins;
}

namespace {

struct Candidate {
  double gain = -std::numeric_limits<double>::infinity();
  std::size_t id = std::numeric_limits<std::size_t>::max();
  std::size_t slot = 0;

  // Max gain, then min id. Any merge order yields the same winner.
  bool beats(const Candidate& other) const {
    return gain > other.gain || (gain == other.gain && id < other.id);
  }
};

// Remaining items as raw float features in tiles of kTile rows, each tile
// stored column-major so the gain scan vectorizes across rows. Values are
// centered on the global mean in double as they are read; gains are
// translation invariant and centering keeps the moments well conditioned.
constexpr std::size_t kTile = 32;

class Pool {
 public:
  explicit Pool(const FeatureTable& features) : dim_(features.dim()), mean_(features.dim(), 0.0) {
    const std::size_t n = features.size();
    for (std::size_t i = 0; i < n; ++i) {
      const auto f = features.row(i);
      for (std::size_t k = 0; k < dim_; ++k) mean_[k] += f[k];
    }
    for (auto& v : mean_) v /= static_cast<double>(n);

    ids_.resize(n);
    norms_.resize(n);
    tiles_.assign((n + kTile - 1) / kTile * kTile * dim_, 0.0f);
    for (std::size_t i = 0; i < n; ++i) {
      ids_[i] = i;
      const auto f = features.row(i);
      double norm2 = 0.0;
      for (std::size_t k = 0; k < dim_; ++k) {
        at(i, k) = f[k];
        const double v = centered(f[k], k);
        norm2 += v * v;
      }
      norms_[i] = norm2;
    }
  }

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  std::size_t tiles() const { return (size() + kTile - 1) / kTile; }
  std::size_t id(std::size_t slot) const { return ids_[slot]; }
  double norm2(std::size_t slot) const { return norms_[slot]; }
  double centered(float v, std::size_t k) const { return static_cast<double>(v) - mean_[k]; }
  double value(std::size_t slot, std::size_t k) const { return centered(at(slot, k), k); }
  const float* tile(std::size_t t) const { return tiles_.data() + t * kTile * dim_; }
  const double* mean() const { return mean_.data(); }

  // Swap-remove; slot order is irrelevant because ties resolve on ids.
  void remove(std::size_t slot) {
    const std::size_t last = ids_.size() - 1;
    if (slot != last) {
      ids_[slot] = ids_[last];
      norms_[slot] = norms_[last];
      for (std::size_t k = 0; k < dim_; ++k) at(slot, k) = at(last, k);
    }
    for (std::size_t k = 0; k < dim_; ++k) at(last, k) = 0.0f;
    ids_.pop_back();
    norms_.pop_back();
  }

 private:
  float& at(std::size_t slot, std::size_t k) { return tiles_[(slot / kTile * dim_ + k) * kTile + slot % kTile]; }
  float at(std::size_t slot, std::size_t k) const { return tiles_[(slot / kTile * dim_ + k) * kTile + slot % kTile]; }

  std::size_t dim_;
  std::vector<double> mean_;
  std::vector<std::size_t> ids_;
  std::vector<float> tiles_;
  std::vector<double> norms_;
};

// Moments of the centered pool and of the bin under construction.
struct Moments {
  std::vector<double> pool_sum, bin_sum;
  double pool_sumsq = 0.0, bin_sumsq = 0.0;
  std::size_t pool_count = 0, bin_count = 0;

  // Recomputed from scratch at every bin start to stop drift.
  void start_bin(const Pool& pool) {
    const std::size_t dim = pool.dim();
    pool_sum.assign(dim, 0.0);
    bin_sum.assign(dim, 0.0);
    pool_sumsq = bin_sumsq = 0.0;
    for (std::size_t s = 0; s < pool.size(); ++s) {
      for (std::size_t k = 0; k < dim; ++k) pool_sum[k] += pool.value(s, k);
      pool_sumsq += pool.norm2(s);
    }
    pool_count = pool.size();
    bin_count = 0;
  }

  void move(const Pool& pool, std::size_t slot) {
    for (std::size_t k = 0; k < pool.dim(); ++k) {
      const double v = pool.value(slot, k);
      pool_sum[k] -= v;
      bin_sum[k] += v;
    }
    pool_sumsq -= pool.norm2(slot);
    bin_sumsq += pool.norm2(slot);
    --pool_count;
    ++bin_count;
  }
};

// gain(x) = (Q_S - Q_R) - 2 <m_S - m_R, f(x)> + (|S| - |R|) |f(x)|^2
Candidate best_candidate(const Pool& pool, const Moments& moments, Execution execution) {
  const std::size_t dim = pool.dim();
  std::vector<double> direction(dim);
  for (std::size_t k = 0; k < dim; ++k) direction[k] = moments.bin_sum[k] - moments.pool_sum[k];
  const double offset = moments.bin_sumsq - moments.pool_sumsq;
  const double weight = static_cast<double>(moments.bin_count) - static_cast<double>(moments.pool_count);
  const double* dir = direction.data();
  const double* mean = pool.mean();
  const std::size_t count = pool.size();
  const auto tiles = static_cast<std::ptrdiff_t>(pool.tiles());

  Candidate best;
#pragma omp parallel if (execution == Execution::Parallel && count > 1024)
  {
    Candidate local;
#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t t = 0; t < tiles; ++t) {
      const float* tile = pool.tile(static_cast<std::size_t>(t));
      double dot[kTile] = {};
      for (std::size_t k = 0; k < dim; ++k) {
        const float* column = tile + k * kTile;
        const double d = dir[k];
        const double mu = mean[k];
#pragma omp simd
        for (std::size_t j = 0; j < kTile; ++j) dot[j] += d * (static_cast<double>(column[j]) - mu);
      }
      const std::size_t base = static_cast<std::size_t>(t) * kTile;
      const std::size_t rows = std::min(kTile, count - base);
      for (std::size_t j = 0; j < rows; ++j) {
        const std::size_t s = base + j;
        const Candidate c{offset - 2.0 * dot[j] + weight * pool.norm2(s), pool.id(s), s};
        if (c.beats(local)) local = c;
      }
    }
#pragma omp critical(adq_argmax)
    if (local.beats(best)) best = local;
  }
  return best;
}

}  // namespace

std::vector<Bin> generate_bins(const FeatureTable& features, std::size_t m, Execution execution) {
  const std::size_t items = features.size();
  if (m == 0 || m > items) {
    throw Error(Errc::InvalidBinCount, "m = " + std::to_string(m) + " must lie in [1, " + std::to_string(items) + "]");
  }
  const std::size_t capacity = bin_capacity(items, m);
  if ((m - 1) * capacity >= items) {
    throw Error(Errc::InvalidBinCount, "m = " + std::to_string(m) + " leaves the final bin empty for M = " +
                                           std::to_string(items) + " (K = " + std::to_string(capacity) + ")");
  }

  Pool pool(features);
  Moments moments;
  std::vector<Bin> bins(m);
  for (std::size_t n = 0; n < m; ++n) {
    bins[n].index = n + 1;
    const std::size_t target = n + 1 < m ? capacity : pool.size();
    bins[n].members.reserve(target);
    moments.start_bin(pool);
    for (std::size_t k = 0; k < target; ++k) {
      const Candidate pick = best_candidate(pool, moments, execution);
      bins[n].members.push_back(pick.id);
      moments.move(pool, pick.slot);
      pool.remove(pick.slot);
    }
  }
  return bins;
}

void validate_partition(std::span<const Bin> bins, std::size_t items) {
  if (bins.empty()) throw Error(Errc::InvariantViolation, "no bins");
  const std::size_t capacity = bin_capacity(items, bins.size());
  std::vector<bool> seen(items, false);
  std::size_t total = 0;
  for (std::size_t n = 0; n < bins.size(); ++n) {
    const auto& bin = bins[n];
    const bool last = n + 1 == bins.size();
    const std::size_t expected = last ? items - (bins.size() - 1) * capacity : capacity;
    if (bin.size() != expected) {
      throw Error(Errc::InvariantViolation, "bin " + std::to_string(n + 1) + " has " + std::to_string(bin.size()) +
                                                " members, expected " + std::to_string(expected));
    }
    for (auto id : bin.members) {
      if (id >= items) throw Error(Errc::InvariantViolation, "bin member " + std::to_string(id) + " out of range");
      if (seen[id]) throw Error(Errc::InvariantViolation, "id " + std::to_string(id) + " appears twice");
      seen[id] = true;
    }
    total += bin.size();
  }
  if (total != items) throw Error(Errc::InvariantViolation, "bins cover " + std::to_string(total) + " of " +
                                                                std::to_string(items) + " items");
}

std::string bins_to_json(std::span<const Bin> bins, std::size_t items) {
  nlohmann::json doc;
  doc["m"] = bins.size();
  doc["K"] = bin_capacity(items, bins.size());
  auto& list = doc["bins"] = nlohmann::json::array();
  for (const auto& bin : bins) list.push_back(bin.members);
  return doc.dump() + "\n";
}

std::vector<Bin> bins_from_json(const std::string& text) {
  std::vector<Bin> bins;
  try {
    const auto doc = nlohmann::json::parse(text);
    const auto m = doc.at("m").get<std::size_t>();
    const auto& list = doc.at("bins");
    if (!list.is_array() || list.size() != m) throw Error(Errc::ConfigError, "bins array length differs from m");
    for (std::size_t n = 0; n < m; ++n) {
      bins.push_back(Bin{n + 1, list[n].get<std::vector<std::size_t>>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigError, std::string("bins JSON: ") + e.what());
  }
  return bins;
}

}  // namespace adq
