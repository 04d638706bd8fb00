// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>

namespace adq::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., SC'11). Pure function of
/// (counter, key); this is the only source of randomness in the library.
Counter philox4x32_10(Counter ctr, Key key);

/// Named substreams. Every consumer of randomness derives its generator from
/// the root seed plus one of these tags, so a single seed reproduces a run.
enum class Stream : std::uint16_t {
  Featurize = 1,
  Synthetic = 2,
  DiscriminatorInit = 3,
  Augment = 4,
  Draw = 5,
  DiversitySubsample = 6,
};

constexpr std::uint64_t substream(Stream tag, std::uint64_t index) {
  return (static_cast<std::uint64_t>(tag) << 48) | (index & 0xFFFFFFFFFFFFull);
}

/// A 64-bit child seed for a named purpose, e.g. one discriminator per bin.
std::uint64_t derive_seed(std::uint64_t root, Stream tag, std::uint64_t index);

/// Sequential view over one Philox stream. The 128-bit counter is split into
/// a 64-bit block index (low words) and a 64-bit stream id (high words); the
/// seed is the key.
class Philox {
 public:
  Philox(std::uint64_t seed, std::uint64_t stream);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller; portable across standard libraries.
  double normal();
  /// Uniform integer in [0, bound), unbiased. bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

 private:
  void refill();

  Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Counter buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace adq::rng
