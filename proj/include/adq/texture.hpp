// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "adq/bins.hpp"
#include "adq/dataset.hpp"

namespace adq {

/// Square grayscale tile with intensities in [0, 1].
class Patch {
 public:
  /// Throws InvalidArgument unless pixels holds side*side finite values in [0,1].
  Patch(std::size_t side, std::vector<double> pixels, std::size_t source = 0, std::size_t x = 0,
        std::size_t y = 0);

  std::size_t side() const noexcept { return side_; }
  double at(std::size_t row, std::size_t col) const { return pixels_[row * side_ + col]; }
  std::span<const double> pixels() const noexcept { return pixels_; }
  std::size_t source() const noexcept { return source_; }
  /// Top-left pixel of the patch in its source image.
  std::size_t x() const noexcept { return x_; }
  std::size_t y() const noexcept { return y_; }

 private:
  std::size_t side_;
  std::vector<double> pixels_;
  std::size_t source_;
  std::size_t x_;
  std::size_t y_;
};

/// Luma (0.299, 0.587, 0.114) for 3+ channels, the first channel otherwise;
/// scaled to [0, 1]. Row-major H x W.
std::vector<double> grayscale(const ImageView& image);

/// Non-overlapping side x side tiles in row-major order; right and bottom
/// remainders are dropped. Throws PatchTooLarge, or InvalidArgument for side < 2.
std::vector<Patch> extract_patches(const ImageView& image, std::size_t side, std::size_t source = 0);

/// sqrt(Gx^2 + Gy^2) from 3x3 Sobel responses with clamp-to-edge borders.
std::vector<double> gradient_magnitude(const Patch& patch);

/// Mean gradient magnitude over the patch.
double patch_texture_level(const Patch& patch);

struct RepScore {
  std::size_t bin = 0;
  double value = 0.0;
  bool proxy = false;  // true when computed from features instead of pixels
};

/// Mean texture level over every patch of every member image. Per-image work
/// may run in parallel; the total uses pairwise summation in member order, so
/// the result is independent of the thread count. Throws MissingImage(id).
RepScore bin_representativeness(const Bin& bin, const ImageTable& images, std::size_t side,
                                Execution execution = Execution::Parallel);

/// Feature-only stand-in: negated mean distance of members to the centroid.
RepScore proxy_representativeness(const Bin& bin, const FeatureTable& features, std::span<const double> centroid);

std::vector<double> feature_centroid(const FeatureTable& features);

}  // namespace adq
