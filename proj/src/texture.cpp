// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "adq/error.hpp"
#include "adq/numeric.hpp"
#include "adq/texture.hpp"

namespace adq {

Patch::Patch(std::size_t side, std::vector<double> pixels, std::size_t source, std::size_t x, std::size_t y)
    : side_(side), pixels_(std::move(pixels)), source_(source), x_(x), y_(y) {
  if (side == 0 || pixels_.size() != side * side) {
    throw Error(Errc::InvalidArgument, "patch needs side*side pixels");
  }
  for (double v : pixels_) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::InvalidArgument, "patch intensity outside [0, 1]");
  }
}

std::vector<double> grayscale(const ImageView& image) {
  std::vector<double> gray(image.width * image.height);
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      double v;
      if (image.channels >= 3) {
        v = 0.299 * image.at(x, y, 0) + 0.587 * image.at(x, y, 1) + 0.114 * image.at(x, y, 2);
      } else {
        v = image.at(x, y, 0);
      }
      gray[y * image.width + x] = std::clamp(v / 255.0, 0.0, 1.0);
    }
  }
  return gray;
}

std::vector<Patch> extract_patches(const ImageView& image, std::size_t side, std::size_t source) {
  if (side < 2) throw Error(Errc::InvalidArgument, "patch side must be >= 2");
  if (side > std::min(image.width, image.height)) {
    throw Error(Errc::PatchTooLarge, "L = " + std::to_string(side) + " exceeds image " + std::to_string(image.width) +
                                         "x" + std::to_string(image.height));
  }
  const auto gray = grayscale(image);
  const std::size_t across = image.width / side;
  const std::size_t down = image.height / side;
  std::vector<Patch> patches;
  patches.reserve(across * down);
  for (std::size_t py = 0; py < down; ++py) {
    for (std::size_t px = 0; px < across; ++px) {
      std::vector<double> pixels(side * side);
      for (std::size_t r = 0; r < side; ++r) {
        const double* src = gray.data() + (py * side + r) * image.width + px * side;
        std::copy_n(src, side, pixels.begin() + static_cast<std::ptrdiff_t>(r * side));
      }
      patches.emplace_back(side, std::move(pixels), source, px * side, py * side);
    }
  }
  return patches;
}

std::vector<double> gradient_magnitude(const Patch& patch) {
  const std::size_t n = patch.side();
  std::vector<double> out(n * n);
  // Mirrored taps are differenced first, so a constant neighbourhood gives
  // exactly 0 and transposing the patch swaps gx and gy bit for bit.
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t up = r == 0 ? 0 : r - 1;
    const std::size_t down = r + 1 == n ? r : r + 1;
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t left = c == 0 ? 0 : c - 1;
      const std::size_t right = c + 1 == n ? c : c + 1;
      const double gx = (patch.at(up, right) - patch.at(up, left)) + 2.0 * (patch.at(r, right) - patch.at(r, left)) +
                        (patch.at(down, right) - patch.at(down, left));
      const double gy = (patch.at(down, left) - patch.at(up, left)) + 2.0 * (patch.at(down, c) - patch.at(up, c)) +
                        (patch.at(down, right) - patch.at(up, right));
      out[r * n + c] = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

double patch_texture_level(const Patch& patch) {
  const auto magnitude = gradient_magnitude(patch);
  double sum = 0.0;
  for (double v : magnitude) sum += v;
  return sum / static_cast<double>(magnitude.size());
}

RepScore bin_representativeness(const Bin& bin, const ImageTable& images, std::size_t side, Execution execution) {
  if (bin.members.empty()) throw Error(Errc::EmptyInput, "bin " + std::to_string(bin.index) + " is empty");
  for (auto id : bin.members) {
    if (id >= images.size()) throw Error(Errc::MissingImage, "no image for id " + std::to_string(id));
  }
  if (side < 2) throw Error(Errc::InvalidArgument, "patch side must be >= 2");
  if (side > std::min(images.width(), images.height())) {
    throw Error(Errc::PatchTooLarge, "L = " + std::to_string(side) + " exceeds image size");
  }
  const std::size_t per_image = (images.width() / side) * (images.height() / side);
  std::vector<double> levels(bin.size() * per_image);
  const auto count = static_cast<std::ptrdiff_t>(bin.size());
#pragma omp parallel for schedule(dynamic, 16) if (execution == Execution::Parallel)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto id = bin.members[static_cast<std::size_t>(i)];
    const auto patches = extract_patches(images.image(id), side, id);
    for (std::size_t p = 0; p < patches.size(); ++p) {
      levels[static_cast<std::size_t>(i) * per_image + p] = patch_texture_level(patches[p]);
    }
  }
  return {bin.index, pairwise_sum(levels) / static_cast<double>(levels.size()), false};
}

std::vector<double> feature_centroid(const FeatureTable& features) {
  std::vector<double> centroid(features.dim(), 0.0);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto f = features.row(i);
    for (std::size_t k = 0; k < f.size(); ++k) centroid[k] += f[k];
  }
  for (auto& v : centroid) v /= static_cast<double>(features.size());
  return centroid;
}

RepScore proxy_representativeness(const Bin& bin, const FeatureTable& features, std::span<const double> centroid) {
  if (bin.members.empty()) throw Error(Errc::EmptyInput, "bin " + std::to_string(bin.index) + " is empty");
  if (centroid.size() != features.dim()) throw Error(Errc::LengthMismatch, "centroid dimension");
  std::vector<double> distances(bin.size());
  for (std::size_t i = 0; i < bin.size(); ++i) {
    const auto id = bin.members[i];
    if (id >= features.size()) throw Error(Errc::UnknownId, "id " + std::to_string(id));
    const auto f = features.row(id);
    double d2 = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
      const double diff = f[k] - centroid[k];
      d2 += diff * diff;
    }
    distances[i] = std::sqrt(d2);
  }
  return {bin.index, -pairwise_sum(distances) / static_cast<double>(distances.size()), true};
}

}  // namespace adq
