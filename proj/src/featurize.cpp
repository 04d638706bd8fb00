// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "adq/dataset.hpp"
#include "adq/error.hpp"
#include "adq/rng.hpp"

namespace adq {

RandomProjection::RandomProjection(std::size_t input_size, std::size_t out_dim, std::uint64_t seed)
    : input_size_(input_size), out_dim_(out_dim), matrix_(input_size * out_dim) {
  if (input_size == 0 || out_dim == 0) throw Error(Errc::InvalidArgument, "projection sizes must be positive");
  const double scale = 1.0 / std::sqrt(static_cast<double>(input_size));
  for (std::size_t r = 0; r < out_dim; ++r) {
    rng::Philox gen(seed, rng::substream(rng::Stream::Featurize, r));
    for (std::size_t k = 0; k < input_size; ++k) matrix_[r * input_size + k] = gen.normal() * scale;
  }
}

std::vector<float> RandomProjection::apply(std::span<const std::uint8_t> pixels) const {
  if (pixels.size() != input_size_) {
    throw Error(Errc::InvalidArgument, "image has " + std::to_string(pixels.size()) + " values, projection expects " +
                                           std::to_string(input_size_));
  }
  double sum = 0.0;
  for (auto v : pixels) sum += v;
  const double mean = sum / static_cast<double>(input_size_);
  std::vector<double> centered(input_size_);
  for (std::size_t k = 0; k < input_size_; ++k) centered[k] = pixels[k] - mean;

  std::vector<float> out(out_dim_);
  for (std::size_t r = 0; r < out_dim_; ++r) {
    const double* w = matrix_.data() + r * input_size_;
    double acc = 0.0;
    for (std::size_t k = 0; k < input_size_; ++k) acc += w[k] * centered[k];
    out[r] = static_cast<float>(acc);
  }
  return out;
}

FeatureTable fallback_featurize(const ImageTable& images, std::size_t out_dim, std::uint64_t seed) {
  if (out_dim == 0) throw Error(Errc::InvalidArgument, "out_dim must be >= 1");
  const RandomProjection projection(images.image_bytes(), out_dim, seed);
  const auto count = static_cast<std::ptrdiff_t>(images.size());
  std::vector<float> values(images.size() * out_dim);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto row = projection.apply(images.image(static_cast<std::size_t>(i)).pixels);
    std::copy(row.begin(), row.end(), values.begin() + i * static_cast<std::ptrdiff_t>(out_dim));
  }
  return FeatureTable(images.size(), out_dim, std::move(values));
}

FeatureTable gen_synthetic_mixture(std::size_t clusters, std::size_t per_cluster, std::size_t dim, double spread,
                                   std::uint64_t seed) {
  if (clusters == 0 || per_cluster == 0 || dim == 0) {
    throw Error(Errc::InvalidArgument, "clusters, per_cluster and dim must be >= 1");
  }
  if (!(spread > 0.0) || !std::isfinite(spread)) throw Error(Errc::InvalidArgument, "spread must be > 0");

  // Stream indices: [0, clusters) for centers, 2^32 + row for point noise.
  constexpr std::uint64_t kPointBase = std::uint64_t{1} << 32;
  std::vector<double> centers(clusters * dim);
  for (std::size_t c = 0; c < clusters; ++c) {
    rng::Philox gen(seed, rng::substream(rng::Stream::Synthetic, c));
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        centers[c * dim + k] = gen.normal();
        norm2 += centers[c * dim + k] * centers[c * dim + k];
      }
    } while (norm2 == 0.0);
    const double scale = 10.0 * spread / std::sqrt(norm2);
    for (std::size_t k = 0; k < dim; ++k) centers[c * dim + k] *= scale;
  }

  const std::size_t rows = clusters * per_cluster;
  std::vector<float> values(rows * dim);
  std::vector<std::int32_t> labels(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t c = i / per_cluster;
    labels[i] = static_cast<std::int32_t>(c);
    rng::Philox gen(seed, rng::substream(rng::Stream::Synthetic, kPointBase + i));
    for (std::size_t k = 0; k < dim; ++k) {
      values[i * dim + k] = static_cast<float>(centers[c * dim + k] + spread * gen.normal());
    }
  }
  return FeatureTable(rows, dim, std::move(values), std::move(labels));
}

}  // namespace adq
