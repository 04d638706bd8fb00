// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace adq {

/// The dataset as M rows of d-dimensional float features. Row index is the
/// item id, so ids are dense in [0, M) by construction.
class FeatureTable {
 public:
  FeatureTable() = default;
  /// Throws InvalidArgument on shape mismatch and NonFiniteValue(row) on NaN/Inf.
  FeatureTable(std::size_t rows, std::size_t dim, std::vector<float> values,
               std::vector<std::int32_t> labels = {});

  std::size_t size() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const float> row(std::size_t id) const { return {values_.data() + id * dim_, dim_}; }
  std::span<const float> values() const noexcept { return values_; }
  const std::vector<std::int32_t>& labels() const noexcept { return labels_; }
  bool has_labels() const noexcept { return !labels_.empty(); }

  /// Replaces the label column; size must be 0 or M.
  void set_labels(std::vector<std::int32_t> labels);

  friend bool operator==(const FeatureTable&, const FeatureTable&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> values_;
  std::vector<std::int32_t> labels_;
};

/// Read-only view of one 8-bit image; layout is row-major (y, x, channel).
struct ImageView {
  std::span<const std::uint8_t> pixels;
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;

  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const {
    return pixels[(y * width + x) * channels + c];
  }
};

/// Images aligned with a FeatureTable: image i belongs to item id i.
class ImageTable {
 public:
  ImageTable() = default;
  ImageTable(std::size_t count, std::size_t width, std::size_t height, std::size_t channels,
             std::vector<std::uint8_t> pixels);

  std::size_t size() const noexcept { return count_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t image_bytes() const noexcept { return width_ * height_ * channels_; }
  ImageView image(std::size_t id) const {
    return {{pixels_.data() + id * image_bytes(), image_bytes()}, width_, height_, channels_};
  }
  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }

  friend bool operator==(const ImageTable&, const ImageTable&) = default;

 private:
  std::size_t count_ = 0;
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t channels_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// How the features in a manifest were produced. Only "projection" features
/// can be recomputed from augmented pixels.
struct FeaturizerRecord {
  std::string mode = "external";  // "external" | "projection"
  std::size_t out_dim = 0;
  std::uint64_t seed = 0;
};

struct DatasetManifest {
  std::filesystem::path feature_path;
  std::optional<std::filesystem::path> image_path;
  std::vector<std::int32_t> labels;
  std::string sha256;
  FeaturizerRecord featurizer;
};

/// A loaded dataset: features always, pixels when the manifest has them.
struct Dataset {
  FeatureTable features;
  std::optional<ImageTable> images;
  FeaturizerRecord featurizer;
};

// Binary containers (little-endian).
//   features: "ADQF" u32 version=1, u64 M, u32 d, M*d f32
//   images:   "ADQI" u32 version=1, u64 count, u32 W, u32 H, u32 C, count*W*H*C u8
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kFeatureHeaderBytes = 4 + 4 + 8 + 4;
inline constexpr std::size_t kImageHeaderBytes = 4 + 4 + 8 + 4 + 4 + 4;

FeatureTable load_features(const std::filesystem::path& path);
void write_features(const FeatureTable& table, const std::filesystem::path& path);
ImageTable load_images(const std::filesystem::path& path);
void write_images(const ImageTable& table, const std::filesystem::path& path);

/// 8-bit binary PGM (P5) or PPM (P6) import. All files must share a shape.
ImageTable import_pnm(std::span<const std::filesystem::path> paths);

std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view bytes);

/// Relative paths inside the manifest resolve against the manifest's directory.
DatasetManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
/// Loads everything the manifest references and verifies the checksum.
Dataset load_dataset(const std::filesystem::path& manifest_path);

/// Flatten, center per image, project with a seeded N(0,1)/sqrt(W*H*C) matrix.
FeatureTable fallback_featurize(const ImageTable& images, std::size_t out_dim, std::uint64_t seed);

/// The projection behind fallback_featurize, materialized once so augmented
/// views can be re-featurized cheaply. Only the element count of an image
/// matters, so rotated views project with the same matrix.
class RandomProjection {
 public:
  RandomProjection(std::size_t input_size, std::size_t out_dim, std::uint64_t seed);

  std::size_t input_size() const noexcept { return input_size_; }
  std::size_t out_dim() const noexcept { return out_dim_; }
  /// Entry (row, k) of the projection matrix.
  double weight(std::size_t row, std::size_t k) const { return matrix_[row * input_size_ + k]; }
  std::vector<float> apply(std::span<const std::uint8_t> pixels) const;

 private:
  std::size_t input_size_;
  std::size_t out_dim_;
  std::vector<double> matrix_;
};

/// Gaussian blobs with centers on a sphere of radius 10*spread.
FeatureTable gen_synthetic_mixture(std::size_t clusters, std::size_t per_cluster, std::size_t dim,
                                   double spread, std::uint64_t seed);

}  // namespace adq
