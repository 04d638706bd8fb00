// SPDX-License-Identifier: Apache-2.0
#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "adq/dataset.hpp"
#include "adq/error.hpp"
#include "json.hpp"

namespace adq {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "containers assume a little-endian host");

FeatureTable::FeatureTable(std::size_t rows, std::size_t dim, std::vector<float> values,
                           std::vector<std::int32_t> labels)
    : rows_(rows), dim_(dim), values_(std::move(values)) {
  if (rows == 0 || dim == 0) throw Error(Errc::InvalidArgument, "feature table needs M >= 1 and d >= 1");
  if (values_.size() != rows * dim) {
    throw Error(Errc::InvalidArgument, "feature buffer holds " + std::to_string(values_.size()) +
                                           " values, expected M*d = " + std::to_string(rows * dim));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw Error(Errc::NonFiniteValue, "row " + std::to_string(i / dim) + " column " + std::to_string(i % dim));
    }
  }
  set_labels(std::move(labels));
}

void FeatureTable::set_labels(std::vector<std::int32_t> labels) {
  if (!labels.empty() && labels.size() != rows_) {
    throw Error(Errc::InvalidArgument, "label column has " + std::to_string(labels.size()) + " entries for " +
                                           std::to_string(rows_) + " rows");
  }
  labels_ = std::move(labels);
}

ImageTable::ImageTable(std::size_t count, std::size_t width, std::size_t height, std::size_t channels,
                       std::vector<std::uint8_t> pixels)
    : count_(count), width_(width), height_(height), channels_(channels), pixels_(std::move(pixels)) {
  if (count == 0 || width == 0 || height == 0 || channels == 0) {
    throw Error(Errc::InvalidArgument, "image table dimensions must be positive");
  }
  if (pixels_.size() != count * width * height * channels) {
    throw Error(Errc::InvalidArgument, "pixel buffer size does not match count*W*H*C");
  }
}

namespace {

std::vector<char> read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Reader {
 public:
  Reader(const std::vector<char>& bytes, const fs::path& path) : bytes_(bytes), path_(path) {}

  template <typename T>
  T get(const char* field) {
    need(sizeof(T), field);
    T value;
    std::memcpy(&value, bytes_.data() + offset_, sizeof(T));
    offset_ += sizeof(T);
    return value;
  }

  void need(std::size_t n, const char* field) const {
    if (bytes_.size() - offset_ < n) {
      throw Error(Errc::TruncatedFile, path_.string() + ": " + field + " at offset " + std::to_string(offset_) +
                                           " needs " + std::to_string(n) + " bytes, " +
                                           std::to_string(bytes_.size() - offset_) + " remain");
    }
  }

  void expect_magic(const char (&magic)[5]) {
    need(4, "magic");
    if (std::memcmp(bytes_.data(), magic, 4) != 0) {
      throw Error(Errc::BadMagic, path_.string() + ": expected \"" + magic + "\" at offset 0");
    }
    offset_ = 4;
    const auto version = get<std::uint32_t>("version");
    if (version != kFormatVersion) {
      throw Error(Errc::BadMagic, path_.string() + ": unsupported version " + std::to_string(version));
    }
  }

  const char* cursor() const { return bytes_.data() + offset_; }
  std::size_t offset() const { return offset_; }
  std::size_t remaining() const { return bytes_.size() - offset_; }

 private:
  const std::vector<char>& bytes_;
  const fs::path& path_;
  std::size_t offset_ = 0;
};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

std::ofstream open_out(const fs::path& path) {
  if (path.empty()) throw Error(Errc::IoFailure, "empty output path");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

}  // namespace

FeatureTable load_features(const fs::path& path) {
  const auto bytes = read_all(path);
  Reader reader(bytes, path);
  reader.expect_magic("ADQF");
  const auto rows = reader.get<std::uint64_t>("M");
  const auto dim = reader.get<std::uint32_t>("d");
  if (rows == 0 || dim == 0) throw Error(Errc::InvalidArgument, path.string() + ": M and d must be positive");

  const std::size_t row_bytes = std::size_t{dim} * sizeof(float);
  const std::size_t available_rows = reader.remaining() / row_bytes;
  if (available_rows < rows) {
    throw Error(Errc::TruncatedFile, path.string() + ": data ends inside row " + std::to_string(available_rows) +
                                         " (offset " +
                                         std::to_string(reader.offset() + available_rows * row_bytes) + ")");
  }
  if (reader.remaining() != rows * row_bytes) {
    throw Error(Errc::IoFailure, path.string() + ": trailing bytes after row data");
  }
  std::vector<float> values(rows * dim);
  std::memcpy(values.data(), reader.cursor(), rows * row_bytes);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(Errc::NonFiniteValue, path.string() + ": row " + std::to_string(i / dim) + " column " +
                                            std::to_string(i % dim));
    }
  }
  return FeatureTable(rows, dim, std::move(values));
}

void write_features(const FeatureTable& table, const fs::path& path) {
  auto out = open_out(path);
  out.write("ADQF", 4);
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint64_t>(out, table.size());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(table.dim()));
  const auto values = table.values();
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  finish(out, path);
}

ImageTable load_images(const fs::path& path) {
  const auto bytes = read_all(path);
  Reader reader(bytes, path);
  reader.expect_magic("ADQI");
  const auto count = reader.get<std::uint64_t>("count");
  const auto width = reader.get<std::uint32_t>("W");
  const auto height = reader.get<std::uint32_t>("H");
  const auto channels = reader.get<std::uint32_t>("C");
  const std::size_t total = count * width * height * channels;
  reader.need(total, "pixel data");
  if (reader.remaining() != total) throw Error(Errc::IoFailure, path.string() + ": trailing bytes after pixel data");
  std::vector<std::uint8_t> pixels(total);
  std::memcpy(pixels.data(), reader.cursor(), total);
  return ImageTable(count, width, height, channels, std::move(pixels));
}

void write_images(const ImageTable& table, const fs::path& path) {
  auto out = open_out(path);
  out.write("ADQI", 4);
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint64_t>(out, table.size());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(table.width()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(table.height()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(table.channels()));
  const auto pixels = table.pixels();
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  finish(out, path);
}

namespace {

// Next whitespace-delimited PNM header token, skipping '#' comments.
std::string pnm_token(std::istream& in) {
  std::string token;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  return token;
}

}  // namespace

ImageTable import_pnm(std::span<const fs::path> paths) {
  if (paths.empty()) throw Error(Errc::EmptyInput, "no PNM files given");
  std::size_t width = 0, height = 0, channels = 0;
  std::vector<std::uint8_t> pixels;
  for (const auto& path : paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
    const auto magic = pnm_token(in);
    std::size_t c;
    if (magic == "P5") {
      c = 1;
    } else if (magic == "P6") {
      c = 3;
    } else {
      throw Error(Errc::BadMagic, path.string() + ": expected P5 or P6, got \"" + magic + "\"");
    }
    std::size_t w, h, maxval;
    try {
      w = std::stoul(pnm_token(in));
      h = std::stoul(pnm_token(in));
      maxval = std::stoul(pnm_token(in));
    } catch (const std::exception&) {
      throw Error(Errc::TruncatedFile, path.string() + ": malformed PNM header");
    }
    if (maxval == 0 || maxval > 255) throw Error(Errc::InvalidArgument, path.string() + ": only 8-bit PNM supported");
    if (pixels.empty()) {
      width = w;
      height = h;
      channels = c;
    } else if (w != width || h != height || c != channels) {
      throw Error(Errc::InvalidArgument, path.string() + ": shape differs from the first image");
    }
    const std::size_t n = w * h * c;
    const std::size_t start = pixels.size();
    pixels.resize(start + n);
    in.read(reinterpret_cast<char*>(pixels.data() + start), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
      throw Error(Errc::TruncatedFile, path.string() + ": pixel data ends after " + std::to_string(in.gcount()) +
                                           " of " + std::to_string(n) + " bytes");
    }
    if (maxval != 255) {
      for (std::size_t i = start; i < pixels.size(); ++i) {
        pixels[i] = static_cast<std::uint8_t>((pixels[i] * 255u + maxval / 2) / maxval);
      }
    }
  }
  return ImageTable(paths.size(), width, height, channels, std::move(pixels));
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::IoFailure, "sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xF]);
  }
  return hex;
}

std::string sha256_file(const fs::path& path) {
  const auto bytes = read_all(path);
  return sha256_hex({bytes.data(), bytes.size()});
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open manifest " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, path.string() + ": " + e.what());
  }
  const auto base = path.parent_path();
  const auto resolve = [&](const std::string& p) {
    fs::path candidate(p);
    return candidate.is_absolute() ? candidate : base / candidate;
  };
  DatasetManifest manifest;
  try {
    manifest.feature_path = resolve(doc.at("feature_path").get<std::string>());
    if (doc.contains("image_path") && !doc["image_path"].is_null()) {
      manifest.image_path = resolve(doc["image_path"].get<std::string>());
    }
    manifest.labels = doc.value("labels", std::vector<std::int32_t>{});
    manifest.sha256 = doc.at("sha256").get<std::string>();
    if (doc.contains("featurizer")) {
      const auto& f = doc["featurizer"];
      manifest.featurizer.mode = f.value("mode", std::string("external"));
      manifest.featurizer.out_dim = f.value("out_dim", std::size_t{0});
      manifest.featurizer.seed = f.value("seed", std::uint64_t{0});
    }
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, path.string() + ": " + e.what());
  }
  return manifest;
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  const auto base = path.parent_path();
  const auto relative = [&](const fs::path& p) {
    const auto rel = fs::relative(p, base.empty() ? fs::path(".") : base);
    return rel.empty() ? p.string() : rel.generic_string();
  };
  json doc;
  doc["feature_path"] = relative(manifest.feature_path);
  doc["image_path"] = manifest.image_path ? json(relative(*manifest.image_path)) : json(nullptr);
  doc["labels"] = manifest.labels;
  doc["sha256"] = manifest.sha256;
  doc["featurizer"] = {{"mode", manifest.featurizer.mode},
                       {"out_dim", manifest.featurizer.out_dim},
                       {"seed", manifest.featurizer.seed}};
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
  finish(out, path);
}

Dataset load_dataset(const fs::path& manifest_path) {
  const auto manifest = load_manifest(manifest_path);
  const auto digest = sha256_file(manifest.feature_path);
  if (digest != manifest.sha256) {
    throw Error(Errc::ChecksumMismatch, manifest.feature_path.string() + " has sha256 " + digest +
                                            ", manifest records " + manifest.sha256);
  }
  Dataset dataset{load_features(manifest.feature_path), std::nullopt, manifest.featurizer};
  dataset.features.set_labels(manifest.labels);
  if (manifest.image_path) {
    dataset.images = load_images(*manifest.image_path);
    if (dataset.images->size() != dataset.features.size()) {
      throw Error(Errc::InvariantViolation, "image count " + std::to_string(dataset.images->size()) +
                                                " does not match feature rows " +
                                                std::to_string(dataset.features.size()));
    }
  }
  return dataset;
}

}  // namespace adq
