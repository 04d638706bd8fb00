// SPDX-License-Identifier: Apache-2.0
#pragma once

// Independent re-implementations used as test oracles. Nothing here calls
// into the library kernels it checks.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "adq/dataset.hpp"
#include "adq/rng.hpp"

namespace oracle {

// Sum over the bin minus sum over the pool of squared distances to x.
inline double graphcut_gain(const std::vector<std::vector<double>>& points, std::size_t x,
                            const std::vector<std::size_t>& bin, const std::vector<std::size_t>& pool) {
  auto dist2 = [&](std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t k = 0; k < points[a].size(); ++k) {
      const double d = points[a][k] - points[b][k];
      s += d * d;
    }
    return s;
  };
  double gain = 0.0;
  for (auto p : bin) gain += dist2(p, x);
  for (auto p : pool) gain -= dist2(p, x);
  return gain;
}

inline std::vector<std::vector<double>> rows_of(const adq::FeatureTable& t) {
  std::vector<std::vector<double>> rows(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) rows[i].assign(t.row(i).begin(), t.row(i).end());
  return rows;
}

// Plain 3x3 Sobel with clamp-to-edge, written as a textbook double loop.
inline std::vector<double> sobel_magnitude(const std::vector<double>& img, std::size_t side) {
  const int gx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  const int gy[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
  const int n = static_cast<int>(side);
  std::vector<double> out(side * side);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      double sx = 0.0, sy = 0.0;
      for (int i = -1; i <= 1; ++i) {
        for (int j = -1; j <= 1; ++j) {
          const int rr = std::clamp(r + i, 0, n - 1);
          const int cc = std::clamp(c + j, 0, n - 1);
          const double v = img[rr * n + cc];
          sx += gx[i + 1][j + 1] * v;
          sy += gy[i + 1][j + 1] * v;
        }
      }
      out[r * n + c] = std::sqrt(sx * sx + sy * sy);
    }
  }
  return out;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Projection of one image, regenerating each matrix row from its substream.
inline std::vector<double> project(std::span<const std::uint8_t> pixels, std::size_t out_dim, std::uint64_t seed) {
  const std::size_t n = pixels.size();
  double mu = 0.0;
  for (auto p : pixels) mu += p;
  mu /= static_cast<double>(n);
  std::vector<double> out(out_dim, 0.0);
  for (std::size_t r = 0; r < out_dim; ++r) {
    adq::rng::Philox gen(seed, adq::rng::substream(adq::rng::Stream::Featurize, r));
    for (std::size_t k = 0; k < n; ++k) out[r] += gen.normal() / std::sqrt(static_cast<double>(n)) * (pixels[k] - mu);
  }
  return out;
}

inline adq::FeatureTable random_table(std::size_t rows, std::size_t dim, std::uint64_t seed, double scale = 1.0) {
  adq::rng::Philox gen(seed, 99);
  std::vector<float> values(rows * dim);
  for (auto& v : values) v = static_cast<float>(scale * gen.normal());
  return adq::FeatureTable(rows, dim, std::move(values));
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() / ("adq_" + tag + "_" + std::to_string(stamp));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace oracle
