// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>

#include "adq/dataset.hpp"
#include "adq/error.hpp"
#include "doctest.h"
#include "oracles.hpp"

namespace fs = std::filesystem;
using adq::Errc;

namespace {

Errc error_of(auto&& fn) {
  try {
    fn();
  } catch (const adq::Error& e) {
    return e.code();
  }
  FAIL("expected adq::Error");
  return Errc::InvariantViolation;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

}  // namespace

TEST_CASE("feature file round trip") {
  oracle::TempDir dir("features");
  const adq::FeatureTable small(3, 2, {0, 0, 1, 0, 0, 1});
  adq::write_features(small, dir.path() / "s.adqf");
  const auto back = adq::load_features(dir.path() / "s.adqf");
  CHECK(back == small);
  CHECK(back.size() == 3);
  CHECK(back.dim() == 2);

  const auto big = oracle::random_table(10000, 64, 5);
  adq::write_features(big, dir.path() / "b.adqf");
  CHECK(fs::file_size(dir.path() / "b.adqf") == 20 + 10000ull * 64 * 4);
  CHECK(adq::load_features(dir.path() / "b.adqf") == big);
}

TEST_CASE("feature file errors") {
  oracle::TempDir dir("feature_errors");
  const auto path = dir.path() / "f.adqf";
  const auto table = oracle::random_table(10, 3, 1);
  adq::write_features(table, path);
  const auto bytes = slurp(path);

  spit(path, bytes.substr(0, bytes.size() - 6));
  CHECK(error_of([&] { adq::load_features(path); }) == Errc::TruncatedFile);

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  spit(path, bad_magic);
  CHECK(error_of([&] { adq::load_features(path); }) == Errc::BadMagic);

  std::string nan = bytes;
  const float q = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(nan.data() + adq::kFeatureHeaderBytes + (7 * 3 + 1) * 4, &q, 4);
  spit(path, nan);
  try {
    adq::load_features(path);
    FAIL("NaN accepted");
  } catch (const adq::Error& e) {
    CHECK(e.code() == Errc::NonFiniteValue);
    CHECK(std::string(e.what()).find("row 7") != std::string::npos);
  }

  spit(path, bytes + "xx");
  CHECK(error_of([&] { adq::load_features(path); }) == Errc::IoFailure);
  CHECK(error_of([&] { adq::write_features(table, ""); }) == Errc::IoFailure);
  CHECK(error_of([&] { adq::load_features(dir.path() / "missing.adqf"); }) == Errc::IoFailure);
}

TEST_CASE("feature table validation") {
  CHECK(error_of([] { adq::FeatureTable(2, 2, {1, 2, 3}); }) == Errc::InvalidArgument);
  CHECK(error_of([] { adq::FeatureTable(1, 1, {std::numeric_limits<float>::infinity()}); }) ==
        Errc::NonFiniteValue);
  adq::FeatureTable t(2, 1, {1, 2});
  CHECK_NOTHROW(t.set_labels({3, 4}));
  CHECK(error_of([&] { t.set_labels({1}); }) == Errc::InvalidArgument);
}

TEST_CASE("image file round trip and PNM import") {
  oracle::TempDir dir("images");
  std::vector<std::uint8_t> px(2 * 4 * 3 * 3);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<std::uint8_t>(i * 7);
  const adq::ImageTable images(2, 4, 3, 3, px);
  adq::write_images(images, dir.path() / "i.adqi");
  CHECK(fs::file_size(dir.path() / "i.adqi") == adq::kImageHeaderBytes + px.size());
  CHECK(adq::load_images(dir.path() / "i.adqi") == images);

  spit(dir.path() / "a.pgm", std::string("P5\n# comment\n2 2\n255\n") + std::string("\x01\x02\x03\x04", 4));
  spit(dir.path() / "b.pgm", std::string("P5 2 2 15\n") + std::string("\x0f\x00\x00\x0f", 4));
  const std::vector<fs::path> files{dir.path() / "a.pgm", dir.path() / "b.pgm"};
  const auto imported = adq::import_pnm(files);
  CHECK(imported.size() == 2);
  CHECK(imported.channels() == 1);
  CHECK(imported.image(0).at(1, 1, 0) == 4);
  CHECK(imported.image(1).at(0, 0, 0) == 255);

  spit(dir.path() / "c.pgm", "P2\n2 2\n255\n1 2 3 4\n");
  const std::vector<fs::path> ascii{dir.path() / "c.pgm"};
  CHECK(error_of([&] { adq::import_pnm(ascii); }) == Errc::BadMagic);
}

TEST_CASE("manifest checksum and relative paths") {
  oracle::TempDir dir("manifest");
  const auto table = oracle::random_table(5, 2, 3);
  adq::write_features(table, dir.path() / "f.adqf");
  adq::DatasetManifest m;
  m.feature_path = "f.adqf";
  m.labels = {0, 1, 0, 1, 0};
  m.sha256 = adq::sha256_file(dir.path() / "f.adqf");
  adq::write_manifest(m, dir.path() / "manifest.json");

  const auto ds = adq::load_dataset(dir.path() / "manifest.json");
  CHECK(ds.features.values().size() == 10);
  CHECK(ds.features.labels() == m.labels);
  CHECK_FALSE(ds.images.has_value());

  CHECK(adq::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");

  adq::write_features(oracle::random_table(5, 2, 4), dir.path() / "f.adqf");
  CHECK(error_of([&] { adq::load_dataset(dir.path() / "manifest.json"); }) == Errc::ChecksumMismatch);
}

TEST_CASE("fallback featurization") {
  const std::size_t w = 4, h = 4, c = 1;
  std::vector<std::uint8_t> px(3 * w * h * c, 77);
  for (std::size_t i = 0; i < w * h; ++i) {
    px[w * h + i] = static_cast<std::uint8_t>(i * 13);
    px[2 * w * h + i] = static_cast<std::uint8_t>(255 - i * 9);
  }
  const adq::ImageTable images(3, w, h, c, px);
  const auto a = adq::fallback_featurize(images, 8, 1);
  CHECK(a == adq::fallback_featurize(images, 8, 1));

  for (float v : a.row(0)) CHECK(v == 0.0f);

  for (std::size_t id : {1, 2}) {
    const auto expect = oracle::project(images.image(id).pixels, 8, 1);
    for (std::size_t k = 0; k < 8; ++k) CHECK(a.row(id)[k] == doctest::Approx(expect[k]).epsilon(1e-6));
  }
  bool distinct = false;
  for (std::size_t k = 0; k < 8; ++k) distinct |= a.row(1)[k] != a.row(2)[k];
  CHECK(distinct);
}

TEST_CASE("synthetic mixture") {
  const auto tight = adq::gen_synthetic_mixture(1, 5, 3, 1e-9, 2);
  for (std::size_t i = 1; i < 5; ++i)
    for (std::size_t k = 0; k < 3; ++k) CHECK(tight.row(i)[k] == doctest::Approx(tight.row(0)[k]).epsilon(1e-6));

  const auto t = adq::gen_synthetic_mixture(10, 100, 2, 1.0, 7);
  CHECK(t.size() == 1000);
  CHECK(std::set<std::int32_t>(t.labels().begin(), t.labels().end()).size() == 10);

  // Per-cluster means against centers regenerated from the same substreams.
  const std::size_t d = 4, per = 400;
  const double spread = 0.5;
  const auto u = adq::gen_synthetic_mixture(5, per, d, spread, 11);
  for (std::size_t c = 0; c < 5; ++c) {
    adq::rng::Philox gen(11, adq::rng::substream(adq::rng::Stream::Synthetic, c));
    std::vector<double> center(d);
    double n2 = 0.0;
    for (auto& v : center) {
      v = gen.normal();
      n2 += v * v;
    }
    for (std::size_t k = 0; k < d; ++k) {
      double mean = 0.0;
      for (std::size_t i = c * per; i < (c + 1) * per; ++i) mean += u.row(i)[k];
      mean /= per;
      const double expect = center[k] * 10.0 * spread / std::sqrt(n2);
      CHECK(std::abs(mean - expect) <= 3.0 * spread / std::sqrt(double(per)));
    }
  }
}
