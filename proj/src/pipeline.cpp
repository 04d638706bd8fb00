// SPDX-License-Identifier: Apache-2.0
#include "adq/pipeline.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

#include "adq/diversity.hpp"
#include "adq/error.hpp"
#include "adq/rng.hpp"
#include "adq/texture.hpp"
#include "json.hpp"

namespace adq {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

namespace {

void require_one_of(const std::string& field, const std::string& value, std::initializer_list<const char*> options) {
  for (const char* option : options) {
    if (value == option) return;
  }
  throw Error(Errc::ConfigError, field + " has unknown value \"" + value + "\"");
}

}  // namespace

void PipelineConfig::validate() const {
  if (bins == 0) throw Error(Errc::InvalidBinCount, "bins must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(Errc::BadAlpha, "alpha must lie in [0, 1]");
  if (!(rho > 0.0 && rho <= 1.0)) throw Error(Errc::BadKeepRatio, "rho must lie in (0, 1]");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(Errc::ConfigError, "tau must be > 0");
  if (patch < 2) throw Error(Errc::ConfigError, "patch must be >= 2");
  if (hidden == 0 || embed == 0) throw Error(Errc::ConfigError, "discriminator sizes must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(Errc::ConfigError, "learning_rate must be > 0");
  }
  if (div_sample == 1) throw Error(Errc::ConfigError, "div_sample must be 0 or >= 2");
  if (featurize_dim == 0) throw Error(Errc::ConfigError, "featurize_dim must be >= 1");
  require_one_of("discriminator", discriminator, {"mlp", "identity"});
  require_one_of("augment", augment, {"auto", "identity", "noise", "pixel"});
  require_one_of("featurizer", featurizer, {"auto", "external", "projection"});
  require_one_of("rep", rep, {"auto", "texture", "proxy"});
}

std::string config_to_json(const PipelineConfig& c) {
  // nlohmann's default object is key-sorted, so the dump is canonical.
  json doc = {
      {"bins", c.bins},
      {"alpha", c.alpha},
      {"tau", c.tau},
      {"patch", c.patch},
      {"rho", c.rho},
      {"seed", c.seed},
      {"discriminator", c.discriminator},
      {"hidden", c.hidden},
      {"embed", c.embed},
      {"epochs", c.epochs},
      {"learning_rate", c.learning_rate},
      {"div_sample", c.div_sample},
      {"augment", c.augment},
      {"channel_means", c.channel_means},
      {"featurizer", c.featurizer},
      {"featurize_dim", c.featurize_dim},
      {"rep", c.rep},
  };
  return doc.dump();
}

void apply_config_json(PipelineConfig& c, const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, std::string("config JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(Errc::ConfigError, "config JSON must be an object");
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "manifest") c.manifest = value.get<std::string>();
      else if (key == "out") c.out_dir = value.get<std::string>();
      else if (key == "bins") c.bins = value.get<std::size_t>();
      else if (key == "alpha") c.alpha = value.get<double>();
      else if (key == "tau") c.tau = value.get<double>();
      else if (key == "patch") c.patch = value.get<std::size_t>();
      else if (key == "rho") c.rho = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "discriminator") c.discriminator = value.get<std::string>();
      else if (key == "hidden") c.hidden = value.get<std::size_t>();
      else if (key == "embed") c.embed = value.get<std::size_t>();
      else if (key == "epochs") c.epochs = value.get<std::size_t>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "div_sample") c.div_sample = value.get<std::size_t>();
      else if (key == "augment") c.augment = value.get<std::string>();
      else if (key == "channel_means") c.channel_means = value.get<bool>();
      else if (key == "featurizer") c.featurizer = value.get<std::string>();
      else if (key == "featurize_dim") c.featurize_dim = value.get<std::size_t>();
      else if (key == "rep") c.rep = value.get<std::string>();
      else throw Error(Errc::ConfigError, "unknown config key \"" + key + "\"");
    }
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, std::string("config JSON: ") + e.what());
  }
}

std::string config_hash(const PipelineConfig& config) { return sha256_hex(config_to_json(config)); }

// ---------------------------------------------------------------------------
// Stages

PreparedDataset prepare_dataset(const PipelineConfig& config) {
  // load_dataset has already checked the recorded digest against the file.
  PreparedDataset prepared{load_dataset(config.manifest), load_manifest(config.manifest).sha256};
  auto& data = prepared.data;
  if (config.featurizer == "projection") {
    if (!data.images) throw Error(Errc::ConfigError, "featurizer=projection needs an image file in the manifest");
    prepared.projection_dim = config.featurize_dim;
    prepared.projection_seed = rng::derive_seed(config.seed, rng::Stream::Featurize, 0);
    auto labels = data.features.labels();
    data.features = fallback_featurize(*data.images, prepared.projection_dim, prepared.projection_seed);
    data.features.set_labels(std::move(labels));
    prepared.projection_features = true;
  } else if (config.featurizer == "auto" && data.featurizer.mode == "projection") {
    if (!data.images) throw Error(Errc::ConfigError, "manifest records projection features but no images");
    if (data.featurizer.out_dim != data.features.dim()) {
      throw Error(Errc::InvariantViolation, "manifest featurizer out_dim differs from the feature dimension");
    }
    prepared.projection_dim = data.featurizer.out_dim;
    prepared.projection_seed = data.featurizer.seed;
    prepared.projection_features = true;
  }
  return prepared;
}

std::vector<Bin> stage_bins(const PreparedDataset& dataset, const PipelineConfig& config) {
  auto bins = generate_bins(dataset.data.features, config.bins);
  validate_partition(bins, dataset.data.features.size());
  return bins;
}

namespace {

Bin diversity_subset(const Bin& bin, std::size_t cap, std::uint64_t seed) {
  if (cap == 0 || bin.size() <= cap) return bin;
  std::vector<std::size_t> members = bin.members;
  rng::Philox gen(seed, rng::substream(rng::Stream::DiversitySubsample, bin.index));
  for (std::size_t i = 0; i < cap; ++i) std::swap(members[i], members[i + gen.below(members.size() - i)]);
  members.resize(cap);
  std::sort(members.begin(), members.end());
  return {bin.index, std::move(members)};
}

}  // namespace

ScoreTable stage_scores(const PreparedDataset& dataset, std::span<const Bin> bins, const PipelineConfig& config) {
  const auto& features = dataset.data.features;
  const ImageTable* images = dataset.data.images ? &*dataset.data.images : nullptr;
  const std::size_t m = bins.size();

  const bool texture = config.rep == "texture" || (config.rep == "auto" && images != nullptr);
  if (texture && images == nullptr) throw Error(Errc::ConfigError, "rep=texture needs images");
  std::vector<double> rep(m);
  if (texture) {
    for (std::size_t n = 0; n < m; ++n) rep[n] = bin_representativeness(bins[n], *images, config.patch).value;
  } else {
    const auto centroid = feature_centroid(features);
    for (std::size_t n = 0; n < m; ++n) rep[n] = proxy_representativeness(bins[n], features, centroid).value;
  }

  ViewSource source;
  source.features = &features;
  source.images = images;
  source.channel_means = config.channel_means;
  if (config.channel_means && images == nullptr) throw Error(Errc::ConfigError, "channel_means needs images");
  std::optional<RandomProjection> projection;
  if (config.augment == "identity") {
    source.mode = AugmentMode::Identity;
  } else if (config.augment == "noise") {
    source.mode = AugmentMode::FeatureNoise;
  } else if (config.augment == "pixel" || (config.augment == "auto" && images && dataset.projection_features)) {
    if (!images || !dataset.projection_features) {
      throw Error(Errc::ConfigError, "augment=pixel needs images and projection features");
    }
    projection.emplace(images->image_bytes(), dataset.projection_dim, dataset.projection_seed);
    source.mode = AugmentMode::Pixel;
    source.projection = &*projection;
  } else {
    source.mode = AugmentMode::FeatureNoise;
  }

  DiscriminatorOptions options;
  options.identity = config.discriminator == "identity";
  options.hidden = config.hidden;
  options.output = config.embed;
  options.epochs = config.epochs;
  options.learning_rate = config.learning_rate;

  std::vector<double> div(m);
  std::vector<std::exception_ptr> failures(m);
  const auto count = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t b = 0; b < count; ++b) {
    const auto n = static_cast<std::size_t>(b);
    try {
      const auto subset = diversity_subset(bins[n], config.div_sample, config.seed);
      const auto bin_seed = rng::derive_seed(config.seed, rng::Stream::DiscriminatorInit, n);
      const auto trained = train_discriminator(subset, source, config.tau, options, bin_seed);
      div[n] = bin_diversity(subset, source, trained.discriminator, config.tau, bin_seed).value;
    } catch (...) {
      failures[n] = std::current_exception();
    }
  }
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }
  return build_score_table(std::move(rep), std::move(div), !texture);
}

SamplingPlan stage_plan(const ScoreTable& scores, std::span<const Bin> bins, const PipelineConfig& config) {
  std::vector<std::size_t> masses;
  for (const auto& bin : bins) masses.push_back(bin.size());
  auto plan = make_plan(scores, masses, config.alpha, config.rho);
  validate_plan(plan);
  return plan;
}

std::vector<std::size_t> stage_sample(std::span<const Bin> bins, const SamplingPlan& plan,
                                      const PipelineConfig& config) {
  return draw_samples(bins, plan.quotas, config.seed);
}

// ---------------------------------------------------------------------------
// End to end

namespace {

template <typename Fn>
auto timed(RunReport& report, const char* stage, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  try {
    auto result = fn();
    report.timings.push_back({stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
    return result;
  } catch (const Error& e) {
    throw e.in_stage(stage);
  }
}

}  // namespace

RunReport run_pipeline(const PipelineConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.config = config;
  report.config_hash = config_hash(config);

  const auto dataset = timed(report, "load", [&] { return prepare_dataset(config); });
  report.dataset_sha256 = dataset.sha256;
  report.items = dataset.data.features.size();
  const auto bins = timed(report, "bins", [&] { return stage_bins(dataset, config); });
  for (const auto& bin : bins) report.bin_sizes.push_back(bin.size());
  report.scores = timed(report, "score", [&] { return stage_scores(dataset, bins, config); });
  report.plan = timed(report, "plan", [&] { return stage_plan(report.scores, bins, config); });
  report.coreset = timed(report, "sample", [&] { return stage_sample(bins, report.plan, config); });

  timed(report, "write", [&] {
    fs::create_directories(config.out_dir);
    report.coreset_path = config.out_dir / "coreset.txt";
    write_text(config.out_dir / "bins.json", bins_to_json(bins, report.items));
    write_text(config.out_dir / "scores.csv", score_table_to_csv(report.scores));
    write_text(config.out_dir / "plan.json", plan_to_json(report.plan));
    write_text(report.coreset_path, coreset_to_text(report.coreset));
    write_text(config.out_dir / "coreset.json", coreset_sidecar_json(config, report.coreset.size()));
    write_text(config.out_dir / "trend.csv", emit_trend_report(report.scores));
    write_text(config.out_dir / "report.json", report_to_json(report));
    return 0;
  });
  report.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_text(config.out_dir / "timings.json", timings_to_json(report));
  return report;
}

std::string report_to_json(const RunReport& report) {
  const auto& s = report.scores;
  json doc;
  doc["config"] = json::parse(config_to_json(report.config));
  doc["config_hash"] = report.config_hash;
  doc["dataset_sha256"] = report.dataset_sha256;
  doc["items"] = report.items;
  doc["bin_sizes"] = report.bin_sizes;
  doc["rep_mode"] = s.proxy_rep ? "proxy-rep" : "texture";
  doc["scores"] = {{"rep", s.rep},         {"div", s.div},         {"rep_hat", s.rep_hat},
                   {"div_hat", s.div_hat}, {"importance", s.importance}};
  doc["plan"] = json::parse(plan_to_json(report.plan));
  doc["coreset_size"] = report.coreset.size();
  doc["coreset_file"] = report.coreset_path.filename().string();
  return doc.dump(2) + "\n";
}

std::string timings_to_json(const RunReport& report) {
  json doc;
  doc["config_hash"] = report.config_hash;
  auto& stages = doc["stages"] = json::array();
  for (const auto& t : report.timings) stages.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  doc["total_seconds"] = report.total_seconds;
  return doc.dump(2) + "\n";
}

std::string emit_trend_report(const ScoreTable& scores) {
  std::ostringstream out;
  out.precision(17);
  out << "bin,rs,ds,is\n";
  for (std::size_t n = 0; n < scores.size(); ++n) {
    out << n + 1 << ',' << scores.rep_hat[n] << ',' << scores.div_hat[n] << ',' << scores.importance[n] << '\n';
  }
  return out.str();
}

std::string coreset_to_text(std::span<const std::size_t> coreset) {
  std::string out;
  for (auto id : coreset) {
    out += std::to_string(id);
    out += '\n';
  }
  return out;
}

std::string coreset_sidecar_json(const PipelineConfig& config, std::size_t count) {
  json doc = {{"config_hash", config_hash(config)}, {"seed", config.seed}, {"count", count}, {"ids", "coreset.txt"}};
  return doc.dump(2) + "\n";
}

void set_thread_cap(std::size_t threads) {
  if (threads > 0) omp_set_num_threads(static_cast<int>(threads));
}

std::size_t thread_cap_from_env() {
  const char* value = std::getenv("ADQ_THREADS");
  if (value == nullptr || *value == '\0') return 0;
  char* end = nullptr;
  const long parsed = std::strtol(value, &end, 10);
  if (*end != '\0' || parsed < 1) throw Error(Errc::ConfigError, std::string("ADQ_THREADS=\"") + value + "\"");
  return static_cast<std::size_t>(parsed);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.empty()) throw Error(Errc::IoFailure, "empty output path");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace adq
