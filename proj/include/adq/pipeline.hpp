// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "adq/bins.hpp"
#include "adq/dataset.hpp"
#include "adq/sampling.hpp"

namespace adq {

struct PipelineConfig {
  std::filesystem::path manifest;
  std::filesystem::path out_dir;

  std::size_t bins = 10;  // m
  double alpha = 0.65;
  double tau = 0.5;
  std::size_t patch = 8;  // L
  double rho = 0.1;
  std::uint64_t seed = 1;

  std::string discriminator = "mlp";  // mlp | identity
  std::size_t hidden = 128;
  std::size_t embed = 64;
  std::size_t epochs = 5;
  double learning_rate = 0.01;
  // Items per bin used for diversity scoring (seeded subsample); 0 = all.
  std::size_t div_sample = 512;
  std::string augment = "auto";  // auto | identity | noise | pixel
  bool channel_means = false;

  std::string featurizer = "auto";  // auto | external | projection
  std::size_t featurize_dim = 64;
  std::string rep = "auto";  // auto | texture | proxy

  /// Throws ConfigError (or BadAlpha / BadKeepRatio / InvalidBinCount).
  void validate() const;
};

/// Semantic fields only; paths and thread counts are excluded.
std::string config_to_json(const PipelineConfig& config);
/// Overlays the keys present in a JSON object onto config. Throws ConfigError.
void apply_config_json(PipelineConfig& config, const std::string& text);
/// sha256 of config_to_json; changes iff a semantic field changes.
std::string config_hash(const PipelineConfig& config);

/// Dataset plus what the scoring stages need to know about its features.
struct PreparedDataset {
  Dataset data;
  std::string sha256;
  bool projection_features = false;  // features are fallback_featurize output
  std::size_t projection_dim = 0;
  std::uint64_t projection_seed = 0;
};

PreparedDataset prepare_dataset(const PipelineConfig& config);

std::vector<Bin> stage_bins(const PreparedDataset& dataset, const PipelineConfig& config);
ScoreTable stage_scores(const PreparedDataset& dataset, std::span<const Bin> bins, const PipelineConfig& config);
SamplingPlan stage_plan(const ScoreTable& scores, std::span<const Bin> bins, const PipelineConfig& config);
std::vector<std::size_t> stage_sample(std::span<const Bin> bins, const SamplingPlan& plan,
                                      const PipelineConfig& config);

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct RunReport {
  PipelineConfig config;
  std::string config_hash;
  std::string dataset_sha256;
  std::size_t items = 0;
  std::vector<std::size_t> bin_sizes;
  ScoreTable scores;
  SamplingPlan plan;
  std::vector<std::size_t> coreset;
  std::filesystem::path coreset_path;
  std::vector<StageTiming> timings;
  double total_seconds = 0.0;
};

/// bins -> scores -> importance -> plan -> draw. Writes bins.json, scores.csv,
/// plan.json, coreset.txt, coreset.json, trend.csv, report.json and
/// timings.json into config.out_dir. Errors carry the failing stage name.
RunReport run_pipeline(const PipelineConfig& config);

/// Byte-reproducible from (inputs, config, seed): wall-clock timings live in
/// timings_to_json instead.
std::string report_to_json(const RunReport& report);
std::string timings_to_json(const RunReport& report);

/// bin,rs,ds,is with normalized scores; one row per bin.
std::string emit_trend_report(const ScoreTable& scores);

/// One id per line.
std::string coreset_to_text(std::span<const std::size_t> coreset);
std::string coreset_sidecar_json(const PipelineConfig& config, std::size_t count);

/// Caps OpenMP parallelism (0 leaves the runtime default).
void set_thread_cap(std::size_t threads);
/// Reads ADQ_THREADS; returns 0 when unset. Throws ConfigError on junk.
std::size_t thread_cap_from_env();

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace adq
