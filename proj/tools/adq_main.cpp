// SPDX-License-Identifier: Apache-2.0
// adq: command-line front end for adaptive dataset quantization.
//
//   adq ingest  --synthetic | --features F | --images I | --pgm FILES...  --out DIR
//   adq bins    --manifest M --bins 10 --out bins.json
//   adq score   --manifest M --bins-file bins.json --out scores.csv
//   adq plan    --scores scores.csv --bins-file bins.json --alpha 0.65 --rho 0.1 --out plan.json
//   adq sample  --bins-file bins.json --plan plan.json --seed 1 --out coreset.txt
//   adq run     --manifest M --rho 0.1 --alpha 0.65 --bins 10 --tau 0.5 --patch 8 --seed 1 --out DIR
//   adq trend   --scores scores.csv [--out trend.csv]
//
// Exit codes: 0 success, 2 config error, 3 I/O error, 4 invariant violation.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <type_traits>

#include "CLI11.hpp"
#include "adq/bins.hpp"
#include "adq/dataset.hpp"
#include "adq/error.hpp"
#include "adq/pipeline.hpp"
#include "adq/sampling.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kConfigExit = 2;
constexpr int kIoExit = 3;
constexpr int kInvariantExit = 4;

// Pipeline flags shared by several subcommands. Values given on the command
// line override a --config file, which overrides the built-in defaults.
class ConfigFlags {
 public:
  void attach(CLI::App* app, bool sampling_only = false) {
    app->add_option("--config", config_file_, "JSON config file");
    bind(app, "--seed", seed_, "Root seed");
    if (sampling_only) return;
    bind(app, "--bins", bins_, "Number of bins m");
    bind(app, "--alpha", alpha_, "Importance weighting coefficient");
    bind(app, "--rho", rho_, "Data keep ratio");
    bind(app, "--tau", tau_, "Contrastive temperature");
    bind(app, "--patch", patch_, "Texture patch side L");
    bind(app, "--discriminator", discriminator_, "mlp | identity");
    bind(app, "--hidden", hidden_, "Discriminator hidden width");
    bind(app, "--embed", embed_, "Discriminator output width");
    bind(app, "--epochs", epochs_, "Discriminator training epochs");
    bind(app, "--lr", learning_rate_, "Discriminator learning rate");
    bind(app, "--div-sample", div_sample_, "Max items per bin for diversity scoring (0 = all)");
    bind(app, "--augment", augment_, "auto | identity | noise | pixel");
    bind(app, "--featurizer", featurizer_, "auto | external | projection");
    bind(app, "--featurize-dim", featurize_dim_, "Projection output dimension");
    bind(app, "--rep", rep_, "auto | texture | proxy");
    app->add_flag("--channel-means", channel_means_, "Append per-channel image means to discriminator inputs");
  }

  adq::PipelineConfig resolve() const {
    adq::PipelineConfig config;
    if (!config_file_.empty()) adq::apply_config_json(config, adq::read_text(config_file_));
    for (const auto& apply : setters_) apply(config);
    if (channel_means_) config.channel_means = true;
    config.validate();
    return config;
  }

 private:
  template <typename T>
  void bind(CLI::App* app, const char* flag, std::optional<T>& slot, const char* help) {
    app->add_option(flag, slot, help);
    setters_.push_back([&slot, flag](adq::PipelineConfig& c) {
      if (!slot) return;
      assign(c, flag, *slot);
    });
  }

  template <typename T>
  static void assign(adq::PipelineConfig& c, std::string_view flag, const T& v) {
    if constexpr (std::is_same_v<T, std::string>) {
      if (flag == "--discriminator") c.discriminator = v;
      else if (flag == "--augment") c.augment = v;
      else if (flag == "--featurizer") c.featurizer = v;
      else if (flag == "--rep") c.rep = v;
    } else if constexpr (std::is_same_v<T, double>) {
      if (flag == "--alpha") c.alpha = v;
      else if (flag == "--rho") c.rho = v;
      else if (flag == "--tau") c.tau = v;
      else if (flag == "--lr") c.learning_rate = v;
    } else {
      if (flag == "--seed") c.seed = v;
      else if (flag == "--bins") c.bins = v;
      else if (flag == "--patch") c.patch = v;
      else if (flag == "--hidden") c.hidden = v;
      else if (flag == "--embed") c.embed = v;
      else if (flag == "--epochs") c.epochs = v;
      else if (flag == "--div-sample") c.div_sample = v;
      else if (flag == "--featurize-dim") c.featurize_dim = v;
    }
  }

  std::string config_file_;
  std::optional<std::uint64_t> seed_;
  std::optional<std::size_t> bins_, patch_, hidden_, embed_, epochs_, div_sample_, featurize_dim_;
  std::optional<double> alpha_, rho_, tau_, learning_rate_;
  std::optional<std::string> discriminator_, augment_, featurizer_, rep_;
  bool channel_means_ = false;
  std::vector<std::function<void(adq::PipelineConfig&)>> setters_;
};

std::vector<std::int32_t> read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw adq::Error(adq::Errc::IoFailure, "cannot open labels " + path.string());
  std::vector<std::int32_t> labels;
  std::int32_t v;
  while (in >> v) labels.push_back(v);
  if (!in.eof()) throw adq::Error(adq::Errc::ConfigError, path.string() + ": labels must be integers");
  return labels;
}

struct IngestArgs {
  bool synthetic = false;
  std::size_t clusters = 10, per_cluster = 100, dim = 8;
  double spread = 1.0;
  std::string features, images, labels;
  std::vector<std::string> pnm;
  std::size_t featurize = 0;
  std::uint64_t seed = 1;
  std::string out;
};

int run_ingest(const IngestArgs& args) {
  const fs::path out(args.out);
  fs::create_directories(out);
  adq::DatasetManifest manifest;
  manifest.feature_path = out / "features.adqf";
  std::optional<adq::ImageTable> images;

  if (!args.pnm.empty()) {
    std::vector<fs::path> paths(args.pnm.begin(), args.pnm.end());
    images = adq::import_pnm(paths);
  } else if (!args.images.empty()) {
    images = adq::load_images(args.images);
  }
  if (images) {
    manifest.image_path = out / "images.adqi";
    adq::write_images(*images, *manifest.image_path);
  }

  if (args.synthetic) {
    const auto table = adq::gen_synthetic_mixture(args.clusters, args.per_cluster, args.dim, args.spread, args.seed);
    manifest.labels = table.labels();
    adq::write_features(table, manifest.feature_path);
  } else if (!args.features.empty()) {
    const auto table = adq::load_features(args.features);
    if (images && images->size() != table.size()) {
      throw adq::Error(adq::Errc::InvariantViolation, "image count differs from feature rows");
    }
    adq::write_features(table, manifest.feature_path);
  } else if (images) {
    const std::size_t dim = args.featurize > 0 ? args.featurize : 64;
    adq::write_features(adq::fallback_featurize(*images, dim, args.seed), manifest.feature_path);
    manifest.featurizer = {"projection", dim, args.seed};
  } else {
    throw adq::Error(adq::Errc::ConfigError, "ingest needs --synthetic, --features, --images or --pgm");
  }
  if (!args.labels.empty()) manifest.labels = read_labels(args.labels);
  manifest.sha256 = adq::sha256_file(manifest.feature_path);
  const auto manifest_path = out / "manifest.json";
  adq::write_manifest(manifest, manifest_path);
  // Round-trip through the loader so a bad label count fails here, not later.
  adq::load_dataset(manifest_path);
  std::cout << manifest_path.string() << '\n';
  return 0;
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    adq::write_text(out, text);
  }
}

std::vector<std::size_t> masses_of(const std::vector<adq::Bin>& bins) {
  std::vector<std::size_t> masses;
  for (const auto& bin : bins) masses.push_back(bin.size());
  return masses;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive dataset quantization: compress a labeled dataset into a coreset"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Create a dataset manifest (and containers) from inputs");
  ingest_cmd->add_flag("--synthetic", ingest.synthetic, "Generate a Gaussian mixture");
  ingest_cmd->add_option("--clusters", ingest.clusters);
  ingest_cmd->add_option("--per-cluster", ingest.per_cluster);
  ingest_cmd->add_option("--dim", ingest.dim);
  ingest_cmd->add_option("--spread", ingest.spread);
  ingest_cmd->add_option("--features", ingest.features, "Existing ADQF feature file");
  ingest_cmd->add_option("--images", ingest.images, "Existing ADQI image file");
  ingest_cmd->add_option("--pgm", ingest.pnm, "P5/P6 images, one item each")->expected(1, -1);
  ingest_cmd->add_option("--labels", ingest.labels, "Whitespace-separated integer labels");
  ingest_cmd->add_option("--featurize", ingest.featurize, "Projection dimension when featurizing images");
  ingest_cmd->add_option("--seed", ingest.seed);
  ingest_cmd->add_option("--out", ingest.out, "Output directory")->required();

  std::string manifest, bins_file, scores_file, plan_file, out;

  ConfigFlags bins_flags, score_flags, plan_flags, sample_flags, run_flags;
  auto* bins_cmd = app.add_subcommand("bins", "Greedy bin generation");
  bins_cmd->add_option("--manifest", manifest)->required();
  bins_cmd->add_option("--out", out);
  bins_flags.attach(bins_cmd);

  auto* score_cmd = app.add_subcommand("score", "Representativeness, diversity and importance per bin");
  score_cmd->add_option("--manifest", manifest)->required();
  score_cmd->add_option("--bins-file", bins_file)->required();
  score_cmd->add_option("--out", out);
  score_flags.attach(score_cmd);

  auto* plan_cmd = app.add_subcommand("plan", "Per-bin quotas from scores");
  plan_cmd->add_option("--scores", scores_file)->required();
  plan_cmd->add_option("--bins-file", bins_file)->required();
  plan_cmd->add_option("--out", out);
  plan_flags.attach(plan_cmd);

  auto* sample_cmd = app.add_subcommand("sample", "Draw the coreset from a plan");
  sample_cmd->add_option("--bins-file", bins_file)->required();
  sample_cmd->add_option("--plan", plan_file)->required();
  sample_cmd->add_option("--out", out)->required();
  sample_flags.attach(sample_cmd, true);

  auto* run_cmd = app.add_subcommand("run", "End-to-end pipeline");
  run_cmd->add_option("--manifest", manifest);
  run_cmd->add_option("--out", out);
  run_flags.attach(run_cmd);

  auto* trend_cmd = app.add_subcommand("trend", "Bin-index vs RS/DS/IS series");
  trend_cmd->add_option("--scores", scores_file)->required();
  trend_cmd->add_option("--out", out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    adq::set_thread_cap(adq::thread_cap_from_env());

    if (*ingest_cmd) return run_ingest(ingest);

    if (*bins_cmd) {
      auto config = bins_flags.resolve();
      config.manifest = manifest;
      const auto dataset = adq::prepare_dataset(config);
      const auto bins = adq::stage_bins(dataset, config);
      emit(out, adq::bins_to_json(bins, dataset.data.features.size()));
    } else if (*score_cmd) {
      auto config = score_flags.resolve();
      config.manifest = manifest;
      const auto dataset = adq::prepare_dataset(config);
      const auto bins = adq::bins_from_json(adq::read_text(bins_file));
      adq::validate_partition(bins, dataset.data.features.size());
      emit(out, adq::score_table_to_csv(adq::stage_scores(dataset, bins, config)));
    } else if (*plan_cmd) {
      const auto config = plan_flags.resolve();
      const auto bins = adq::bins_from_json(adq::read_text(bins_file));
      const auto scores = adq::score_table_from_csv(adq::read_text(scores_file));
      emit(out, adq::plan_to_json(adq::stage_plan(scores, bins, config)));
    } else if (*sample_cmd) {
      const auto config = sample_flags.resolve();
      const auto bins = adq::bins_from_json(adq::read_text(bins_file));
      auto plan = adq::plan_from_json(adq::read_text(plan_file));
      plan.masses = masses_of(bins);
      adq::validate_plan(plan);
      const auto coreset = adq::stage_sample(bins, plan, config);
      adq::write_text(out, adq::coreset_to_text(coreset));
      auto sidecar = fs::path(out);
      sidecar.replace_extension(".json");
      adq::write_text(sidecar, adq::coreset_sidecar_json(config, coreset.size()));
    } else if (*run_cmd) {
      auto config = run_flags.resolve();
      if (!manifest.empty()) config.manifest = manifest;
      if (!out.empty()) config.out_dir = out;
      if (config.manifest.empty() || config.out_dir.empty()) {
        throw adq::Error(adq::Errc::ConfigError, "run needs --manifest and --out (flags or config file)");
      }
      const auto report = adq::run_pipeline(config);
      std::cout << "coreset: " << report.coreset.size() << " of " << report.items << " items -> "
                << report.coreset_path.string() << '\n';
    } else if (*trend_cmd) {
      emit(out, adq::emit_trend_report(adq::score_table_from_csv(adq::read_text(scores_file))));
    }
    return 0;
  } catch (const adq::Error& e) {
    std::cerr << "adq: " << e.what() << '\n';
    return adq::exit_code(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "adq: " << e.what() << '\n';
    return kIoExit;
  } catch (const std::exception& e) {
    std::cerr << "adq: " << e.what() << '\n';
    return kInvariantExit;
  }
}
