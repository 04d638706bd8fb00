// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

#include "adq/bins.hpp"
#include "adq/diversity.hpp"
#include "adq/error.hpp"
#include "adq/pipeline.hpp"
#include "adq/sampling.hpp"
#include "adq/texture.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

// Greedy bins driven by the oracle gain; same K, remainder and min-id rules.
std::vector<std::vector<std::size_t>> oracle_greedy(const adq::FeatureTable& f, std::size_t m) {
  const auto rows = oracle::rows_of(f);
  const std::size_t k = (f.size() + m - 1) / m;
  std::vector<std::size_t> pool(f.size());
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::vector<std::vector<std::size_t>> bins;
  for (std::size_t n = 0; n < m; ++n) {
    std::vector<std::size_t> bin;
    const std::size_t target = n + 1 < m ? k : pool.size();
    while (bin.size() < target) {
      std::size_t pick = 0;
      double best = -std::numeric_limits<double>::infinity();
      for (auto x : pool) {  // pool stays sorted, so strict > keeps the min id
        const double g = oracle::graphcut_gain(rows, x, bin, pool);
        if (g > best) {
          best = g;
          pick = x;
        }
      }
      bin.push_back(pick);
      pool.erase(std::find(pool.begin(), pool.end(), pick));
    }
    bins.push_back(bin);
  }
  return bins;
}

Outcome ac1() {
  const auto start = Clock::now();
  int matched = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto f = oracle::random_table(200, 16, 1000 + seed);
    const auto fast = adq::generate_bins(f, 10);
    const auto slow = oracle_greedy(f, 10);
    bool same = fast.size() == slow.size();
    for (std::size_t n = 0; same && n < fast.size(); ++n) same = fast[n].members == slow[n];
    matched += same;
  }
  const double t = seconds_since(start);
  return {matched == 10 && t < 5.0, fmt("%d/10 seeds identical, %.2f s", matched, t)};
}

Outcome ac2() {
  adq::rng::Philox gen(2, 0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t dim = 1 + gen.below(32);
    const std::size_t rows = 2 + gen.below(120);
    const auto f = oracle::random_table(rows, dim, 50000 + trial, 0.1 + 10.0 * gen.uniform());
    std::vector<std::size_t> ids(rows);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    for (std::size_t i = rows - 1; i > 0; --i) std::swap(ids[i], ids[gen.below(i + 1)]);
    const std::size_t nb = gen.below(rows);
    const std::size_t np = 1 + gen.below(rows - nb);
    const std::vector<std::size_t> bin(ids.begin(), ids.begin() + nb), pool(ids.begin() + nb, ids.begin() + nb + np);
    const std::size_t x = pool[gen.below(np)];
    const double naive = oracle::graphcut_gain(oracle::rows_of(f), x, bin, pool);
    const double fast = adq::fast_gain(x, adq::PoolMoments::from_sets(f, bin, pool), f);
    worst = std::max(worst, std::abs(fast - naive) / (1.0 + std::abs(naive)));
  }
  return {worst <= 1e-6, fmt("max |fast-naive|/(1+|naive|) = %.3g over 1000 triples", worst)};
}

Outcome ac3() {
  adq::rng::Philox gen(3, 0);
  int ok = 0, tried = 0;
  while (tried < 20) {
    const std::size_t items = 1 + gen.below(400);
    const std::size_t m = 1 + gen.below(std::min<std::size_t>(items, 25));
    const std::size_t k = (items + m - 1) / m;
    if ((m - 1) * k >= items) continue;  // final bin would be empty
    ++tried;
    const auto f = oracle::random_table(items, 1 + gen.below(12), 300 + tried);
    const auto bins = adq::generate_bins(f, m);
    std::vector<int> hits(items, 0);
    bool good = bins.size() == m;
    for (std::size_t n = 0; good && n < m; ++n) {
      const std::size_t expect = n + 1 < m ? k : items - (m - 1) * k;
      good = bins[n].size() == expect && bins[n].index == n + 1;
      for (auto id : bins[n].members) good = good && id < items && ++hits[id] == 1;
    }
    good = good && std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; });
    ok += good;
  }
  return {ok == 20, fmt("%d/20 configurations satisfy disjoint/cover/size laws", ok)};
}

Outcome ac4() {
  const adq::Patch flat(8, std::vector<double>(64, 0.42));
  const double flat_level = adq::patch_texture_level(flat);

  std::vector<double> step(16, 0.0);
  for (std::size_t r = 0; r < 4; ++r) step[r * 4 + 2] = step[r * 4 + 3] = 1.0;
  const double step_level = adq::patch_texture_level(adq::Patch(4, step));
  const double step_oracle = oracle::mean(oracle::sobel_magnitude(step, 4));

  adq::rng::Philox gen(4, 0);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t side = 2 + gen.below(15);
    std::vector<double> px(side * side), tr(side * side);
    for (auto& v : px) v = gen.uniform();
    for (std::size_t r = 0; r < side; ++r)
      for (std::size_t c = 0; c < side; ++c) tr[c * side + r] = px[r * side + c];
    const double a = adq::patch_texture_level(adq::Patch(side, px));
    const double b = adq::patch_texture_level(adq::Patch(side, tr));
    worst = std::max(worst, std::abs(a - b));
  }
  const bool pass = flat_level == 0.0 && std::abs(step_level - step_oracle) <= 1e-12 && worst <= 1e-12;
  return {pass, fmt("constant=%g, step=%.17g (oracle %.17g), max transpose gap %.3g", flat_level, step_level,
                    step_oracle, worst)};
}

Outcome ac5() {
  const auto disc = adq::Discriminator::identity();
  const adq::FeatureTable dup(2, 2, {1, 0, 1, 0});
  const adq::FeatureTable orth(2, 2, {1, 0, 0, 1});
  const adq::Bin bin{1, {0, 1}};
  adq::ViewSource src{&dup, nullptr, nullptr, adq::AugmentMode::Identity, false};
  const double d_dup = adq::bin_diversity(bin, src, disc, 1.0, 1).value;
  src.features = &orth;
  const double d_orth = adq::bin_diversity(bin, src, disc, 1.0, 1).value;

  bool monotone = true;
  double previous = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < 20; ++a) {
    const double theta = std::numbers::pi * a / 19.0;
    const adq::FeatureTable pair(2, 2, {1, 0, static_cast<float>(std::cos(theta)), static_cast<float>(std::sin(theta))});
    src.features = &pair;
    const double d = adq::bin_diversity(bin, src, disc, 1.0, 1).value;
    monotone = monotone && d > previous;
    previous = d;
  }
  const bool pass = std::abs(d_dup + 1.0) <= 1e-9 && std::abs(d_orth + std::exp(-1.0)) <= 1e-9 && monotone;
  return {pass, fmt("duplicate %.12f, orthogonal %.12f, sweep %s", d_dup, d_orth,
                    monotone ? "strictly increasing" : "NOT monotone")};
}

Outcome ac6() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    adq::rng::Philox gen(600 + seed, 0);
    std::vector<std::vector<double>> anchors(6, std::vector<double>(6)), positives;
    for (auto& row : anchors)
      for (auto& v : row) v = gen.normal();
    positives = anchors;
    for (auto& row : positives)
      for (auto& v : row) v += 0.2 * gen.normal();
    auto disc = adq::Discriminator::mlp(6, 8, 4, seed);
    disc.fit_input_scaling(anchors);
    std::vector<double> grad;
    adq::contrastive_loss(disc, anchors, positives, 0.5, &grad);
    const double h = 1e-5;
    auto params = disc.parameters();
    for (std::size_t p = 0; p < params.size(); ++p) {
      const double keep = params[p];
      params[p] = keep + h;
      const double up = adq::contrastive_loss(disc, anchors, positives, 0.5);
      params[p] = keep - h;
      const double down = adq::contrastive_loss(disc, anchors, positives, 0.5);
      params[p] = keep;
      const double numeric = (up - down) / (2.0 * h);
      worst = std::max(worst, std::abs(numeric - grad[p]) / std::max({std::abs(numeric), std::abs(grad[p]), 1e-6}));
    }
  }
  return {worst <= 1e-4, fmt("max relative error %.3g over 5 seeds (d=6, h=8, e=4, step 1e-5)", worst)};
}

Outcome ac7() {
  adq::rng::Philox gen(7, 0);
  int violations = 0, tight_checked = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t m = 1 + gen.below(15);
    std::vector<std::size_t> masses(m);
    for (auto& n : masses) n = 1 + gen.below(300);
    const std::size_t items = std::accumulate(masses.begin(), masses.end(), std::size_t{0});
    std::vector<double> rep(m), div(m);
    for (std::size_t n = 0; n < m; ++n) {
      rep[n] = gen.normal();
      div[n] = -gen.uniform();
    }
    const double alpha = gen.uniform();
    const double rho = std::max(1e-3, gen.uniform());
    const auto plan = adq::make_plan(adq::build_score_table(rep, div), masses, alpha, rho);
    const std::size_t budget = adq::keep_budget(rho, items);
    const std::size_t total = std::accumulate(plan.quotas.begin(), plan.quotas.end(), std::size_t{0});
    bool saturated = false;
    for (std::size_t n = 0; n < m; ++n) {
      violations += plan.quotas[n] > masses[n];
      saturated = saturated || plan.quotas[n] == masses[n];
    }
    violations += total > budget;
    if (!saturated) {
      ++tight_checked;
      violations += total + m < budget;
    }
  }
  // alpha = 0 with equal masses reverts to the uniform plan.
  int uniform_mismatch = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t m = 1 + gen.below(20);
    const std::vector<std::size_t> masses(m, 1 + gen.below(1000));
    const std::size_t items = m * masses[0];
    std::vector<double> rep(m), div(m);
    for (std::size_t n = 0; n < m; ++n) {
      rep[n] = gen.normal();
      div[n] = gen.normal();
    }
    const double rho = std::max(1e-3, gen.uniform());
    const auto plan = adq::make_plan(adq::build_score_table(rep, div), masses, 0.0, rho);
    uniform_mismatch += plan.quotas != adq::uniform_quotas(masses, rho, items);
  }
  const std::vector<std::size_t> big(10, 5000);
  const bool dq = adq::uniform_quotas(big, 0.1, 50000) == std::vector<std::size_t>(10, 500);
  return {violations == 0 && uniform_mismatch == 0 && dq,
          fmt("%d law violations in 500 plans (%d tightness checks), %d/100 alpha=0 plans differ from uniform",
              violations, tight_checked, uniform_mismatch)};
}

Outcome ac8() {
  adq::rng::Philox gen(8, 0);
  int bad = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 2 + gen.below(20);
    std::vector<double> x(n);
    for (auto& v : x) v = 100.0 * gen.normal();
    if (*std::min_element(x.begin(), x.end()) == *std::max_element(x.begin(), x.end())) continue;
    const auto y = adq::minmax_normalize(x);
    bad += *std::min_element(y.begin(), y.end()) != 0.0 || *std::max_element(y.begin(), y.end()) != 1.0;
    for (double v : y) bad += v < 0.0 || v > 1.0;
    const double a = 0.1 + 10.0 * gen.uniform(), b = 50.0 * gen.normal();
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = a * x[i] + b;
    const auto yz = adq::minmax_normalize(z);
    for (std::size_t i = 0; i < n; ++i) bad += std::abs(yz[i] - y[i]) > 1e-12;
  }
  const auto flat = adq::minmax_normalize(std::vector<double>(7, -3.25));
  for (double v : flat) bad += v != 0.5;
  return {bad == 0, fmt("%d violations (range, endpoints, affine invariance, degenerate)", bad)};
}

Outcome ac9(const fs::path& scratch) {
  const auto table = adq::gen_synthetic_mixture(6, 80, 6, 1.0, 9);
  adq::DatasetManifest m;
  m.feature_path = scratch / "features.adqf";
  adq::write_features(table, m.feature_path);
  m.labels = table.labels();
  m.sha256 = adq::sha256_file(m.feature_path);
  adq::write_manifest(m, scratch / "manifest.json");

  auto run = [&](const char* name, std::size_t threads) {
    adq::set_thread_cap(threads);
    adq::PipelineConfig c;
    c.manifest = scratch / "manifest.json";
    c.out_dir = scratch / name;
    c.bins = 6;
    c.rho = 0.2;
    c.hidden = 32;
    c.embed = 16;
    adq::run_pipeline(c);
  };
  run("a", 1);
  run("b", 1);
  run("c", 4);
  int differ = 0;
  for (const char* file : {"coreset.txt", "plan.json", "report.json", "coreset.json", "scores.csv", "bins.json"}) {
    const auto a = adq::read_text(scratch / "a" / file);
    differ += a != adq::read_text(scratch / "b" / file);
    differ += a != adq::read_text(scratch / "c" / file);
  }
  return {differ == 0, fmt("%d file differences across repeat and 1-vs-4 thread runs", differ)};
}

Outcome ac10() {
  int closer = 0;
  std::vector<double> first_radius, last_radius;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto f = adq::gen_synthetic_mixture(10, 100, 8, 1.0, 100 + seed);
    const auto bins = adq::generate_bins(f, 10);
    const auto global = adq::feature_centroid(f);
    auto distance = [&](const adq::Bin& bin) {
      std::vector<double> c(f.dim(), 0.0);
      for (auto id : bin.members)
        for (std::size_t k = 0; k < f.dim(); ++k) c[k] += f.row(id)[k];
      double d2 = 0.0;
      for (std::size_t k = 0; k < f.dim(); ++k) {
        const double diff = c[k] / static_cast<double>(bin.size()) - global[k];
        d2 += diff * diff;
      }
      return std::sqrt(d2);
    };
    // Mean member distance to the global centroid, reported for context.
    auto radius = [&](const adq::Bin& bin) {
      double total = 0.0;
      for (auto id : bin.members) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < f.dim(); ++k) d2 += (f.row(id)[k] - global[k]) * (f.row(id)[k] - global[k]);
        total += std::sqrt(d2);
      }
      return total / static_cast<double>(bin.size());
    };
    closer += distance(bins.front()) < distance(bins.back());
    first_radius.push_back(radius(bins.front()));
    last_radius.push_back(radius(bins.back()));
  }
  return {closer >= 14, fmt("bin 1 centroid closer than bin m in %d/20 seeds (need >= 14); "
                            "mean member radius bin 1 %.2f vs bin m %.2f",
                            closer, oracle::mean(first_radius), oracle::mean(last_radius))};
}

Outcome ac11(const fs::path& scratch) {
  const auto table = adq::gen_synthetic_mixture(10, 5000, 64, 1.0, 11);
  adq::DatasetManifest m;
  m.feature_path = scratch / "features.adqf";
  adq::write_features(table, m.feature_path);
  m.sha256 = adq::sha256_file(m.feature_path);
  adq::write_manifest(m, scratch / "manifest.json");
  adq::set_thread_cap(0);
  adq::PipelineConfig c;
  c.manifest = scratch / "manifest.json";
  c.out_dir = scratch / "out";
  const auto report = adq::run_pipeline(c);
  double bins = -1.0;
  for (const auto& t : report.timings)
    if (t.stage == "bins") bins = t.seconds;
  return {bins >= 0.0 && bins < 60.0,
          fmt("bin generation %.2f s for M=50000, d=64, m=10 (end-to-end %.2f s)", bins, report.total_seconds)};
}

}  // namespace

int main() {
  const oracle::TempDir scratch("acceptance");
  fs::create_directories(scratch.path() / "ac9");
  fs::create_directories(scratch.path() / "ac11");
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"AC1 oracle equivalence", ac1},
      {"AC2 gain identity", ac2},
      {"AC3 partition laws", ac3},
      {"AC4 texture oracle", ac4},
      {"AC5 diversity closed forms", ac5},
      {"AC6 gradient check", ac6},
      {"AC7 sampling-plan laws", ac7},
      {"AC8 normalization laws", ac8},
      {"AC9 determinism", [&] { return ac9(scratch.path() / "ac9"); }},
      {"AC10 early-bin representativeness", ac10},
      {"AC11 performance bound", [&] { return ac11(scratch.path() / "ac11"); }},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failed += !outcome.pass;
    std::printf("%s %s: %s\n", outcome.pass ? "PASS" : "FAIL", name, outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
