// SPDX-License-Identifier: Apache-2.0
// Parallel kernels vs their serial / naive counterparts.

#include <benchmark/benchmark.h>

#include <numeric>

#include "adq/bins.hpp"
#include "adq/dataset.hpp"
#include "adq/reference.hpp"
#include "adq/rng.hpp"
#include "adq/texture.hpp"

namespace {

adq::FeatureTable mixture(std::size_t items, std::size_t dim) {
  return adq::gen_synthetic_mixture(10, items / 10, dim, 1.0, 7);
}

void BM_BinsParallel(benchmark::State& state) {
  const auto features = mixture(state.range(0), 64);
  for (auto _ : state) benchmark::DoNotOptimize(adq::generate_bins(features, 10, adq::Execution::Parallel));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BinsSerial(benchmark::State& state) {
  const auto features = mixture(state.range(0), 64);
  for (auto _ : state) benchmark::DoNotOptimize(adq::generate_bins(features, 10, adq::Execution::Serial));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BinsNaive(benchmark::State& state) {
  const auto features = mixture(state.range(0), 16);
  for (auto _ : state) benchmark::DoNotOptimize(adq::reference::generate_bins_naive(features, 10));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

adq::ImageTable noise_images(std::size_t count, std::size_t side) {
  std::vector<std::uint8_t> pixels(count * side * side * 3);
  adq::rng::Philox gen(3, 0);
  for (auto& p : pixels) p = static_cast<std::uint8_t>(gen.below(256));
  return adq::ImageTable(count, side, side, 3, std::move(pixels));
}

void representativeness(benchmark::State& state, adq::Execution execution) {
  const auto images = noise_images(state.range(0), 32);
  adq::Bin bin{1, std::vector<std::size_t>(images.size())};
  std::iota(bin.members.begin(), bin.members.end(), std::size_t{0});
  for (auto _ : state) benchmark::DoNotOptimize(adq::bin_representativeness(bin, images, 8, execution));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_RepParallel(benchmark::State& state) { representativeness(state, adq::Execution::Parallel); }
void BM_RepSerial(benchmark::State& state) { representativeness(state, adq::Execution::Serial); }

}  // namespace

BENCHMARK(BM_BinsParallel)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BinsSerial)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BinsNaive)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RepParallel)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RepSerial)->Arg(256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
