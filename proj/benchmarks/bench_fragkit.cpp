#include <benchmark/benchmark.h>

#include <random>

#include "fragkit/feature_config.hpp"
#include "fragkit/features_advanced.hpp"
#include "fragkit/learn/machine.hpp"
#include "fragkit/similarity.hpp"

using namespace fragkit;

namespace {

Bytes random_fragment(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Bytes b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  return b;
}

Dataset two_blobs(std::size_t per_class, std::size_t features) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0, 1);
  Dataset ds;
  ds.samples.resize(static_cast<Eigen::Index>(2 * per_class), static_cast<Eigen::Index>(features));
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const auto c = static_cast<std::uint32_t>(i % 2);
    for (std::size_t j = 0; j < features; ++j) ds.samples(i, j) = 1.5 * c + noise(rng);
    ds.labels.push_back(c);
    ds.file_ids.push_back(i);
  }
  ds.class_names = {"a", "b"};
  for (std::size_t j = 0; j < features; ++j) ds.descriptors.push_back("f" + std::to_string(j));
  return ds;
}

void BM_TextConfigExtract(benchmark::State& state) {
  const auto config = text_fragment_config();
  const auto frag = random_fragment(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(config.extract(frag));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_TextConfigExtract)->Arg(1024)->Arg(4096);

void BM_ChaoticFeatures(benchmark::State& state) {
  const auto frag = random_fragment(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(features::chaotic_features(frag, {}));
}
BENCHMARK(BM_ChaoticFeatures)->Arg(512)->Arg(1024);

void BM_Gist(benchmark::State& state) {
  const auto frag = random_fragment(1024, 3);
  const features::GistParams p;
  for (auto _ : state) benchmark::DoNotOptimize(features::gist_features(frag, p));
}
BENCHMARK(BM_Gist);

void BM_LongestCommonSubsequence(benchmark::State& state) {
  const auto a = random_fragment(static_cast<std::size_t>(state.range(0)), 4);
  const auto b = random_fragment(static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(similarity::longest_common_subsequence(a, b));
}
BENCHMARK(BM_LongestCommonSubsequence)->Arg(1024)->Arg(4096);

void BM_TrainMachine(benchmark::State& state) {
  const auto ds = two_blobs(static_cast<std::size_t>(state.range(1)), 20);
  learn::TrainOptions o;
  o.kind = static_cast<learn::MachineKind>(state.range(0));
  o.split = {0, 1, 80, 20};
  for (auto _ : state) benchmark::DoNotOptimize(learn::train_machine(ds, o));
  state.SetLabel(learn::to_string(o.kind));
}
BENCHMARK(BM_TrainMachine)
    ->Args({static_cast<int>(learn::MachineKind::Tree), 3000})
    ->Args({static_cast<int>(learn::MachineKind::Forest), 1000})
    ->Args({static_cast<int>(learn::MachineKind::Lda), 3000})
    ->Args({static_cast<int>(learn::MachineKind::NaiveBayes), 1000})
    ->Args({static_cast<int>(learn::MachineKind::Svm), 500})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
