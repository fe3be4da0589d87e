#include <benchmark/benchmark.h>

#include <vector>

#include "t2iattack/attack.hpp"
#include "t2iattack/divergence.hpp"
#include "t2iattack/random.hpp"

namespace {

using namespace t2ia;

Embedding random_unit(Rng& rng, std::size_t d) {
  std::vector<double> v(d);
  for (auto& x : v) x = rng.gaussian();
  return l2_normalize(v);
}

EmbeddingBatch random_batch(Rng& rng, std::size_t n, std::size_t d) {
  EmbeddingBatch b;
  for (std::size_t i = 0; i < n; ++i) b.embeddings.push_back(random_unit(rng, d));
  return b;
}

void BM_Mmd2(benchmark::State& state) {
  Rng rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_batch(rng, n, 512);
  const auto y = random_batch(rng, n, 512);
  const Embedding t = random_unit(rng, 512);
  for (auto _ : state) benchmark::DoNotOptimize(mmd2({t, t, x, y}));
}
BENCHMARK(BM_Mmd2)->Arg(1)->Arg(15)->Arg(64);

void BM_Kl2(benchmark::State& state) {
  Rng rng(2);
  std::vector<Embedding> corpus;
  for (int i = 0; i < state.range(0); ++i) corpus.push_back(random_unit(rng, 512));
  const auto images = random_batch(rng, 15, 512);
  const Embedding t = random_unit(rng, 512);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        kl2_bound({t, t, images, images}, std::span<const Embedding>(corpus), 100.0));
  }
}
BENCHMARK(BM_Kl2)->Arg(100)->Arg(1000);

void BM_WelchT(benchmark::State& state) {
  Rng rng(3);
  std::vector<double> a(15), b(15);
  for (auto& v : a) v = rng.gaussian();
  for (auto& v : b) v = rng.gaussian();
  for (auto _ : state) benchmark::DoNotOptimize(welch_t(a, b));
}
BENCHMARK(BM_WelchT);

void BM_Levenshtein(benchmark::State& state) {
  const std::string a = "a photograph of an astronaut riding a horse on the moon";
  const std::string b = "a ph0tograph of an astronuat ridin a HORSE on teh moon";
  for (auto _ : state) benchmark::DoNotOptimize(levenshtein(a, b));
}
BENCHMARK(BM_Levenshtein);

void BM_GenerateCandidates(benchmark::State& state) {
  const Sentence s = tokenize("a red ball on green grass");
  const auto rule = static_cast<RuleKind>(state.range(0));
  Rng rng(4);
  for (auto _ : state) benchmark::DoNotOptimize(generate_candidates(s, 2, rule, 5, rng));
}
BENCHMARK(BM_GenerateCandidates)->DenseRange(0, 2);

void BM_SyntheticGenerate(benchmark::State& state) {
  SyntheticVictimSpec spec;
  spec.keyword_sensitivity = SyntheticVictimSpec::bundled_keywords();
  SyntheticOracle oracle(spec, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(oracle.generate("a red ball on green grass", 15, EncoderRole::kAttack));
  }
}
BENCHMARK(BM_SyntheticGenerate);

void BM_RunAttack(benchmark::State& state) {
  SyntheticVictimSpec spec;
  spec.keyword_sensitivity = SyntheticVictimSpec::bundled_keywords();
  SyntheticOracle oracle(spec, 6);
  AttackConfig config;
  config.objective = DivergenceObjective::two_sample();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        run_attack("a small red ball rolls across the wet green grass", config, oracle));
  }
}
BENCHMARK(BM_RunAttack)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
