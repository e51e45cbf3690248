#include <benchmark/benchmark.h>

#include "nohnms/cli/commands.hpp"

namespace {

using namespace nohnms;

const cli::SyntheticDataset& dataset() {
  static const cli::SyntheticDataset data = [] {
    GeneratorConfig gen;
    gen.scenes = 100;
    OracleConfig oracle;
    oracle.perfect = true;
    return cli::synthesize(gen, oracle);
  }();
  return data;
}

void BM_Synthesize(benchmark::State& state) {
  GeneratorConfig gen;
  gen.scenes = 100;
  for (auto _ : state) benchmark::DoNotOptimize(cli::synthesize(gen, OracleConfig{}).detections.size());
}
BENCHMARK(BM_Synthesize)->Unit(benchmark::kMillisecond);

void BM_Evaluate(benchmark::State& state) {
  const auto& data = dataset();
  for (auto _ : state) {
    benchmark::DoNotOptimize(cli::evaluate_records(data.scenes, data.detections, EvalOptions{}).ap);
  }
}
BENCHMARK(BM_Evaluate)->Unit(benchmark::kMillisecond);

void BM_SuppressAndEvaluate(benchmark::State& state) {
  const auto& data = dataset();
  SuppressionConfig cfg;
  cfg.method = Method::Noh;
  for (auto _ : state) {
    const auto kept = cli::suppress_records(data.detections, cfg);
    benchmark::DoNotOptimize(cli::evaluate_records(data.scenes, kept, EvalOptions{}).ap);
  }
}
BENCHMARK(BM_SuppressAndEvaluate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
