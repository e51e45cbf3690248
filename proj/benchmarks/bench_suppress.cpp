#include <benchmark/benchmark.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "nohnms/suppression.hpp"

namespace {

using namespace nohnms;

// Crowded frame: n/8 people with 8 jittered proposals each.
std::vector<Detection> crowd(std::size_t n) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<BBox> people;
  for (std::size_t i = 0; i < std::max<std::size_t>(1, n / 8); ++i) {
    const double h = 60 + 180 * u(rng);
    people.emplace_back(1880 * u(rng), 1000 * u(rng), h / 2.44, h);
  }
  std::vector<Detection> out;
  for (std::size_t i = 0; i < n; ++i) {
    const BBox& p = people[i % people.size()];
    const BBox box(p.x() + 0.08 * p.w() * g(rng), p.y() + 0.08 * p.h() * g(rng), p.w() * std::exp(0.08 * g(rng)),
                   p.h() * std::exp(0.08 * g(rng)));
    out.push_back(Detection{box, std::clamp(iou(box, p) + 0.05 * g(rng), 0.01, 1.0), u(rng),
                            RelCoeffs{0.3 * g(rng), 0.05 * g(rng), 0.05 * g(rng), 0.05 * g(rng)}, i});
  }
  return out;
}

void run(benchmark::State& state, Method method, bool capped, bool reference) {
  const auto dets = crowd(static_cast<std::size_t>(state.range(0)));
  SuppressionConfig cfg;
  cfg.method = method;
  if (!capped) cfg.max_detections = std::nullopt;
  for (auto _ : state) {
    auto result = reference ? suppress_reference(dets, cfg) : suppress(dets, cfg);
    benchmark::DoNotOptimize(result.kept.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Suppress(benchmark::State& s, Method m) { run(s, m, true, false); }
void BM_SuppressUncapped(benchmark::State& s, Method m) { run(s, m, false, false); }
void BM_Reference(benchmark::State& s, Method m) { run(s, m, false, true); }

#define NOHNMS_METHOD_BENCH(fn, m) \
  BENCHMARK_CAPTURE(fn, m, Method::m)->RangeMultiplier(10)->Range(100, 10000)->Unit(benchmark::kMillisecond)

NOHNMS_METHOD_BENCH(BM_Suppress, Greedy);
NOHNMS_METHOD_BENCH(BM_Suppress, SoftLinear);
NOHNMS_METHOD_BENCH(BM_Suppress, SoftGaussian);
NOHNMS_METHOD_BENCH(BM_Suppress, Adaptive);
NOHNMS_METHOD_BENCH(BM_Suppress, Noh);
NOHNMS_METHOD_BENCH(BM_SuppressUncapped, Greedy);
NOHNMS_METHOD_BENCH(BM_SuppressUncapped, SoftGaussian);
NOHNMS_METHOD_BENCH(BM_SuppressUncapped, Noh);
BENCHMARK_CAPTURE(BM_Reference, Noh, Method::Noh)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
