#include <benchmark/benchmark.h>

#include "aslab/aggregation.hpp"
#include "aslab/attribution.hpp"
#include "aslab/felzenszwalb.hpp"
#include "aslab/ops.hpp"
#include "aslab/parallel.hpp"
#include "aslab/resolve.hpp"
#include "aslab/sweep.hpp"
#include "aslab/train.hpp"

using namespace aslab;

namespace {

Tensor noise(Rng& rng, Shape shape) {
  Tensor t(std::move(shape));
  for (float& v : t.values()) v = rng.uniform();
  return t;
}

Model net(std::size_t f, std::size_t side) {
  return Model::build(mnist_spec(f, side, 16, 5, 10), 1);
}

}  // namespace

static void BM_Conv2dForward(benchmark::State& state) {
  const auto f = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor x = noise(rng, {16, 64, 64});
  const Tensor k = noise(rng, {16, 16, f, f});
  const Tensor b({16}, 0.0f);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_forward(x, k, b, static_cast<int>(f / 2)));
  state.SetItemsProcessed(state.iterations() * 16 * 16 * 64 * 64 * static_cast<int64_t>(f * f));
}
BENCHMARK(BM_Conv2dForward)->Arg(1)->Arg(3)->Arg(5)->Arg(7)->Unit(benchmark::kMillisecond);

// One SGD sample: forward, loss, backward.
static void BM_TrainStep(benchmark::State& state) {
  const auto f = static_cast<std::size_t>(state.range(0));
  Model m = net(f, 64);
  Rng rng(2);
  const Tensor img = noise(rng, {1, 64, 64});
  for (auto _ : state) {
    const ForwardTrace tr = m.forward(img);
    const LossResult loss = softmax_ce_loss(tr.logits, 3);
    benchmark::DoNotOptimize(m.parameter_gradients(tr, loss.logit_grad));
  }
}
BENCHMARK(BM_TrainStep)->Arg(1)->Arg(3)->Arg(5)->Arg(7)->Unit(benchmark::kMillisecond);

static void BM_Saliency(benchmark::State& state) {
  const Model m = net(5, 64);
  Rng rng(3);
  const Tensor img = noise(rng, {1, 64, 64});
  for (auto _ : state) benchmark::DoNotOptimize(compute_saliency(m, img, 4));
}
BENCHMARK(BM_Saliency)->Unit(benchmark::kMillisecond);

static void BM_SmoothGrad(benchmark::State& state) {
  const std::size_t saved = max_workers();
  set_max_workers(static_cast<std::size_t>(state.range(0)));
  const Model m = net(5, 64);
  Rng rng(4);
  const Tensor img = noise(rng, {1, 64, 64});
  for (auto _ : state) benchmark::DoNotOptimize(smoothgrad(m, img, 4, 0.15, 10, 7));
  set_max_workers(saved);
}
BENCHMARK(BM_SmoothGrad)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_Felzenszwalb(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  Rng rng(5);
  const Tensor img = noise(rng, {3, side, side});
  for (auto _ : state) benchmark::DoNotOptimize(felzenszwalb(img, {}));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(side * side));
}
BENCHMARK(BM_Felzenszwalb)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_SmoothResolve(benchmark::State& state) {
  Rng rng(6);
  ScoreMap m(1, 128, 128);
  for (float& v : m.values) v = rng.uniform();
  m.normalized = true;
  for (auto _ : state) benchmark::DoNotOptimize(resolve_smooth(std::span(&m, 1), 0.3f));
}
BENCHMARK(BM_SmoothResolve)->Unit(benchmark::kMicrosecond);

// Incremental single-pass sweep vs re-resolving the 50-point grid.
static void BM_ThresholdSweep(benchmark::State& state) {
  const bool naive = state.range(0) != 0;
  Rng rng(7);
  std::vector<SweepItem> items(200);
  std::vector<ScoreMap> maps;
  for (SweepItem& item : items) {
    ScoreMap m(3, 64, 64);
    for (float& v : m.values) v = rng.uniform();
    m.normalized = true;
    item.prepared = prepare_basic(std::span(&m, 1));
    item.gt = LabelMask(64, 64);
    for (auto& p : item.gt.pixels) p = rng.bernoulli(0.3) ? 3 : 0;
    maps.push_back(std::move(m));
  }
  const std::vector<float> grid = default_tau_grid();
  auto resolve = [&](const SweepItem& item, float tau) {
    return resolve_basic(std::span(&maps[static_cast<std::size_t>(&item - items.data())], 1), tau);
  };
  for (auto _ : state) {
    if (naive) {
      benchmark::DoNotOptimize(threshold_sweep_naive(items, grid, 11, resolve));
    } else {
      benchmark::DoNotOptimize(threshold_sweep(items, grid, 11));
    }
  }
}
BENCHMARK(BM_ThresholdSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
