#include <benchmark/benchmark.h>

#include <random>

#include "emofuse/adam.hpp"
#include "emofuse/autodiff.hpp"
#include "emofuse/model.hpp"
#include "emofuse/ops.hpp"
#include "emofuse/spectrogram.hpp"

namespace {

using namespace emofuse;

Tensor random_tensor(std::vector<std::int64_t> shape, std::uint64_t seed,
                     bool requires_grad = false) {
  Tensor t(std::move(shape), requires_grad);
  std::mt19937_64 rng(seed);
  for (double& v : t.data()) {
    v = double(rng() >> 11) * 0x1.0p-52 - 1.0;
  }
  return t;
}

void Conv2dForward(benchmark::State& state) {
  const Tensor input = random_tensor({20, 98, 80}, 1);
  const Tensor kernels = random_tensor({32, 20, 5, 5}, 2);
  const Tensor bias = random_tensor({32}, 3);
  for (auto _ : state) {
    Tensor out = conv2d(input, kernels, bias, 1, 2);
    benchmark::DoNotOptimize(out.data().data());
  }
  state.SetItemsProcessed(state.iterations() * 32 * 98 * 80 * 20 * 25);
}
BENCHMARK(Conv2dForward);

void Conv2dTrainStep(benchmark::State& state) {
  Tensor input = random_tensor({20, 98, 80}, 1);
  Tensor kernels = random_tensor({32, 20, 5, 5}, 2, true);
  Tensor bias = random_tensor({32}, 3, true);
  for (auto _ : state) {
    Tape tape;
    Tensor out = conv2d(input, kernels, bias, 1, 2, &tape);
    Tensor loss = sum(out, &tape);
    tape.backward(loss);
    kernels.zero_grad();
    bias.zero_grad();
    benchmark::DoNotOptimize(loss.at(0));
  }
}
BENCHMARK(Conv2dTrainStep);

void FullModelForward(benchmark::State& state) {
  ModelConfig config;
  const FusionModel model = init_model(config);
  const Tensor stack = random_tensor({20, 98, 80}, 7);
  const Tensor spec = random_tensor({1, 192, 120}, 8);
  for (auto _ : state) {
    Tensor scores = forward_fused(model, stack, spec);
    benchmark::DoNotOptimize(scores.data().data());
  }
}
BENCHMARK(FullModelForward);

void FullModelTrainStep(benchmark::State& state) {
  ModelConfig config;
  FusionModel model = init_model(config);
  for (Tensor& p : model.params) p.zero_grad();
  AdamState adam(model.params, {});
  const Tensor stack = random_tensor({20, 98, 80}, 7);
  const Tensor spec = random_tensor({1, 192, 120}, 8);
  for (auto _ : state) {
    Tape tape;
    Tensor scores = forward_fused(model, stack, spec, &tape);
    Tensor loss = cross_entropy(softmax(scores, &tape), 0, &tape);
    tape.backward(loss);
    adam_step(model.params, adam);
    for (Tensor& p : model.params) p.zero_grad();
    benchmark::DoNotOptimize(loss.at(0));
  }
}
BENCHMARK(FullModelTrainStep);

void StftDefaultWindow(benchmark::State& state) {
  AudioClip clip;
  clip.sample_rate_hz = 16000;
  clip.samples.resize(16000);
  std::mt19937_64 rng(5);
  for (double& s : clip.samples) {
    s = double(rng() >> 11) * 0x1.0p-52 - 1.0;
  }
  for (auto _ : state) {
    ComplexGrid grid = stft(clip, 384, 256);
    benchmark::DoNotOptimize(grid.values.data());
  }
}
BENCHMARK(StftDefaultWindow);

}  // namespace

BENCHMARK_MAIN();
