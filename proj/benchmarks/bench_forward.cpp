#include <benchmark/benchmark.h>

#include <random>

#include "eif/compute/ops.hpp"
#include "eif/compute/parameter.hpp"
#include "eif/compute/tape.hpp"
#include "eif/model/model.hpp"

namespace {

eif::Tensor random_input(std::size_t t, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist;
  eif::Tensor x(eif::Shape{1, t, n, 1});
  for (double& v : x.mutable_data()) v = dist(gen);
  return x;
}

void forward(benchmark::State& state, eif::Arch arch) {
  eif::ModelConfig c;
  c.arch = arch;
  const auto n = static_cast<std::size_t>(state.range(0));
  if (arch == eif::Arch::kFeatMlp) c.featmlp_entities = n;
  eif::ForecastModel model(c);
  const eif::Tensor x = random_input(c.history_len, n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(x));
  state.SetComplexityN(state.range(0));
}

void BM_ForwardEiFormer(benchmark::State& s) { forward(s, eif::Arch::kEiFormer); }
void BM_ForwardIVariate(benchmark::State& s) { forward(s, eif::Arch::kIVariate); }
void BM_ForwardFeatMlp(benchmark::State& s) { forward(s, eif::Arch::kFeatMlp); }
void BM_ForwardLinear(benchmark::State& s) { forward(s, eif::Arch::kLinear); }

void BM_TrainStepEiFormer(benchmark::State& state) {
  eif::ModelConfig c;
  const auto n = static_cast<std::size_t>(state.range(0));
  eif::ForecastModel model(c);
  const eif::Tensor x = random_input(c.history_len, n, 2);
  const eif::Tensor y = random_input(c.forecast_len, n, 3);
  for (auto _ : state) {
    eif::Tape tape;
    eif::TapeScope scope(tape);
    eif::Tensor loss = eif::ops::mae_loss(model.forward(x), y);
    tape.backward(loss);
    eif::zero_grads(model.parameters());
  }
  state.SetComplexityN(state.range(0));
}

}  // namespace

BENCHMARK(BM_ForwardEiFormer)->RangeMultiplier(4)->Range(64, 16384)->Complexity(benchmark::oN);
BENCHMARK(BM_ForwardIVariate)->RangeMultiplier(4)->Range(64, 4096)->Complexity(benchmark::oNSquared);
BENCHMARK(BM_ForwardFeatMlp)->RangeMultiplier(4)->Range(64, 4096)->Complexity();
BENCHMARK(BM_ForwardLinear)->RangeMultiplier(4)->Range(64, 16384)->Complexity(benchmark::oN);
BENCHMARK(BM_TrainStepEiFormer)->RangeMultiplier(4)->Range(64, 1024)->Complexity(benchmark::oN);
BENCHMARK_MAIN();
