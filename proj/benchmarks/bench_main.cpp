#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "gatr/autodiff/tape.hpp"
#include "gatr/ga/multivector.hpp"
#include "gatr/model/backend.hpp"
#include "gatr/nbody/experiment.hpp"
#include "gatr/nn/primitives.hpp"

using namespace gatr;

namespace {

template <class T>
nn::Tensor<T> random_tensor(typename nn::Tensor<T>::Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  nn::Tensor<T> t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = static_cast<T>(n(rng));
  return t;
}

const nbody::Dataset& bench_data() {
  static const nbody::Dataset d = nbody::generate_dataset(1, 64, 3, {0.0, 0.0, 0.0});
  return d;
}

nbody::Batch bench_batch(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return nbody::make_batch(bench_data(), idx);
}

void BM_GeometricProduct(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  ga::Multivector x, y;
  for (int b = 0; b < ga::kNumBlades; ++b) {
    x[b] = n(rng);
    y[b] = n(rng);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(x * y);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_GeometricProduct);

template <class T>
void BM_EquiLinear(benchmark::State& state) {
  const std::size_t c = static_cast<std::size_t>(state.range(0));
  const auto x = random_tensor<T>({64, 4, c, 16}, 1);
  const auto w = random_tensor<T>({c, c, nn::kNumLinearBasis, 1}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(nn::equi_linear(x, w));
  state.SetItemsProcessed(state.iterations() * 64 * 4);
}
BENCHMARK(BM_EquiLinear<float>)->Arg(8)->Arg(16);
BENCHMARK(BM_EquiLinear<double>)->Arg(8)->Arg(16);

template <class T>
void BM_ModelForward(benchmark::State& state) {
  const nbody::Model m = nbody::make_model(nbody::ModelKind::gatr, nlohmann::json::object(), 4, 0);
  const nbody::Batch batch = bench_batch(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(nbody::predict<T>(m, batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ModelForward<float>)->Arg(1)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ModelForward<double>)->Arg(1)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ModelForwardBackward(benchmark::State& state) {
  const nbody::Model m = nbody::make_model(nbody::ModelKind::gatr, nlohmann::json::object(), 4, 0);
  const nbody::Batch batch = bench_batch(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    ad::Tape tape;
    model::TapeBackend b(tape, m.params);
    const ad::Var loss = tape.squared_error(nbody::predict_tape(b, m, batch), b.input(batch.target));
    tape.backward(loss);
    benchmark::DoNotOptimize(b.gradients());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ModelForwardBackward)->Arg(1)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const auto kind = static_cast<nbody::ModelKind>(state.range(0));
  nbody::Model m = nbody::make_model(kind, nlohmann::json::object(), 4, 0);
  nbody::TrainConfig tc;
  tc.steps = 1;
  tc.batch_size = 64;
  for (auto _ : state) benchmark::DoNotOptimize(nbody::train(m, bench_data(), tc));
  state.SetLabel(nbody::to_string(kind));
}
BENCHMARK(BM_TrainStep)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
