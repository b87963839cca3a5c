// Serial reference vs OpenMP kernels. Thread count follows OMP_NUM_THREADS /
// DWC_SIM_THREADS; on a single core the two columns should be close.

#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "dwc/kernels.hpp"
#include "dwc/lstm.hpp"

using namespace dwc;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(r, c);
  for (double& v : m.data) v = u(eng);
  return m;
}

Vector random_vector(std::size_t n, std::uint64_t seed) {
  return random_matrix(1, n, seed).data;
}

template <bool Parallel>
void BM_Gemv(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, 1);
  const Vector x = random_vector(n, 2);
  Vector y(n);
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::gemv(a, x, y);
    else
      kernels::reference::gemv(a, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

template <bool Parallel>
void BM_GemvT(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, 3);
  const Vector x = random_vector(n, 4);
  Vector y(n, 0.0);
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::gemv_t_acc(a, x, y);
    else
      kernels::reference::gemv_t_acc(a, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

template <bool Parallel>
void BM_Outer(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Matrix g(n, n);
  const Vector u = random_vector(n, 5), v = random_vector(n, 6);
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::outer_acc(g, u, v);
    else
      kernels::reference::outer_acc(g, u, v);
    benchmark::DoNotOptimize(g.data.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

template <bool Parallel>
void BM_LossAndGradient(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const std::size_t batch = 64;
  const auto params = lstm::initialize(hidden, 7);
  const Matrix feats = random_matrix(batch, 40, 8);
  const Matrix labels = random_matrix(batch, 2, 9);
  std::vector<std::size_t> rows(batch);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  for (auto _ : state) {
    auto lg = lstm::loss_and_gradient(params, feats, labels, rows, Parallel);
    benchmark::DoNotOptimize(lg.loss);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}

}  // namespace

BENCHMARK(BM_Gemv<false>)->Name("gemv/reference")->RangeMultiplier(4)->Range(32, 2048);
BENCHMARK(BM_Gemv<true>)->Name("gemv/openmp")->RangeMultiplier(4)->Range(32, 2048);
BENCHMARK(BM_GemvT<false>)->Name("gemv_t_acc/reference")->RangeMultiplier(4)->Range(32, 2048);
BENCHMARK(BM_GemvT<true>)->Name("gemv_t_acc/openmp")->RangeMultiplier(4)->Range(32, 2048);
BENCHMARK(BM_Outer<false>)->Name("outer_acc/reference")->RangeMultiplier(4)->Range(32, 2048);
BENCHMARK(BM_Outer<true>)->Name("outer_acc/openmp")->RangeMultiplier(4)->Range(32, 2048);
BENCHMARK(BM_LossAndGradient<false>)->Name("loss_and_gradient/serial")->Arg(32)->Arg(120)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LossAndGradient<true>)->Name("loss_and_gradient/parallel")->Arg(32)->Arg(120)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
