#include <cmath>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "seqaug/autodiff.hpp"
#include "seqaug/metrics.hpp"
#include "seqaug/nn.hpp"
#include "seqaug/rng.hpp"

namespace {

void BM_MmdRbf(benchmark::State& state) {
  const auto n = state.range(0);
  seqaug::Rng rng(1);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(n, 4), y(n, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    x.data()[i] = normal(rng);
    y.data()[i] = normal(rng) + 0.5;
  }
  for (auto _ : state) benchmark::DoNotOptimize(seqaug::metrics::mmd_rbf(x, y, 1.0));
  state.SetComplexityN(n);
}
BENCHMARK(BM_MmdRbf)->Range(128, 2048)->Complexity();

void BM_KendallTau(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  seqaug::Rng rng(2);
  std::normal_distribution<double> normal;
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::round(normal(rng) * 10.0);
    y[i] = x[i] + normal(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(seqaug::metrics::kendall_tau_b(x, y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KendallTau)->Range(1 << 10, 1 << 16)->Complexity();

void BM_BiLstmForwardBackward(benchmark::State& state) {
  namespace ad = seqaug::ad;
  const auto hidden = state.range(0);
  seqaug::Rng rng(3);
  seqaug::nn::ParameterStore store;
  auto lstm = seqaug::nn::BiLstmStack::create(store, "lstm", 29, hidden, 1, rng);
  auto head = seqaug::nn::Linear::create(store, "head", lstm.output_size(), 1, rng);
  std::vector<ad::Var> xs;
  for (int t = 0; t < 48; ++t) xs.emplace_back(ad::Matrix::Random(32, 29));
  for (auto _ : state) {
    auto hs = lstm(xs);
    auto loss = ad::mean(head(hs.back()));
    benchmark::DoNotOptimize(ad::grad(loss, store.vars()));
  }
}
BENCHMARK(BM_BiLstmForwardBackward)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
