#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include <qstrat/comb.hpp>
#include <qstrat/hermitian_eigen.hpp>
#include <qstrat/labeled_operator.hpp>
#include <qstrat/lowering.hpp>
#include <qstrat/programs.hpp>
#include <qstrat/solver.hpp>

using namespace qstrat;

namespace {

CMatrix random_hermitian(std::mt19937_64& gen, Eigen::Index d) {
  std::normal_distribution<double> nd;
  CMatrix m(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) m(i, j) = Complex(nd(gen), nd(gen));
  }
  return 0.5 * (m + m.adjoint());
}

// Qubit systems A1 B1 ... Ak Bk.
SystemList qubit_rounds(int k) {
  SystemList s;
  for (int i = 1; i <= k; ++i) {
    s.push_back({"A" + std::to_string(i), 2});
    s.push_back({"B" + std::to_string(i), 2});
  }
  return s;
}

std::pair<StrategyChoi, StrategyChoi> gadc_pair(std::size_t n) {
  return {n_fold_sequential_choi(gadc_choi({0.2, 0.3}), n), n_fold_sequential_choi(gadc_choi({0.3, 0.3}), n)};
}

void BM_PartialTraceLast(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  std::mt19937_64 gen(1);
  const SystemList s = qubit_rounds(k);
  const LabeledOperator m(s, random_hermitian(gen, static_cast<Eigen::Index>(total_dim(s))));
  const std::string last = "B" + std::to_string(k);
  for (auto _ : state) benchmark::DoNotOptimize(partial_trace(m, {last}));
}
BENCHMARK(BM_PartialTraceLast)->DenseRange(1, 3);

void BM_HermitianEigen(benchmark::State& state) {
  std::mt19937_64 gen(2);
  const CMatrix m = random_hermitian(gen, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(linalg::hermitian_eigen(m, true));
}
BENCHMARK(BM_HermitianEigen)->RangeMultiplier(4)->Range(4, 64);

void BM_LowerDistancePrimal(benchmark::State& state) {
  const auto [a, b] = gadc_pair(static_cast<std::size_t>(state.range(0)));
  const auto p = build_distance_primal(a, b);
  for (auto _ : state) benchmark::DoNotOptimize(lower_to_standard(p));
}
BENCHMARK(BM_LowerDistancePrimal)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

void BM_LowerDistancePrimalDualForm(benchmark::State& state) {
  const auto [a, b] = gadc_pair(static_cast<std::size_t>(state.range(0)));
  const auto p = build_distance_primal(a, b);
  for (auto _ : state) benchmark::DoNotOptimize(lower_to_dual_form(p));
}
BENCHMARK(BM_LowerDistancePrimalDualForm)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

void BM_EvaluateDistance(benchmark::State& state) {
  const auto [a, b] = gadc_pair(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(Quantity::distance, a, b, 0.0, Mode::adaptive));
}
BENCHMARK(BM_EvaluateDistance)->DenseRange(1, 2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
