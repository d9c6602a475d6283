#include <benchmark/benchmark.h>

#include "combforge/games.hpp"
#include "combforge/kernels.hpp"
#include "combforge/random.hpp"

using namespace combforge;

namespace {

struct SchurCase {
  RealSdp sdp;
  std::vector<Eigen::MatrixXd> w;
};

SchurCase make_case(int slots, std::size_t outcomes) {
  std::vector<int> dims(static_cast<std::size_t>(2 * slots), 2);
  const auto sk = parent_skeleton(Signature::tester(dims), outcomes);
  SchurCase c{compile_sdp(sk.problem).real, {}};
  Rng rng(17);
  std::normal_distribution<double> n01;
  for (int n : c.sdp.block_sizes) {
    Eigen::MatrixXd g(n, n);
    for (auto& v : g.reshaped()) v = n01(rng);
    c.w.push_back(g * g.transpose() + Eigen::MatrixXd::Identity(n, n));
  }
  return c;
}

template <bool Parallel>
void BM_Schur(benchmark::State& state) {
  const auto c = make_case(static_cast<int>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) {
    auto m = Parallel ? schur_complement_parallel(c.sdp.rows, c.w) : schur_complement_serial(c.sdp.rows, c.w);
    benchmark::DoNotOptimize(m.data());
  }
  state.counters["rows"] = static_cast<double>(c.sdp.rows.size());
}

std::vector<HermitianOperator> random_states(std::size_t count, const Signature& sig, Rng& rng) {
  std::vector<HermitianOperator> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(random_state(sig, rng));
  return out;
}

template <bool Parallel>
void BM_Overlap(benchmark::State& state) {
  Rng rng(5);
  const std::vector<int> dims(static_cast<std::size_t>(state.range(1)), 2);
  const Signature sig = Signature::tester(dims);
  const auto a = random_states(static_cast<std::size_t>(state.range(0)), sig, rng);
  const auto b = random_states(static_cast<std::size_t>(state.range(0)), sig, rng);
  for (auto _ : state) {
    auto t = Parallel ? overlap_table_parallel(a, b) : overlap_table_serial(a, b);
    benchmark::DoNotOptimize(t.data());
  }
}

void BM_RobustnessSolve(benchmark::State& state) {
  Rng rng(3);
  const int slots = static_cast<int>(state.range(0));
  std::vector<int> dims(static_cast<std::size_t>(2 * slots), 2);
  std::vector<QuantumTester> t;
  for (int i = 0; i < 2; ++i) t.push_back(random_tester(dims, 2, std::vector<int>(static_cast<std::size_t>(slots), 2), rng));
  const auto c = make_collection(std::move(t));
  IncompatOptions opts;
  opts.solver.ipm.parallel_schur = state.range(1) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(robustness(c, opts).value);
}

}  // namespace

BENCHMARK(BM_Schur<false>)->Args({1, 4})->Args({1, 16})->Args({2, 4})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Schur<true>)->Args({1, 4})->Args({1, 16})->Args({2, 4})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Overlap<false>)->Args({64, 2})->Args({64, 4})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Overlap<true>)->Args({64, 2})->Args({64, 4})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_RobustnessSolve)->Args({1, 0})->Args({1, 1})->Args({2, 0})->Args({2, 1})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
