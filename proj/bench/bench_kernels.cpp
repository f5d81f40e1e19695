#include <algorithm>

#include <benchmark/benchmark.h>

#include "dfdrnn/graph.hpp"
#include "dfdrnn/kernels.hpp"
#include "dfdrnn/rng.hpp"
#include "dfdrnn/tensor.hpp"

using namespace dfdrnn;

namespace {

Tensor random_tensor(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(rows, cols);
  for (double& v : t.values()) v = uniform01(rng) - 0.5;
  return t;
}

Csr random_graph(std::size_t nodes, std::size_t degree, std::uint64_t seed) {
  Rng rng(seed);
  NeighborGraph g;
  g.size = nodes;
  g.neighbors.resize(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    for (std::size_t d = 0; d < degree; ++d)
      g.neighbors[i].push_back(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(nodes)));
    std::sort(g.neighbors[i].begin(), g.neighbors[i].end());
    g.neighbors[i].erase(std::unique(g.neighbors[i].begin(), g.neighbors[i].end()), g.neighbors[i].end());
  }
  return to_csr(g.neighbors);
}

template <bool Parallel>
void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = random_tensor(n, n, 1);
  const Tensor b = random_tensor(n, 128, 2);
  Tensor c(n, 128);
  for (auto _ : state) {
    c.fill(0.0);
    if constexpr (Parallel) kernels::parallel::gemm_nn(a, b, c);
    else kernels::serial::gemm_nn(a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
}

template <bool Parallel>
void BM_Gather(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Csr g = random_graph(n, 8, 3);
  const Tensor v = random_tensor(n, 64, 4);
  std::vector<double> beta(g.edges(), 0.125);
  Tensor out(n, 64);
  for (auto _ : state) {
    out.fill(0.0);
    if constexpr (Parallel) kernels::parallel::gather(beta, v, g, out);
    else kernels::serial::gather(beta, v, g, out);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_Gemm<false>)->Name("gemm_nn/serial")->Arg(256)->Arg(1000);
BENCHMARK(BM_Gemm<true>)->Name("gemm_nn/parallel")->Arg(256)->Arg(1000);
BENCHMARK(BM_Gather<false>)->Name("gather/serial")->Arg(1000)->Arg(10000);
BENCHMARK(BM_Gather<true>)->Name("gather/parallel")->Arg(1000)->Arg(10000);

BENCHMARK_MAIN();
