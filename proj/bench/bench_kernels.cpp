// Serial reference vs OpenMP kernels on attention-shaped workloads.
// Run: build/bench/bench_kernels [--benchmark_filter=...]

#include <benchmark/benchmark.h>

#include <vector>

#include "crednet/kernels.hpp"
#include "crednet/rng.hpp"

using crednet::Rng;
namespace kern = crednet::kern;

namespace {

std::vector<double> random_buf(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

void bm_matmul_serial(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    auto a = random_buf(n * n, 1);
    auto b = random_buf(n * n, 2);
    std::vector<double> c(n * n);
    for (auto _ : state) {
        kern::ref::matmul(a.data(), b.data(), c.data(), n, n, n);
        benchmark::ClobberMemory();
    }
}

void bm_matmul_parallel(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    auto a = random_buf(n * n, 1);
    auto b = random_buf(n * n, 2);
    std::vector<double> c(n * n);
    for (auto _ : state) {
        kern::matmul(a.data(), b.data(), c.data(), n, n, n);
        benchmark::ClobberMemory();
    }
}

void bm_softmax_serial(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    auto x = random_buf(n * n, 3);
    auto mask = random_buf(n * n, 4);
    for (auto& m : mask) m = m > 0 ? 1.0 : 0.0;
    for (std::size_t i = 0; i < n; ++i) mask[i * n + i] = 1.0;
    std::vector<double> out(n * n);
    for (auto _ : state) {
        kern::ref::row_softmax(x.data(), mask.data(), out.data(), n, n);
        benchmark::ClobberMemory();
    }
}

void bm_softmax_parallel(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    auto x = random_buf(n * n, 3);
    auto mask = random_buf(n * n, 4);
    for (auto& m : mask) m = m > 0 ? 1.0 : 0.0;
    for (std::size_t i = 0; i < n; ++i) mask[i * n + i] = 1.0;
    std::vector<double> out(n * n);
    for (auto _ : state) {
        kern::row_softmax(x.data(), mask.data(), out.data(), n, n);
        benchmark::ClobberMemory();
    }
}

} // namespace

BENCHMARK(bm_matmul_serial)->Arg(128)->Arg(512)->Arg(1024);
BENCHMARK(bm_matmul_parallel)->Arg(128)->Arg(512)->Arg(1024);
BENCHMARK(bm_softmax_serial)->Arg(256)->Arg(1024);
BENCHMARK(bm_softmax_parallel)->Arg(256)->Arg(1024);

BENCHMARK_MAIN();
