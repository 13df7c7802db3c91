#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "speechscore/kernels.hpp"
#include "speechscore/quantizer.hpp"

using namespace speechscore;

namespace {

FeatureMatrix random_features(std::size_t n, std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    std::vector<float> data(n * d);
    for (auto& v : data) v = u(rng);
    return FeatureMatrix("b", n, d, std::move(data));
}

// Args: frames, dim, threads (ignored by the reference).
void BM_CosineTiled(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0)), d = static_cast<std::size_t>(state.range(1));
    const auto g = kernels::unit_rows(random_features(n, d, 1));
    const auto r = kernels::unit_rows(random_features(n, d, 2));
    kernels::set_num_threads(static_cast<int>(state.range(2)));
    for (auto _ : state) benchmark::DoNotOptimize(kernels::cosine_matrix(g, r));
    kernels::set_num_threads(0);
    state.counters["GMAC/s"] =
        benchmark::Counter(static_cast<double>(n * n * d) * 1e-9, benchmark::Counter::kIsIterationInvariantRate);
}

void BM_CosineReference(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0)), d = static_cast<std::size_t>(state.range(1));
    const auto g = kernels::unit_rows(random_features(n, d, 1));
    const auto r = kernels::unit_rows(random_features(n, d, 2));
    for (auto _ : state) benchmark::DoNotOptimize(kernels::reference::cosine_matrix(g, r));
    state.counters["GMAC/s"] =
        benchmark::Counter(static_cast<double>(n * n * d) * 1e-9, benchmark::Counter::kIsIterationInvariantRate);
}

// Args: points, centroids, dim, threads.
void BM_NearestTiled(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0)), k = static_cast<std::size_t>(state.range(1));
    const auto d = static_cast<std::size_t>(state.range(2));
    const auto x = kernels::to_double(random_features(n, d, 3));
    const auto c = kernels::to_double(random_features(k, d, 4));
    std::vector<Token> labels(n);
    std::vector<double> dist(n);
    kernels::set_num_threads(static_cast<int>(state.range(3)));
    for (auto _ : state) {
        kernels::nearest_centroid(x, c, labels, dist);
        benchmark::DoNotOptimize(labels.data());
    }
    kernels::set_num_threads(0);
}

void BM_NearestReference(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0)), k = static_cast<std::size_t>(state.range(1));
    const auto d = static_cast<std::size_t>(state.range(2));
    const auto x = kernels::to_double(random_features(n, d, 3));
    const auto c = kernels::to_double(random_features(k, d, 4));
    std::vector<Token> labels(n);
    std::vector<double> dist(n);
    for (auto _ : state) {
        kernels::reference::nearest_centroid(x, c, labels, dist);
        benchmark::DoNotOptimize(labels.data());
    }
}

} // namespace

BENCHMARK(BM_CosineReference)->Args({200, 768, 1})->Args({500, 768, 1})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CosineTiled)
    ->Args({200, 768, 1})
    ->Args({500, 768, 1})
    ->Args({500, 768, 4})
    ->Args({500, 1024, 1})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();
BENCHMARK(BM_NearestReference)->Args({2000, 500, 768, 1})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NearestTiled)->Args({2000, 500, 768, 1})->Args({2000, 500, 768, 4})->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
