#include <benchmark/benchmark.h>

#include "mcnn/baseline.hpp"
#include "mcnn/mcnn.hpp"
#include "mcnn/numerics.hpp"
#include "mcnn/rng.hpp"

namespace {

std::vector<double> random_series(mcnn::Rng& rng, std::size_t n) {
    std::vector<double> out(n);
    for (double& v : out) v = rng.uniform(-1.0, 1.0);
    return out;
}

void BM_conv1d(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto m = static_cast<std::size_t>(state.range(1));
    mcnn::Rng rng(1);
    const mcnn::Signal input(1, n, random_series(rng, n));
    mcnn::FilterBank bank(64, 1, m);
    for (double& w : bank.weights) w = rng.uniform(-1.0, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(mcnn::conv1d(input, bank));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 64 * m * (n - m + 1));
}
BENCHMARK(BM_conv1d)->Args({135, 7})->Args({135, 14})->Args({512, 32});

void BM_maxpool(benchmark::State& state) {
    mcnn::Rng rng(2);
    const mcnn::Signal input(64, 128, random_series(rng, 64 * 128));
    for (auto _ : state) {
        benchmark::DoNotOptimize(mcnn::maxpool_by_factor(input, 3));
    }
}
BENCHMARK(BM_maxpool);

void BM_dtw(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    mcnn::Rng rng(3);
    const std::vector<double> a = random_series(rng, n);
    const std::vector<double> b = random_series(rng, n);
    for (auto _ : state) {
        benchmark::DoNotOptimize(mcnn::dtw_distance(a, b));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * n * n);
}
BENCHMARK(BM_dtw)->Arg(150)->Arg(286);

void BM_dtw_banded(benchmark::State& state) {
    mcnn::Rng rng(4);
    const std::vector<double> a = random_series(rng, 150);
    const std::vector<double> b = random_series(rng, 150);
    const mcnn::DtwParams params = mcnn::DtwParams::banded(0.1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(mcnn::dtw_distance(a, b, params));
    }
}
BENCHMARK(BM_dtw_banded);

void BM_forward(benchmark::State& state) {
    mcnn::McnnConfig config;
    config.num_classes = 2;
    config.input_length = 150;
    config.local_filters = static_cast<std::size_t>(state.range(0));
    config.full_filters = config.local_filters;
    config.dense_units = config.local_filters;
    const mcnn::McnnModel model = mcnn::assemble(config, 5);
    mcnn::Rng rng(6);
    const std::vector<double> slice = random_series(rng, config.slice_length());
    for (auto _ : state) {
        benchmark::DoNotOptimize(mcnn::forward(model, slice));
    }
}
BENCHMARK(BM_forward)->Arg(32)->Arg(256);

void BM_euclidean_via_conv(benchmark::State& state) {
    mcnn::Rng rng(7);
    const std::vector<double> t = random_series(rng, 512);
    const std::vector<double> f = random_series(rng, 64);
    for (auto _ : state) {
        benchmark::DoNotOptimize(mcnn::euclidean_via_conv(t, f));
    }
}
BENCHMARK(BM_euclidean_via_conv);

} // namespace

BENCHMARK_MAIN();
