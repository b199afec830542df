#include <benchmark/benchmark.h>

#include "nete/batch.hpp"
#include "nete/curvature.hpp"
#include "toy_world.hpp"

namespace {

using namespace nete;

const toy::Experiment& experiment() {
    static const auto ex = toy::make_experiment(1, {.n_clean = 64, .n_backdoor = 64});
    return ex;
}

BatchConfig config(int threads) {
    BatchConfig cfg;
    cfg.k = 20;
    cfg.parallelism = threads;
    return cfg;
}

void BM_score_methods_serial(benchmark::State& state) {
    const auto& ex = experiment();
    const auto methods = all_methods();
    for (auto _ : state)
        benchmark::DoNotOptimize(serial::score_methods(ex.clean, methods, *ex.scorer, ex.filler.get(), config(1)));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ex.clean.size()));
}

void BM_score_methods_parallel(benchmark::State& state) {
    const auto& ex = experiment();
    const auto methods = all_methods();
    const int threads = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(score_methods(ex.clean, methods, *ex.scorer, ex.filler.get(), config(threads)));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ex.clean.size()));
}

void BM_pdc_serial(benchmark::State& state) {
    const auto& ex = experiment();
    for (auto _ : state)
        benchmark::DoNotOptimize(serial::pdc_test(ex.clean, ex.backdoor, *ex.scorer, *ex.filler, config(1)));
}

void BM_pdc_parallel(benchmark::State& state) {
    const auto& ex = experiment();
    const int threads = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(pdc_test(ex.clean, ex.backdoor, *ex.scorer, *ex.filler, config(threads)));
}

void BM_hutchinson_serial(benchmark::State& state) {
    const auto f = curvature::cosine_sum(8);
    const curvature::Vector x(8, 0.3);
    for (auto _ : state)
        benchmark::DoNotOptimize(curvature::serial::hutchinson_trace(f, x, 100000, 1e-3, 1));
}

void BM_hutchinson_parallel(benchmark::State& state) {
    const auto f = curvature::cosine_sum(8);
    const curvature::Vector x(8, 0.3);
    for (auto _ : state) benchmark::DoNotOptimize(curvature::hutchinson_trace(f, x, 100000, 1e-3, 1));
}

}  // namespace

BENCHMARK(BM_score_methods_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_score_methods_parallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_pdc_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_pdc_parallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_hutchinson_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_hutchinson_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
