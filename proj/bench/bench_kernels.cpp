#include <benchmark/benchmark.h>

#include <map>

#include "spe/conv.hpp"
#include "spe/rulebook.hpp"
#include "spe/scenegen.hpp"

namespace {

struct Fixture {
    spe::PillarTensor scene;
    spe::Kernel kernel;
    spe::Rulebook rb;
};

const Fixture& fixture(int64_t channels) {
    static std::map<int64_t, Fixture> cache;
    auto it = cache.find(channels);
    if (it != cache.end()) return it->second;
    spe::SceneSpec s;
    s.height = 248;
    s.width = 216;
    s.channels = static_cast<int32_t>(channels);
    s.density = 0.05;
    s.pattern = spe::ScenePattern::Clustered;
    s.clusters = 32;
    s.spread = 4.0;
    s.seed = 3;
    Fixture f;
    f.scene = spe::generate(s);
    f.kernel = spe::Kernel::random({3, 3, 1}, s.channels, s.channels, 11);
    f.rb = spe::build_rulebook_subm(f.scene.coords(), f.scene.shape(), f.kernel.shape);
    return cache.emplace(channels, std::move(f)).first->second;
}

void BM_rulebook_parallel(benchmark::State& state) {
    const auto& f = fixture(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(spe::execute_rulebook(f.rb, f.scene, f.kernel));
    state.counters["rules"] = static_cast<double>(f.rb.rules.size());
}

void BM_rulebook_serial(benchmark::State& state) {
    const auto& f = fixture(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(spe::execute_rulebook_serial(f.rb, f.scene, f.kernel));
    state.counters["rules"] = static_cast<double>(f.rb.rules.size());
}

void BM_build_subm(benchmark::State& state) {
    const auto& f = fixture(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(spe::build_rulebook_subm(f.scene.coords(), f.scene.shape(), f.kernel.shape));
    }
}

void BM_dense_conv(benchmark::State& state) {
    const auto& f = fixture(state.range(0));
    const auto g = spe::to_dense(f.scene);
    for (auto _ : state) benchmark::DoNotOptimize(spe::dense_conv(g, f.kernel));
}

void BM_dense_conv_oracle(benchmark::State& state) {
    const auto& f = fixture(state.range(0));
    const auto g = spe::to_dense(f.scene);
    for (auto _ : state) benchmark::DoNotOptimize(spe::dense_conv_oracle(g, f.kernel));
}

}  // namespace

BENCHMARK(BM_rulebook_parallel)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_rulebook_serial)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_build_subm)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_dense_conv)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_dense_conv_oracle)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
