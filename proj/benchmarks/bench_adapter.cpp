#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "selfie/adapter.hpp"
#include "selfie/checkpoint.hpp"

namespace {

std::vector<double> random_unit(std::size_t d, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> v(d);
    double norm = 0.0;
    for (auto& x : v) {
        x = n(gen);
        norm += x * x;
    }
    for (auto& x : v) x /= std::sqrt(norm);
    return v;
}

selfie::Adapter make(selfie::AdapterKind kind, std::size_t d) {
    const std::size_t rank = selfie::has_low_rank(kind) ? 8 : 0;
    return selfie::Adapter::create(kind, selfie::ModelDims(d), rank);
}

void BM_Apply(benchmark::State& state, selfie::AdapterKind kind) {
    const auto d = static_cast<std::size_t>(state.range(0));
    const auto adapter = make(kind, d);
    const auto h = random_unit(d, 1);
    for (auto _ : state) {
        auto out = adapter.apply(h);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations());
}

void BM_Gradients(benchmark::State& state, selfie::AdapterKind kind) {
    const auto d = static_cast<std::size_t>(state.range(0));
    const auto adapter = make(kind, d);
    const auto h = random_unit(d, 1);
    const auto upstream = random_unit(d, 2);
    for (auto _ : state) {
        auto g = adapter.gradients(h, upstream);
        benchmark::DoNotOptimize(g.values.data());
    }
    state.SetItemsProcessed(state.iterations());
}

void BM_CheckpointRoundTrip(benchmark::State& state) {
    const auto adapter = make(selfie::AdapterKind::full_rank, static_cast<std::size_t>(state.range(0)));
    std::size_t size = 0;
    for (auto _ : state) {
        const auto bytes = selfie::encode_adapter(adapter);
        auto back = selfie::decode_adapter(bytes);
        benchmark::DoNotOptimize(back.parameters().data());
        size = bytes.size();
    }
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(size));
}

}  // namespace

BENCHMARK_CAPTURE(BM_Apply, scalar_affine, selfie::AdapterKind::scalar_affine)->RangeMultiplier(4)->Range(64, 4096);
BENCHMARK_CAPTURE(BM_Apply, sa_low_rank, selfie::AdapterKind::scalar_affine_low_rank)
    ->RangeMultiplier(4)
    ->Range(64, 4096);
BENCHMARK_CAPTURE(BM_Apply, full_rank, selfie::AdapterKind::full_rank)->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK_CAPTURE(BM_Gradients, scalar_affine, selfie::AdapterKind::scalar_affine)->RangeMultiplier(4)->Range(64, 4096);
BENCHMARK_CAPTURE(BM_Gradients, sa_low_rank, selfie::AdapterKind::scalar_affine_low_rank)
    ->RangeMultiplier(4)
    ->Range(64, 4096);
BENCHMARK_CAPTURE(BM_Gradients, full_rank, selfie::AdapterKind::full_rank)->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(BM_CheckpointRoundTrip)->Arg(256)->Arg(1024);
