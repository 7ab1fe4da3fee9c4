#include "lassolab/ensembles.hpp"
#include "lassolab/rip.hpp"

#include <benchmark/benchmark.h>

using namespace lassolab;

namespace {

struct Fixture {
    Matrix A;
    Matrix B;
};

Fixture make(Eigen::Index m, Eigen::Index N) {
    return {generate_matrix(EnsembleSpec{EnsembleKind::Gaussian, m, N, default_scale(m, 2.0), 1}),
            random_conditioned_B(N, 2.0, 2)};
}

void BM_RipExact(benchmark::State& state) {
    const auto f = make(30, 20);
    for (auto _ : state) benchmark::DoNotOptimize(rip_exact_l2(f.A, f.B, state.range(0)));
}

void BM_RipExactSerial(benchmark::State& state) {
    const auto f = make(30, 20);
    for (auto _ : state) benchmark::DoNotOptimize(rip_exact_l2_serial(f.A, f.B, state.range(0)));
}

void BM_RipEstimate(benchmark::State& state) {
    const auto f = make(60, 120);
    for (auto _ : state) benchmark::DoNotOptimize(rip_estimate(f.A, f.B, 4, 1.5, state.range(0), 3));
}

void BM_RipEstimateSerial(benchmark::State& state) {
    const auto f = make(60, 120);
    for (auto _ : state) benchmark::DoNotOptimize(rip_estimate_serial(f.A, f.B, 4, 1.5, state.range(0), 3));
}

// rho and tau large enough that no counterexample stops the search early
void BM_NspFalsify(benchmark::State& state) {
    const auto f = make(40, 60);
    const NspParams nsp{1.0, 50.0, 1};
    for (auto _ : state) benchmark::DoNotOptimize(nsp_falsify(f.A, f.B, nsp, 2.0, state.range(0), 4));
}

void BM_NspFalsifySerial(benchmark::State& state) {
    const auto f = make(40, 60);
    const NspParams nsp{1.0, 50.0, 1};
    for (auto _ : state) benchmark::DoNotOptimize(nsp_falsify_serial(f.A, f.B, nsp, 2.0, state.range(0), 4));
}

}  // namespace

BENCHMARK(BM_RipExact)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_RipExactSerial)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_RipEstimate)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_RipEstimateSerial)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_NspFalsify)->Arg(20000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_NspFalsifySerial)->Arg(20000)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
