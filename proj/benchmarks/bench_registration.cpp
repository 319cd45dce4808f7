#include <benchmark/benchmark.h>

#include <numbers>

#include "bench_util.hpp"
#include "semgraph/registration.hpp"

using namespace semgraph;

namespace {

void BM_RigidSolve(benchmark::State& state) {
    const auto src = bench::random_points(static_cast<std::size_t>(state.range(0)), 4);
    RigidTransform t;
    t.rotation = Mat3::rotation({0.2, 1.0, -0.4}, 0.6);
    t.translation = {0.3, -0.1, 0.2};
    const auto dst = t.apply(src);
    for (auto _ : state) benchmark::DoNotOptimize(rigid_solve(src, dst));
}
BENCHMARK(BM_RigidSolve)->Arg(1024)->Arg(16384);

// Fixed iteration count so the timing reflects per-iteration cost.
void BM_Icp(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const PointCloud target(bench::random_points(n, 5));
    RigidTransform t;
    t.rotation = Mat3::rotation({1.0, 0.5, 0.2}, std::numbers::pi / 12);
    t.translation = {0.05, 0.0, -0.05};
    const PointCloud source(t.apply(target.points()));
    const IcpOptions options{.max_iters = 20, .tol = 1e-300};
    for (auto _ : state) benchmark::DoNotOptimize(icp_register(source, target, options));
}
BENCHMARK(BM_Icp)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

}  // namespace
