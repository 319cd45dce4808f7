#include <benchmark/benchmark.h>

#include "bench_util.hpp"

using namespace semgraph;

namespace {

void BM_NearestBruteForce(benchmark::State& state) {
    const auto pts = bench::random_points(static_cast<std::size_t>(state.range(0)), 1);
    const auto queries = bench::random_points(256, 2);
    for (auto _ : state)
        for (const auto& q : queries) benchmark::DoNotOptimize(nearest_neighbor(q, pts));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(queries.size()));
}
BENCHMARK(BM_NearestBruteForce)->RangeMultiplier(4)->Range(256, 16384);

void BM_NearestKdTree(benchmark::State& state) {
    const auto pts = bench::random_points(static_cast<std::size_t>(state.range(0)), 1);
    const auto queries = bench::random_points(256, 2);
    const KdTree tree(pts);
    for (auto _ : state)
        for (const auto& q : queries) benchmark::DoNotOptimize(tree.nearest(q));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(queries.size()));
}
BENCHMARK(BM_NearestKdTree)->RangeMultiplier(4)->Range(256, 16384);

void BM_KdTreeBuild(benchmark::State& state) {
    const auto pts = bench::random_points(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(KdTree(pts));
}
BENCHMARK(BM_KdTreeBuild)->RangeMultiplier(4)->Range(256, 16384);

void BM_PairwiseDistances(benchmark::State& state) {
    const auto pts = bench::random_points(static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state) benchmark::DoNotOptimize(pairwise_distances(pts));
}
BENCHMARK(BM_PairwiseDistances)->Arg(64)->Arg(256)->Arg(1024);

}  // namespace
