#include <benchmark/benchmark.h>

#include "semgraph/gnn.hpp"
#include "semgraph/random.hpp"

using namespace semgraph;

namespace {

GraphSample make_sample(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    GraphSample s;
    s.node_features = Matrix(n, 3);
    for (auto& v : s.node_features.values()) v = rng.uniform(-1, 1);
    s.base_adjacency = BinaryMatrix::complete(n);
    return s;
}

ModelConfig config_for(const benchmark::State& state) {
    ModelConfig c;
    c.edge_scheme = static_cast<EdgeScheme>(state.range(1));
    c.dropout = 0.0;
    return c;
}

void BM_Forward(benchmark::State& state) {
    const GraphSample s = make_sample(static_cast<std::size_t>(state.range(0)), 6);
    const ModelConfig config = config_for(state);
    const ModelParams params = init_params(config, 3, 16, 7);
    const EdgeStats stats{1.0, 0.5};
    for (auto _ : state) benchmark::DoNotOptimize(forward(s, params, config, stats).value());
}
BENCHMARK(BM_Forward)->ArgsProduct({{8, 30, 100}, {0, 1}});

void BM_ForwardBackward(benchmark::State& state) {
    const GraphSample s = make_sample(static_cast<std::size_t>(state.range(0)), 6);
    const ModelConfig config = config_for(state);
    ModelParams params = init_params(config, 3, 16, 7);
    const EdgeStats stats{1.0, 0.5};
    for (auto _ : state) {
        for (auto& p : params.tensors()) p.zero_grad();
        softmax_cross_entropy(forward(s, params, config, stats), 0).backward();
    }
}
BENCHMARK(BM_ForwardBackward)->ArgsProduct({{8, 30, 100}, {0, 1}});

}  // namespace
