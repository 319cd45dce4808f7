#include "support/model_check.hpp"

#include "support/synthetic.hpp"

namespace semgraph::testing {

ModelConfig tiny_config(EdgeScheme scheme, Normalization norm, bool addon, AddonUpdate update) {
    ModelConfig c;
    c.layer_dims = {5, 4, 3, 1};
    c.sort_k = 6;
    c.conv1_channels = 3;
    c.conv2_channels = 3;
    c.conv2_kernel = 2;
    c.dense_units = 4;
    c.edge_scheme = scheme;
    c.normalization = norm;
    c.addon_enabled = addon;
    c.addon_update = update;
    return c;
}

namespace {

struct Instance {
    GraphSample sample;
    ModelParams params;
    std::optional<EdgeStats> stats;
    std::vector<Tensor> tensors;
};

Instance make_instance(const ModelConfig& config, std::uint64_t seed) {
    Rng rng(seed);
    Instance in;
    in.sample = random_sample(rng, 2 + rng.below(4), 3, rng.uniform() < 0.5, static_cast<int>(rng.below(2)));
    in.sample.base_adjacency(0, 1) = in.sample.base_adjacency(1, 0) = 1;
    in.params = init_params(config, 3, 2, seed);
    for (const auto& [name, t] : in.params.named()) {
        if (name.ends_with(".b")) {
            Tensor handle = t;
            for (auto& v : handle.mutable_value().values()) v = rng.uniform(-0.5, 0.5);
        }
    }
    // A single small sample can have zero distance spread, so draw the statistics.
    if (config.edge_scheme == EdgeScheme::GaussianInput) in.stats = EdgeStats{rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.0)};
    in.tensors = in.params.tensors();
    return in;
}

}  // namespace

GradCheck model_gradient_check(const ModelConfig& config, std::uint64_t seed) {
    GradCheck g;
    for (std::uint64_t attempt = 0; attempt < 20; ++attempt) {
        Instance in = make_instance(config, seed + attempt * 7919);
        const auto label = static_cast<std::size_t>(in.sample.label);
        const std::size_t redrawn = attempt;
        g = check_gradients(
            [&] { return softmax_cross_entropy(forward(in.sample, in.params, config, in.stats), label); },
            in.tensors);
        g.redrawn = redrawn;
        if (g.nonsmooth == 0) break;
    }
    return g;
}

GradCheck model_directional_check(const ModelConfig& config, std::uint64_t seed, std::size_t directions, double h) {
    // Some graphs sit exactly on a SortPooling tie (all nodes smoothed to the
    // same key), where no direction is smooth; move on to another graph.
    GradCheck total;
    for (std::uint64_t attempt = 0; attempt < 20 && total.checked < directions; ++attempt) {
        Instance in = make_instance(config, seed + attempt * 7919);
        const auto label = static_cast<std::size_t>(in.sample.label);
        Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
        const GradCheck g = check_directional(
            [&] { return softmax_cross_entropy(forward(in.sample, in.params, config, in.stats), label); }, in.tensors,
            rng, directions - total.checked, h);
        total.max_rel_error = std::max(total.max_rel_error, g.max_rel_error);
        total.checked += g.checked;
        total.nonsmooth += g.nonsmooth;
    }
    return total;
}

}  // namespace semgraph::testing
