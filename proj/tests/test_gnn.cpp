#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "semgraph/error.hpp"
#include "semgraph/gnn.hpp"
#include "support/model_check.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "support/tempdir.hpp"

using namespace semgraph;
using namespace semgraph::testing;

namespace {

Tensor constant(Matrix m) { return Tensor::constant(std::move(m)); }

void zero_all(const ModelParams& p) {
    for (auto t : p.tensors())
        for (auto& v : t.mutable_value().values()) v = 0.0;
}

bool symmetric(const Matrix& m, double tol) {
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            if (std::abs(m(i, j) - m(j, i)) > tol) return false;
    return true;
}

GraphSample permuted(const GraphSample& s, const std::vector<std::size_t>& perm) {
    GraphSample out = s;
    for (std::size_t i = 0; i < perm.size(); ++i) {
        for (std::size_t c = 0; c < s.node_features.cols(); ++c) out.node_features(i, c) = s.node_features(perm[i], c);
        for (std::size_t j = 0; j < perm.size(); ++j) out.base_adjacency(i, j) = s.base_adjacency(perm[i], perm[j]);
    }
    return out;
}

}  // namespace

TEST_SUITE("gnn") {

TEST_CASE("enum names round-trip and unknown names are config errors") {
    for (auto s : kAllEdgeSchemes) CHECK(parse_edge_scheme(to_string(s)) == s);
    for (auto n : kAllNormalizations) CHECK(parse_normalization(to_string(n)) == n);
    CHECK(parse_addon_update("elementwise") == AddonUpdate::Elementwise);
    CHECK(parse_activation("relu") == Activation::Relu);
    CHECK_THROWS_AS(parse_edge_scheme("exp"), ConfigError);
    CHECK_THROWS_AS(parse_normalization("rows"), ConfigError);
}

TEST_CASE("config validation and metadata") {
    ModelConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.concat_width() == 97);
    CHECK(c.conv2_length() == 11);
    c.sort_k = 9;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.sort_k = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);

    ModelConfig d;
    d.layer_dims = {8, 1};
    d.edge_scheme = EdgeScheme::GaussKernel;
    d.normalization = Normalization::Symmetric;
    d.addon_update = AddonUpdate::Elementwise;
    d.input_edge_one = true;
    d.kernel_sigma = 0.3;
    const auto back = ModelConfig::from_meta(d.to_meta());
    CHECK(back.layer_dims == d.layer_dims);
    CHECK(back.edge_scheme == d.edge_scheme);
    CHECK(back.normalization == d.normalization);
    CHECK(back.addon_update == d.addon_update);
    CHECK(back.input_edge_one);
    CHECK(back.kernel_sigma == 0.3);
    CHECK_THROWS_AS(ModelConfig::from_meta({{"sort_k", "ten"}}), ConfigError);
}

TEST_CASE("edge feature examples") {
    const Matrix same = edge_features(constant(Matrix(3, 2, 0.4)), EdgeScheme::ExpL2, std::nullopt).value();
    for (double v : same.values())
        CHECK(std::abs(v - 1.0) < 1e-5);

    const Tensor h = constant(Matrix{{0, 0, 0}, {3, 4, 0}});
    const Matrix e = edge_features(h, EdgeScheme::ExpL2, std::nullopt).value();
    CHECK(std::abs(e(0, 1) - 148.4131591025766) < 1e-6);
    CHECK(std::abs(e(0, 0) - 1.0) < 1e-5);

    const Matrix sq = edge_features(h, EdgeScheme::ExpL2Squared, std::nullopt).value();
    CHECK(std::abs(sq(0, 1) / std::exp(25.0) - 1.0) < 1e-9);
    const Matrix gk = edge_features(h, EdgeScheme::GaussKernel, std::nullopt).value();
    CHECK(std::abs(gk(0, 1) / std::exp(-25.0) - 1.0) < 1e-9);
    CHECK(edge_features(h, EdgeScheme::DefaultOne, std::nullopt).value() == Matrix(2, 2, 1.0));

    const EdgeStats stats{5.0, 2.0};
    const Matrix gi = edge_features(h, EdgeScheme::GaussianInput, stats).value();
    CHECK(std::abs(gi(0, 1) - 1.0 / (std::sqrt(2.0 * std::numbers::pi) * 2.0)) < 1e-12);
    CHECK_THROWS_AS(edge_features(h, EdgeScheme::GaussianInput, std::nullopt), ArgumentError);
}

TEST_CASE("exp_l2 edges are at least one, symmetric, unit on the diagonal") {
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix m(6, 4);
        for (auto& v : m.values()) v = rng.uniform(-1, 1);
        const Matrix e = edge_features(constant(m), EdgeScheme::ExpL2, std::nullopt).value();
        for (double v : e.values()) CHECK(v >= 1.0);
        for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(e(i, i) - 1.0) < 1e-5);
        CHECK(symmetric(e, 0.0));
    }
}

TEST_CASE("edge statistics over connected pairs") {
    GraphSample s;
    s.node_features = Matrix{{0, 0, 0}, {1, 0, 0}, {3, 0, 0}};
    s.base_adjacency = BinaryMatrix(3);
    s.base_adjacency(0, 1) = s.base_adjacency(1, 0) = 1;
    s.base_adjacency(1, 2) = s.base_adjacency(2, 1) = 1;
    const GraphSample one[] = {s};
    const EdgeStats st = compute_edge_stats(one);
    // Distances 1, 1, 2, 2.
    CHECK(std::abs(st.mu - 1.5) < 1e-15);
    CHECK(std::abs(st.sigma - 0.5) < 1e-15);

    GraphSample lone = s;
    lone.base_adjacency = BinaryMatrix(3);
    const GraphSample none[] = {lone};
    CHECK_THROWS_AS(compute_edge_stats(none), ArgumentError);
}

TEST_CASE("normalization examples") {
    const Matrix ones = normalize_adjacency(constant(Matrix(3, 3, 1.0)), Normalization::Row).value();
    for (double v : ones.values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    Rng rng(2);
    Matrix sym(5, 5);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = i; j < 5; ++j) sym(i, j) = sym(j, i) = rng.uniform(0.1, 2.0);
    CHECK(symmetric(normalize_adjacency(constant(sym), Normalization::Symmetric).value(), 1e-15));
    CHECK(symmetric(normalize_adjacency(constant(sym), Normalization::NaiveSymmetric).value(), 1e-15));

    for (int trial = 0; trial < 20; ++trial) {
        Matrix a(5, 5);
        for (auto& v : a.values()) v = rng.uniform(0.0, 3.0);
        const Matrix r = normalize_adjacency(constant(a), Normalization::Row).value();
        for (std::size_t i = 0; i < 5; ++i) {
            double s = 0;
            for (std::size_t j = 0; j < 5; ++j) s += r(i, j);
            CHECK(std::abs(s - 1.0) < 1e-12);
        }
        const Matrix c = normalize_adjacency(constant(a), Normalization::Column).value();
        double deg0 = 0;
        for (std::size_t j = 0; j < 5; ++j) deg0 += a(0, j);
        CHECK(std::abs(c(1, 0) - a(1, 0) / deg0) < 1e-15);
    }
}

TEST_CASE("zero degree names the node") {
    Matrix a(3, 3, 1.0);
    a(2, 0) = a(2, 1) = a(2, 2) = 0.0;
    try {
        normalize_adjacency(constant(a), Normalization::Row);
        FAIL("expected a degeneracy error");
    } catch (const DegeneracyError& e) {
        CHECK(e.node() == 2);
        CHECK(std::string(e.what()).find("node 2") != std::string::npos);
    }
}

TEST_CASE("graph convolution examples") {
    const Matrix h{{0.5, -1.0}, {2.0, 0.1}};
    const Matrix out = graph_conv(constant(h), constant(Matrix::identity(2)), constant(Matrix::identity(2))).value();
    for (std::size_t i = 0; i < h.size(); ++i) CHECK(std::abs(out[i] - std::tanh(h[i])) < 1e-15);

    const Matrix single = graph_conv(constant(Matrix{{0.3, 0.2}}), constant(Matrix{{1.0}}),
                                     constant(Matrix{{1.0}, {-2.0}}))
                              .value();
    CHECK(std::abs(single(0, 0) - std::tanh(-0.1)) < 1e-15);

    Rng rng(3);
    std::vector<Tensor> p;
    auto rand = [&](std::size_t r, std::size_t c) {
        Matrix m(r, c);
        for (auto& v : m.values()) v = rng.uniform(-1, 1);
        return Tensor::parameter(m);
    };
    p = {rand(4, 3), rand(4, 4), rand(3, 2)};
    CHECK(check_gradients([&] { return row_sum(transpose(row_sum(graph_conv(p[0], p[1], p[2])))); }, p)
              .max_rel_error < 1e-4);
}

TEST_CASE("add-on layer examples") {
    ModelConfig config;
    const ModelParams params = init_params(config, 3, 2, 1);
    AddonParams addon = params.addons[0];
    zero_all(params);
    Rng rng(4);
    Matrix h(3, 32);
    for (auto& v : h.values()) v = rng.uniform(-1, 1);
    Matrix a(3, 3);
    for (auto& v : a.values()) v = rng.uniform(0.1, 1.0);
    const Tensor a_norm = normalize_adjacency(constant(a), Normalization::Row);

    CHECK(addon_layer(constant(h), a_norm, addon, AddonUpdate::Matmul).value() == Matrix(3, 3));

    Tensor(addon.row_map.bias).mutable_value()(0, 0) = 1.0;
    const Matrix out = addon_layer(constant(h), a_norm, addon, AddonUpdate::Matmul).value();
    for (std::size_t j = 0; j < 3; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < 3; ++i) col += a_norm.value()(i, j);
        for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(out(i, j) - col) < 1e-15);
    }
    const Matrix ew = addon_layer(constant(h), a_norm, addon, AddonUpdate::Elementwise).value();
    CHECK(ew == a_norm.value());
}

TEST_CASE("sort pooling order and padding") {
    CHECK(sort_pooling_order(Matrix{{0, 0.5}, {0, 0.9}, {0, 0.1}}) == std::vector<std::size_t>{1, 0, 2});
    CHECK(sort_pooling_order(Matrix{{0.1, 0.5}, {0.7, 0.5}, {0.7, 0.5}}) == std::vector<std::size_t>{1, 2, 0});

    const Matrix two{{1, 2}, {3, 4}};
    const Matrix pooled = sort_pooling(constant(two), 30).value();
    CHECK(pooled.rows() == 30);
    CHECK(pooled(0, 1) == 4.0);
    CHECK(pooled(1, 1) == 2.0);
    for (std::size_t r = 2; r < 30; ++r) CHECK(pooled(r, 0) == 0.0);

    Rng rng(5);
    Matrix big(40, 3);
    for (auto& v : big.values()) v = rng.uniform(-1, 1);
    std::vector<std::size_t> idx(40);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return big(a, 2) > big(b, 2); });
    const Matrix top = sort_pooling(constant(big), 30).value();
    for (std::size_t r = 0; r < 30; ++r)
        for (std::size_t c = 0; c < 3; ++c) CHECK(top(r, c) == big(idx[r], c));
}

TEST_CASE("readout: zero input and zero biases give zero logits") {
    ModelConfig config;
    const ModelParams params = init_params(config, 3, 4, 2);
    for (const auto& [name, t] : params.named()) {
        if (name.ends_with(".b")) {
            Tensor handle = t;
            for (auto& v : handle.mutable_value().values()) v = 0.0;
        }
    }
    const Matrix logits = readout(constant(Matrix(30, 97)), params, config, nullptr).value();
    CHECK(logits == Matrix(1, 4));
    CHECK_THROWS_AS(readout(constant(Matrix(29, 97)), params, config, nullptr), ShapeError);
}

TEST_CASE("evaluation passes are identical and dropout changes training passes") {
    ModelConfig config;
    const ModelParams params = init_params(config, 3, 3, 3);
    Rng rng(6);
    const GraphSample s = random_sample(rng, 6, 3, true, 0);
    CHECK(forward(s, params, config, std::nullopt).value() == forward(s, params, config, std::nullopt).value());
    Rng d1(1), d2(2);
    CHECK(forward(s, params, config, std::nullopt, &d1).value() !=
          forward(s, params, config, std::nullopt, &d2).value());
}

TEST_CASE("parameter count matches the shape rules") {
    ModelConfig config;
    // gconv 2176 + readout 1568 + 2592 + 45184 + 5160 for 40 classes.
    config.addon_enabled = false;
    CHECK(expected_parameter_count(config, 3, 40) == 56680);
    CHECK(init_params(config, 3, 40, 0).parameter_count() == 56680);
    config.addon_enabled = true;
    CHECK(expected_parameter_count(config, 3, 40) == 56680 + 3 * 66);
    CHECK(init_params(config, 3, 40, 0).parameter_count() == 56878);
    config.addon_bias = false;
    CHECK(init_params(config, 3, 40, 0).parameter_count() == 56680 + 3 * 64);

    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        ModelConfig c;
        c.layer_dims.clear();
        for (std::size_t k = 0, n = 1 + rng.below(5); k < n; ++k) c.layer_dims.push_back(1 + rng.below(40));
        c.conv2_kernel = 1 + rng.below(5);
        c.sort_k = 2 * c.conv2_kernel + rng.below(30);
        c.addon_enabled = rng.uniform() < 0.5;
        c.addon_bias = rng.uniform() < 0.5;
        const std::size_t in = 1 + rng.below(10), classes = 2 + rng.below(10);
        CHECK(init_params(c, in, classes, 1).parameter_count() == hand_parameter_count(c, in, classes));
        CHECK(expected_parameter_count(c, in, classes) == hand_parameter_count(c, in, classes));
    }
}

TEST_CASE("init is seeded and named") {
    ModelConfig config;
    const auto a = init_params(config, 3, 2, 9);
    const auto b = init_params(config, 3, 2, 9);
    const auto c = init_params(config, 3, 2, 10);
    CHECK(a.conv_weights[0].value() == b.conv_weights[0].value());
    CHECK(a.conv_weights[0].value() != c.conv_weights[0].value());
    const auto names = a.named();
    CHECK(names.front().first == "gconv0.w");
    CHECK(names.back().first == "readout.out.b");
    CHECK_THROWS_AS(init_params(config, 3, 1, 0), ConfigError);
}

TEST_CASE("backbone configuration equals the plain-loop backbone bit for bit") {
    ModelConfig config;
    config.addon_enabled = false;
    config.edge_scheme = EdgeScheme::DefaultOne;
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const ModelParams params = init_params(config, 3, 4, 100 + trial);
        for (const auto& [name, t] : params.named()) {
            if (name.ends_with(".b")) {
                Tensor handle = t;
                for (auto& v : handle.mutable_value().values()) v = rng.uniform(-0.2, 0.2);
            }
        }
        const GraphSample s = random_sample(rng, 1 + rng.below(40), 3, trial % 2 == 0, 0);
        CHECK(forward(s, params, config, std::nullopt).value() == backbone_logits(s, params, config));
    }
}

TEST_CASE("node permutations leave logits unchanged") {
    ModelConfig config;
    Rng rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const ModelParams params = init_params(config, 3, 3, 200 + trial);
        const GraphSample s = random_sample(rng, 2 + rng.below(12), 3, trial % 2 == 0, 1);
        std::vector<std::size_t> perm(s.node_count());
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
        const Matrix a = forward(s, params, config, std::nullopt).value();
        const Matrix b = forward(permuted(s, perm), params, config, std::nullopt).value();
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-9);
    }
}

TEST_CASE("one-node graphs run end to end") {
    ModelConfig config;
    const ModelParams params = init_params(config, 3, 2, 11);
    GraphSample s;
    s.node_features = Matrix{{0.2, -0.1, 0.5}};
    s.base_adjacency = BinaryMatrix(1);
    CHECK(forward(s, params, config, std::nullopt).value().all_finite());
}

TEST_CASE("full-model gradients across configurations") {
    std::uint64_t seed = 1;
    for (auto scheme : kAllEdgeSchemes) {
        for (auto norm : kAllNormalizations) {
            for (int variant = 0; variant < 3; ++variant) {
                const ModelConfig c = tiny_config(scheme, norm, variant > 0,
                                                  variant == 2 ? AddonUpdate::Elementwise : AddonUpdate::Matmul);
                const auto g = model_gradient_check(c, seed++);
                INFO(to_string(scheme), " ", to_string(norm), " variant ", variant);
                CHECK(g.nonsmooth == 0);
                CHECK(g.max_rel_error < 1e-4);
            }
        }
    }
}

TEST_CASE("directional gradient check at the default size") {
    const auto g = model_directional_check(ModelConfig{}, 3, 3);
    CHECK(g.checked == 3);
    CHECK(g.max_rel_error < 1e-4);
}

TEST_CASE("directional check drops SortPooling jumps but still catches wrong gradients") {
    // Equal keys with different payloads: any move that separates the keys
    // swaps the payload rows, so the loss jumps.
    std::vector<Tensor> p{Tensor::parameter(Matrix{{0.2, 0.5}, {0.9, 0.5}})};
    const Tensor weights = constant(Matrix{{1.0, 2.0}, {3.0, 5.0}});
    auto jump = [&] { return row_sum(transpose(row_sum(mul(sort_pooling(p[0], 2), weights)))); };
    Rng rng(4);
    const auto tied = check_directional(jump, p, rng, 3);
    CHECK(tied.checked == 0);
    CHECK(tied.nonsmooth == 12);

    // Smooth loss whose first evaluation (the one differentiated) is doubled.
    std::vector<Tensor> q{Tensor::parameter(Matrix{{0.3, -0.7}})};
    int calls = 0;
    auto wrong = [&] {
        const Tensor l = row_sum(tanh(q[0]));
        return calls++ == 0 ? scale(l, 2.0) : l;
    };
    const auto bad = check_directional(wrong, q, rng, 3);
    CHECK(bad.checked == 3);
    CHECK(bad.nonsmooth == 0);
    CHECK(bad.max_rel_error > 0.4);
}

TEST_CASE("training is deterministic, worker-independent and lowers the loss") {
    const GraphDataset ds = family_dataset(24, 5);
    ModelConfig config;
    TrainOptions opt;
    opt.epochs = 6;
    opt.batch_size = 5;
    opt.seed = 17;
    const auto a = train(ds.samples, 2, config, opt);
    const auto b = train(ds.samples, 2, config, opt);
    opt.workers = 3;
    const auto c = train(ds.samples, 2, config, opt);
    REQUIRE(a.history.size() == 6);
    for (std::size_t e = 0; e < 6; ++e) {
        CHECK(a.history[e].loss == b.history[e].loss);
        CHECK(a.history[e].loss == c.history[e].loss);
    }
    CHECK(a.params.conv_weights[1].value() == c.params.conv_weights[1].value());
    CHECK(a.history.back().loss < a.history.front().loss);
}

TEST_CASE("numeric failures name epoch, batch and sample") {
    GraphDataset ds = family_dataset(4, 6);
    ds.samples[2].node_features(0, 0) = 1e4;
    ds.samples[2].id = "blowup";
    TrainOptions opt;
    opt.epochs = 1;
    try {
        train(ds.samples, 2, ModelConfig{}, opt);
        FAIL("expected a numeric error");
    } catch (const NumericError& e) {
        const std::string what = e.what();
        CHECK(what.find("epoch 1") != std::string::npos);
        CHECK(what.find("batch 0") != std::string::npos);
        CHECK(what.find("blowup") != std::string::npos);
    }
}

TEST_CASE("training input validation") {
    GraphDataset ds = family_dataset(4, 7);
    TrainOptions opt;
    opt.epochs = 1;
    CHECK_THROWS_AS(train(std::span<const GraphSample>{}, 2, ModelConfig{}, opt), ArgumentError);
    ds.samples[1].label = 5;
    CHECK_THROWS_AS(train(ds.samples, 2, ModelConfig{}, opt), ArgumentError);
    opt.batch_size = 0;
    CHECK_THROWS_AS(train(family_dataset(4, 7).samples, 2, ModelConfig{}, opt), ConfigError);
}

TEST_CASE("evaluation counts and confusion") {
    const GraphDataset ds = family_dataset(10, 8);
    ModelConfig config;
    const auto params = init_params(config, 3, 2, 1);
    const Evaluation ev = evaluate(ds.samples, 2, params, config, std::nullopt);
    std::size_t total = 0, diag = 0;
    for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t p = 0; p < 2; ++p) total += ev.confusion[t][p], diag += t == p ? ev.confusion[t][p] : 0;
    CHECK(total == 10);
    CHECK(ev.accuracy == static_cast<double>(diag) / 10.0);
    CHECK(ev.predictions.size() == 10);
}

TEST_CASE("checkpoint restores parameters and rejects mismatches") {
    ModelConfig config;
    config.edge_scheme = EdgeScheme::GaussianInput;
    const ModelParams params = init_params(config, 3, 5, 12);
    const EdgeStats stats{0.7, 0.2};
    const Checkpoint ckpt = make_checkpoint(params, config, 3, 5, stats);
    TempDir dir;
    save_checkpoint(ckpt, dir / "m.ckpt");
    const Checkpoint back = load_checkpoint(dir / "m.ckpt");
    const ModelConfig restored = ModelConfig::from_meta(back.meta);
    const ModelParams p2 = params_from_checkpoint(back, restored, 3, 5);
    const auto a = params.named();
    const auto b = p2.named();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].second.value() == b[i].second.value());
    const auto st = stats_from_checkpoint(back);
    REQUIRE(st.has_value());
    CHECK(st->mu == 0.7);

    ModelConfig other = config;
    other.layer_dims = {16, 16, 16, 1};
    CHECK_THROWS_AS(params_from_checkpoint(back, other, 3, 5), ShapeError);
    CHECK_THROWS_AS(params_from_checkpoint(back, config, 3, 6), ShapeError);
    other = config;
    other.addon_enabled = false;
    CHECK_THROWS_AS(params_from_checkpoint(back, other, 3, 5), ShapeError);
}

TEST_CASE("resuming with parameters of the wrong shape fails before training") {
    const GraphDataset ds = family_dataset(6, 9);
    ModelConfig small;
    small.layer_dims = {8, 8, 8, 1};
    TrainOptions opt;
    opt.epochs = 1;
    std::size_t epochs_seen = 0;
    CHECK_THROWS_AS(train(ds.samples, 2, ModelConfig{}, opt, [&](auto&, auto&) { ++epochs_seen; },
                          init_params(small, 3, 2, 1)),
                    ShapeError);
    CHECK(epochs_seen == 0);
}

}  // TEST_SUITE
