#include "semgraph/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "semgraph/error.hpp"
#include "semgraph/parallel.hpp"
#include "semgraph/text.hpp"

namespace semgraph {

// ---- enum names ------------------------------------------------------------

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::pair<E, std::string_view> (&table)[N], const char* what) {
    for (const auto& [value, name] : table)
        if (name == s) return value;
    std::string options;
    for (const auto& [value, name] : table) options += (options.empty() ? "" : ", ") + std::string(name);
    throw ConfigError("unknown " + std::string(what) + " '" + std::string(s) + "' (expected one of " +
                      options + ")");
}

template <typename E, std::size_t N>
std::string_view enum_name(E v, const std::pair<E, std::string_view> (&table)[N]) {
    for (const auto& [value, name] : table)
        if (value == v) return name;
    return "?";
}

constexpr std::pair<EdgeScheme, std::string_view> kSchemeNames[] = {
    {EdgeScheme::DefaultOne, "default_one"},
    {EdgeScheme::ExpL2, "exp_l2"},
    {EdgeScheme::ExpL2Squared, "exp_l2_squared"},
    {EdgeScheme::GaussKernel, "gauss_kernel"},
    {EdgeScheme::GaussianInput, "gaussian_input"},
};
constexpr std::pair<Normalization, std::string_view> kNormNames[] = {
    {Normalization::Row, "row"},
    {Normalization::Column, "column"},
    {Normalization::NaiveSymmetric, "naive_symmetric"},
    {Normalization::Symmetric, "symmetric"},
};
constexpr std::pair<AddonUpdate, std::string_view> kUpdateNames[] = {
    {AddonUpdate::Matmul, "matmul"},
    {AddonUpdate::Elementwise, "elementwise"},
};
constexpr std::pair<Activation, std::string_view> kActivationNames[] = {
    {Activation::Tanh, "tanh"},
    {Activation::Relu, "relu"},
};

}  // namespace

std::string_view to_string(EdgeScheme s) { return enum_name(s, kSchemeNames); }
std::string_view to_string(Normalization n) { return enum_name(n, kNormNames); }
std::string_view to_string(AddonUpdate u) { return enum_name(u, kUpdateNames); }
std::string_view to_string(Activation a) { return enum_name(a, kActivationNames); }
EdgeScheme parse_edge_scheme(std::string_view s) { return parse_enum(s, kSchemeNames, "edge scheme"); }
Normalization parse_normalization(std::string_view s) { return parse_enum(s, kNormNames, "normalization"); }
AddonUpdate parse_addon_update(std::string_view s) { return parse_enum(s, kUpdateNames, "add-on update"); }
Activation parse_activation(std::string_view s) { return parse_enum(s, kActivationNames, "activation"); }

// ---- ModelConfig -----------------------------------------------------------

void ModelConfig::validate() const {
    if (layer_dims.empty()) throw ConfigError("layer_dims must name at least one layer");
    for (auto d : layer_dims)
        if (d == 0) throw ConfigError("layer widths must be positive");
    if (sort_k == 0) throw ConfigError("sort_k must be at least 1");
    if (conv1_channels == 0 || conv2_channels == 0 || conv2_kernel == 0 || dense_units == 0)
        throw ConfigError("readout sizes must be positive");
    if (sort_k / 2 < conv2_kernel)
        throw ConfigError("sort_k = " + std::to_string(sort_k) + " leaves " +
                          std::to_string(sort_k / 2) + " rows after max pooling, fewer than the conv2 kernel " +
                          std::to_string(conv2_kernel));
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
    if (!(kernel_sigma > 0.0)) throw ConfigError("kernel_sigma must be positive");
}

std::size_t ModelConfig::concat_width() const {
    return std::accumulate(layer_dims.begin(), layer_dims.end(), std::size_t{0});
}

std::size_t ModelConfig::conv2_length() const { return sort_k / 2 - conv2_kernel + 1; }

std::vector<std::pair<std::string, std::string>> ModelConfig::to_meta() const {
    std::string dims;
    for (auto d : layer_dims) dims += (dims.empty() ? "" : ",") + std::to_string(d);
    return {
        {"layer_dims", dims},
        {"sort_k", std::to_string(sort_k)},
        {"edge_scheme", std::string(to_string(edge_scheme))},
        {"normalization", std::string(to_string(normalization))},
        {"addon_enabled", addon_enabled ? "1" : "0"},
        {"addon_update", std::string(to_string(addon_update))},
        {"addon_bias", addon_bias ? "1" : "0"},
        {"input_edge_one", input_edge_one ? "1" : "0"},
        {"activation", std::string(to_string(activation))},
        {"kernel_sigma", text::format_double(kernel_sigma)},
        {"conv1_channels", std::to_string(conv1_channels)},
        {"conv2_channels", std::to_string(conv2_channels)},
        {"conv2_kernel", std::to_string(conv2_kernel)},
        {"dense_units", std::to_string(dense_units)},
        {"dropout", text::format_double(dropout)},
    };
}

ModelConfig ModelConfig::from_meta(const std::vector<std::pair<std::string, std::string>>& meta) {
    ModelConfig c;
    auto as_size = [](const std::string& key, const std::string& v) {
        std::size_t out = 0;
        if (!text::parse_number(std::string_view(v), out))
            throw ConfigError("invalid integer for " + key + ": '" + v + "'");
        return out;
    };
    auto as_double = [](const std::string& key, const std::string& v) {
        double out = 0;
        if (!text::parse_number(std::string_view(v), out))
            throw ConfigError("invalid number for " + key + ": '" + v + "'");
        return out;
    };
    auto as_bool = [](const std::string& key, const std::string& v) {
        if (v == "1" || v == "true") return true;
        if (v == "0" || v == "false") return false;
        throw ConfigError("invalid boolean for " + key + ": '" + v + "'");
    };
    for (const auto& [k, v] : meta) {
        if (k == "layer_dims") {
            c.layer_dims.clear();
            for (auto tok : text::split_fields(v)) c.layer_dims.push_back(as_size(k, std::string(tok)));
        } else if (k == "sort_k") {
            c.sort_k = as_size(k, v);
        } else if (k == "edge_scheme") {
            c.edge_scheme = parse_edge_scheme(v);
        } else if (k == "normalization") {
            c.normalization = parse_normalization(v);
        } else if (k == "addon_enabled") {
            c.addon_enabled = as_bool(k, v);
        } else if (k == "addon_update") {
            c.addon_update = parse_addon_update(v);
        } else if (k == "addon_bias") {
            c.addon_bias = as_bool(k, v);
        } else if (k == "input_edge_one") {
            c.input_edge_one = as_bool(k, v);
        } else if (k == "activation") {
            c.activation = parse_activation(v);
        } else if (k == "kernel_sigma") {
            c.kernel_sigma = as_double(k, v);
        } else if (k == "conv1_channels") {
            c.conv1_channels = as_size(k, v);
        } else if (k == "conv2_channels") {
            c.conv2_channels = as_size(k, v);
        } else if (k == "conv2_kernel") {
            c.conv2_kernel = as_size(k, v);
        } else if (k == "dense_units") {
            c.dense_units = as_size(k, v);
        } else if (k == "dropout") {
            c.dropout = as_double(k, v);
        }
    }
    return c;
}

// ---- edge statistics -------------------------------------------------------

EdgeStats compute_edge_stats(std::span<const GraphSample> samples) {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t count = 0;
    for (const auto& s : samples) {
        const Matrix& x = s.node_features;
        for (std::size_t w = 0; w < x.rows(); ++w) {
            for (std::size_t q = 0; q < x.rows(); ++q) {
                if (w == q || !s.base_adjacency(w, q)) continue;
                double d2 = 0.0;
                for (std::size_t c = 0; c < x.cols(); ++c) {
                    const double d = x(w, c) - x(q, c);
                    d2 += d * d;
                }
                const double d = std::sqrt(d2);
                sum += d;
                sum_sq += d * d;
                ++count;
            }
        }
    }
    if (count == 0) throw ArgumentError("edge statistics need at least one edge between distinct nodes");
    const double mu = sum / static_cast<double>(count);
    const double var = std::max(0.0, sum_sq / static_cast<double>(count) - mu * mu);
    const double sigma = std::sqrt(var);
    if (!(sigma > 0.0)) throw ArgumentError("node distances have zero spread; edge statistics undefined");
    return {mu, sigma};
}

// ---- parameters ------------------------------------------------------------

Tensor Linear::operator()(const Tensor& x) const {
    Tensor out = matmul(x, weight);
    if (bias.defined()) {
        const Tensor ones = Tensor::constant(Matrix(x.rows(), 1, 1.0));
        out = add(out, matmul(ones, bias));
    }
    return out;
}

std::vector<std::pair<std::string, Tensor>> ModelParams::named() const {
    std::vector<std::pair<std::string, Tensor>> out;
    for (std::size_t k = 0; k < conv_weights.size(); ++k)
        out.emplace_back("gconv" + std::to_string(k) + ".w", conv_weights[k]);
    auto add_linear = [&](const std::string& prefix, const Linear& l) {
        out.emplace_back(prefix + ".w", l.weight);
        if (l.bias.defined()) out.emplace_back(prefix + ".b", l.bias);
    };
    for (std::size_t k = 0; k < addons.size(); ++k) {
        const std::string prefix = "addon" + std::to_string(k + 1);
        add_linear(prefix + ".row", addons[k].row_map);
        add_linear(prefix + ".col", addons[k].col_map);
    }
    add_linear("readout.conv1", conv1);
    add_linear("readout.conv2", conv2);
    add_linear("readout.dense", dense);
    add_linear("readout.out", output);
    return out;
}

std::vector<Tensor> ModelParams::tensors() const {
    std::vector<Tensor> out;
    for (auto& [name, t] : named()) out.push_back(t);
    return out;
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : named()) n += t.value().size();
    return n;
}

ModelParams ModelParams::clone() const {
    auto copy = [](const Tensor& t) { return t.defined() ? Tensor::parameter(t.value()) : Tensor(); };
    auto copy_linear = [&](const Linear& l) { return Linear{copy(l.weight), copy(l.bias)}; };
    ModelParams p;
    for (const auto& w : conv_weights) p.conv_weights.push_back(copy(w));
    for (const auto& a : addons) p.addons.push_back({copy_linear(a.row_map), copy_linear(a.col_map)});
    p.conv1 = copy_linear(conv1);
    p.conv2 = copy_linear(conv2);
    p.dense = copy_linear(dense);
    p.output = copy_linear(output);
    return p;
}

namespace {

Tensor glorot(std::size_t fan_in, std::size_t fan_out, std::uint64_t seed, const std::string& name) {
    Rng rng = substream(seed, name);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix m(fan_in, fan_out);
    for (auto& v : m.values()) v = rng.uniform(-limit, limit);
    return Tensor::parameter(std::move(m));
}

Linear make_linear(std::size_t in, std::size_t out, bool bias, std::uint64_t seed, const std::string& name) {
    Linear l{glorot(in, out, seed, name + ".w"), Tensor()};
    if (bias) l.bias = Tensor::parameter(Matrix(1, out));
    return l;
}

}  // namespace

ModelParams init_params(const ModelConfig& config, std::size_t in_features, std::size_t num_classes,
                        std::uint64_t seed) {
    config.validate();
    if (in_features == 0) throw ConfigError("input feature width must be positive");
    if (num_classes < 2) throw ConfigError("classification needs at least 2 classes");
    ModelParams p;
    std::size_t prev = in_features;
    for (std::size_t k = 0; k < config.layer_dims.size(); ++k) {
        p.conv_weights.push_back(glorot(prev, config.layer_dims[k], seed, "gconv" + std::to_string(k) + ".w"));
        prev = config.layer_dims[k];
    }
    if (config.addon_enabled) {
        for (std::size_t k = 1; k < config.layer_dims.size(); ++k) {
            const std::string prefix = "addon" + std::to_string(k);
            const std::size_t width = config.layer_dims[k - 1];
            p.addons.push_back({make_linear(width, 1, config.addon_bias, seed, prefix + ".row"),
                                make_linear(width, 1, config.addon_bias, seed, prefix + ".col")});
        }
    }
    p.conv1 = make_linear(config.concat_width(), config.conv1_channels, true, seed, "readout.conv1");
    p.conv2 = make_linear(config.conv2_kernel * config.conv1_channels, config.conv2_channels, true, seed,
                          "readout.conv2");
    p.dense = make_linear(config.conv2_length() * config.conv2_channels, config.dense_units, true, seed,
                          "readout.dense");
    p.output = make_linear(config.dense_units, num_classes, true, seed, "readout.out");
    return p;
}

std::size_t expected_parameter_count(const ModelConfig& config, std::size_t in_features,
                                     std::size_t num_classes) {
    config.validate();
    std::size_t n = 0;
    std::size_t prev = in_features;
    for (auto d : config.layer_dims) {
        n += prev * d;
        prev = d;
    }
    if (config.addon_enabled) {
        for (std::size_t k = 1; k < config.layer_dims.size(); ++k)
            n += 2 * (config.layer_dims[k - 1] + (config.addon_bias ? 1 : 0));
    }
    n += config.concat_width() * config.conv1_channels + config.conv1_channels;
    n += config.conv2_kernel * config.conv1_channels * config.conv2_channels + config.conv2_channels;
    n += config.conv2_length() * config.conv2_channels * config.dense_units + config.dense_units;
    n += config.dense_units * num_classes + num_classes;
    return n;
}

// ---- layers ----------------------------------------------------------------

Tensor edge_features(const Tensor& h, EdgeScheme scheme, const std::optional<EdgeStats>& stats,
                     double kernel_sigma) {
    const std::size_t n = h.rows();
    switch (scheme) {
        case EdgeScheme::DefaultOne:
            return Tensor::constant(Matrix(n, n, 1.0));
        case EdgeScheme::ExpL2:
            return exp(l2_rowpair_norms(h));
        case EdgeScheme::ExpL2Squared: {
            const Tensor d = l2_rowpair_norms(h);
            return exp(mul(d, d));
        }
        case EdgeScheme::GaussKernel: {
            const Tensor d = l2_rowpair_norms(h);
            return exp(scale(mul(d, d), -1.0 / (kernel_sigma * kernel_sigma)));
        }
        case EdgeScheme::GaussianInput: {
            if (!stats) throw ArgumentError("gaussian_input edge scheme needs dataset edge statistics");
            const double sigma = stats->sigma;
            const Tensor t = scale(add_scalar(l2_rowpair_norms(h), -stats->mu), 1.0 / (2.0 * sigma));
            const double peak = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sigma);
            return scale(exp(neg(mul(t, t))), peak);
        }
    }
    throw ArgumentError("unknown edge scheme");
}

Tensor normalize_adjacency(const Tensor& a, Normalization mode) {
    if (a.rows() != a.cols()) throw ShapeError("adjacency must be square, got " + a.shape_string());
    const Tensor degree = row_sum(a);
    for (std::size_t i = 0; i < degree.rows(); ++i) {
        if (!(degree.value()(i, 0) > 0.0))
            throw DegeneracyError("node " + std::to_string(i) + " has non-positive degree " +
                                      text::format_double(degree.value()(i, 0)),
                                  i);
    }
    switch (mode) {
        case Normalization::Row:
            return scale_rows(a, reciprocal(degree));
        case Normalization::Column:
            return scale_cols(a, reciprocal(degree));
        case Normalization::NaiveSymmetric: {
            const Tensor inv = reciprocal(degree);
            return scale_cols(scale_rows(a, inv), inv);
        }
        case Normalization::Symmetric: {
            const Tensor inv_sqrt = reciprocal(sqrt(degree));
            return scale_cols(scale_rows(a, inv_sqrt), inv_sqrt);
        }
    }
    throw ArgumentError("unknown normalization");
}

Tensor graph_conv(const Tensor& h, const Tensor& a_norm, const Tensor& w, Activation activation) {
    const Tensor z = matmul(matmul(a_norm, h), w);
    return activation == Activation::Tanh ? tanh(z) : relu(z);
}

Tensor addon_layer(const Tensor& h, const Tensor& a_norm, const AddonParams& params, AddonUpdate update) {
    const Tensor update_matrix = broadcast_add(params.row_map(h), transpose(params.col_map(h)));
    return update == AddonUpdate::Matmul ? matmul(update_matrix, a_norm) : mul(update_matrix, a_norm);
}

std::vector<std::size_t> sort_pooling_order(const Matrix& h) {
    std::vector<std::size_t> order(h.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t last = h.cols() - 1;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (h(a, last) != h(b, last)) return h(a, last) > h(b, last);
        if (last > 0 && h(a, last - 1) != h(b, last - 1)) return h(a, last - 1) > h(b, last - 1);
        return a < b;
    });
    return order;
}

Tensor sort_pooling(const Tensor& h, std::size_t k) {
    auto order = sort_pooling_order(h.value());
    if (order.size() > k) order.resize(k);
    return gather_rows(h, order, k);
}

Tensor readout(const Tensor& pooled, const ModelParams& params, const ModelConfig& config, Rng* dropout_rng) {
    if (pooled.rows() != config.sort_k || pooled.cols() != config.concat_width())
        throw ShapeError("readout expects " + std::to_string(config.sort_k) + "x" +
                         std::to_string(config.concat_width()) + " input, got " + pooled.shape_string());
    // conv1 has kernel = stride = row width, i.e. a shared linear map per row.
    const Tensor c1 = relu(params.conv1(pooled));
    const Tensor pooled_c1 = maxpool_rows(c1, 2);
    const Tensor c2 = relu(params.conv2(unfold_rows(pooled_c1, config.conv2_kernel)));
    Tensor hidden = relu(params.dense(reshape(c2, 1, c2.value().size())));
    if (dropout_rng && config.dropout > 0.0) {
        Matrix mask(1, hidden.cols());
        const double keep_scale = 1.0 / (1.0 - config.dropout);
        for (auto& v : mask.values()) v = dropout_rng->uniform() < config.dropout ? 0.0 : keep_scale;
        hidden = mul(hidden, Tensor::constant(std::move(mask)));
    }
    return params.output(hidden);
}

Tensor forward(const GraphSample& sample, const ModelParams& params, const ModelConfig& config,
               const std::optional<EdgeStats>& stats, Rng* dropout_rng) {
    const std::size_t n = sample.node_count();
    if (n == 0) throw ArgumentError("sample has no nodes");
    if (params.conv_weights.size() != config.layer_dims.size())
        throw ShapeError("parameters have " + std::to_string(params.conv_weights.size()) +
                         " graph convolutions, config expects " + std::to_string(config.layer_dims.size()));
    if (config.addon_enabled && params.addons.size() + 1 != config.layer_dims.size())
        throw ShapeError("add-on parameters do not match the layer count");

    // Edges exist where the sample has them, plus self-loops.
    std::optional<Tensor> mask;
    if (sample.base_adjacency.count() != n * (n - 1)) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) m(i, j) = (i == j || sample.base_adjacency(i, j)) ? 1.0 : 0.0;
        mask = Tensor::constant(std::move(m));
    }

    Tensor h = Tensor::constant(sample.node_features);
    std::vector<Tensor> hidden;
    for (std::size_t k = 0; k < config.layer_dims.size(); ++k) {
        const EdgeScheme scheme = (k == 0 && config.input_edge_one) ? EdgeScheme::DefaultOne : config.edge_scheme;
        Tensor a = edge_features(h, scheme, stats, config.kernel_sigma);
        if (mask) a = mul(a, *mask);
        Tensor a_norm = normalize_adjacency(a, config.normalization);
        if (k > 0 && config.addon_enabled) a_norm = addon_layer(h, a_norm, params.addons[k - 1], config.addon_update);
        h = graph_conv(h, a_norm, params.conv_weights[k], config.activation);
        hidden.push_back(h);
    }
    const Tensor pooled = sort_pooling(concat_cols(hidden), config.sort_k);
    return readout(pooled, params, config, dropout_rng);
}

std::size_t predict(const Tensor& logits) {
    const auto v = logits.value().values();
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// ---- training --------------------------------------------------------------

namespace {

std::size_t check_dataset(std::span<const GraphSample> samples, std::size_t num_classes) {
    if (samples.empty()) throw ArgumentError("dataset is empty");
    const std::size_t width = samples[0].node_features.cols();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (s.node_features.cols() != width)
            throw ShapeError("sample " + std::to_string(i) + " has " + std::to_string(s.node_features.cols()) +
                             " features, expected " + std::to_string(width));
        if (s.label < 0 || static_cast<std::size_t>(s.label) >= num_classes)
            throw ArgumentError("sample " + std::to_string(i) + " label " + std::to_string(s.label) +
                                " outside [0, " + std::to_string(num_classes) + ")");
    }
    return width;
}

void check_shapes(const ModelParams& have, const ModelParams& want) {
    const auto a = have.named();
    const auto b = want.named();
    if (a.size() != b.size())
        throw ShapeError("parameter set has " + std::to_string(a.size()) + " arrays, config expects " +
                         std::to_string(b.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].first != b[i].first || !a[i].second.value().same_shape(b[i].second.value()))
            throw ShapeError("parameter " + a[i].first + " (" + a[i].second.shape_string() +
                             ") does not match config (" + b[i].first + " " + b[i].second.shape_string() + ")");
    }
}

std::string sample_name(const GraphSample& s, std::size_t index) {
    return s.id.empty() ? "#" + std::to_string(index) : s.id;
}

}  // namespace

TrainResult train(std::span<const GraphSample> samples, std::size_t num_classes, const ModelConfig& config,
                  const TrainOptions& options, const EpochCallback& on_epoch, std::optional<ModelParams> initial) {
    config.validate();
    if (options.batch_size == 0) throw ConfigError("batch size must be at least 1");
    const std::size_t in_features = check_dataset(samples, num_classes);

    TrainResult result;
    if (config.edge_scheme == EdgeScheme::GaussianInput) result.stats = compute_edge_stats(samples);
    ModelParams fresh = init_params(config, in_features, num_classes, substream_seed(options.seed, "init"));
    if (initial) {
        check_shapes(*initial, fresh);
        result.params = std::move(*initial);
    } else {
        result.params = std::move(fresh);
    }
    std::vector<Tensor> params = result.params.tensors();
    AdamState adam(options.adam);

    const std::size_t n = samples.size();
    std::vector<std::size_t> order(n);
    for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle = substream(options.seed, "shuffle", epoch);
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
        const std::uint64_t dropout_seed = substream_seed(options.seed, "dropout", epoch);

        double epoch_loss = 0.0;
        std::size_t epoch_correct = 0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < n; start += options.batch_size, ++batch_index) {
            const std::size_t end = std::min(n, start + options.batch_size);
            const std::size_t count = end - start;
            std::vector<std::vector<Matrix>> grads(count);
            std::vector<double> losses(count);
            std::vector<char> correct(count);

            parallel_for(count, options.workers, [&](std::size_t i) {
                const std::size_t idx = order[start + i];
                const GraphSample& sample = samples[idx];
                try {
                    const ModelParams local = result.params.clone();
                    Rng dropout = substream(dropout_seed, "sample", idx);
                    const Tensor logits = forward(sample, local, config, result.stats, &dropout);
                    const Tensor loss = softmax_cross_entropy(logits, static_cast<std::size_t>(sample.label));
                    loss.backward();
                    losses[i] = loss.item();
                    correct[i] = predict(logits) == static_cast<std::size_t>(sample.label);
                    for (const auto& t : local.tensors()) grads[i].push_back(t.grad());
                } catch (const NumericError& e) {
                    throw NumericError("numeric failure at epoch " + std::to_string(epoch) + ", batch " +
                                       std::to_string(batch_index) + ", sample " + sample_name(sample, idx) +
                                       ": " + e.what());
                }
            });

            // Ordered reduction keeps the mean gradient independent of scheduling.
            std::vector<Matrix> mean = grads[0];
            for (std::size_t i = 1; i < count; ++i)
                for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += grads[i][k];
            const double inv = 1.0 / static_cast<double>(count);
            for (auto& m : mean)
                for (auto& v : m.values()) v *= inv;
            for (std::size_t k = 0; k < mean.size(); ++k) {
                if (!mean[k].all_finite())
                    throw NumericError("non-finite gradient at epoch " + std::to_string(epoch) + ", batch " +
                                       std::to_string(batch_index));
            }
            adam_step(params, mean, adam);

            for (std::size_t i = 0; i < count; ++i) {
                epoch_loss += losses[i];
                epoch_correct += static_cast<std::size_t>(correct[i]);
            }
        }
        EpochMetrics m{epoch, epoch_loss / static_cast<double>(n),
                       static_cast<double>(epoch_correct) / static_cast<double>(n)};
        result.history.push_back(m);
        if (on_epoch) on_epoch(m, result.params);
    }
    return result;
}

Evaluation evaluate(std::span<const GraphSample> samples, std::size_t num_classes, const ModelParams& params,
                    const ModelConfig& config, const std::optional<EdgeStats>& stats, std::size_t workers) {
    check_dataset(samples, num_classes);
    std::vector<double> losses(samples.size());
    Evaluation ev;
    ev.predictions.resize(samples.size());
    parallel_for(samples.size(), workers, [&](std::size_t i) {
        const Tensor logits = forward(samples[i], params, config, stats, nullptr);
        losses[i] = softmax_cross_entropy(logits, static_cast<std::size_t>(samples[i].label)).item();
        ev.predictions[i] = predict(logits);
    });
    ev.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        ev.loss += losses[i];
        const auto truth = static_cast<std::size_t>(samples[i].label);
        ++ev.confusion[truth][ev.predictions[i]];
        correct += ev.predictions[i] == truth;
    }
    ev.loss /= static_cast<double>(samples.size());
    ev.accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
    return ev;
}

// ---- checkpoints -----------------------------------------------------------

Checkpoint make_checkpoint(const ModelParams& params, const ModelConfig& config, std::size_t in_features,
                           std::size_t num_classes, const std::optional<EdgeStats>& stats) {
    Checkpoint ckpt;
    ckpt.meta = config.to_meta();
    ckpt.meta.emplace_back("in_features", std::to_string(in_features));
    ckpt.meta.emplace_back("num_classes", std::to_string(num_classes));
    if (stats) {
        ckpt.meta.emplace_back("edge_mu", text::format_double(stats->mu));
        ckpt.meta.emplace_back("edge_sigma", text::format_double(stats->sigma));
    }
    for (const auto& [name, t] : params.named()) ckpt.arrays.push_back({name, t.value()});
    return ckpt;
}

ModelParams params_from_checkpoint(const Checkpoint& ckpt, const ModelConfig& config, std::size_t in_features,
                                   std::size_t num_classes) {
    ModelParams p = init_params(config, in_features, num_classes, 0);
    const auto named = p.named();
    for (const auto& [name, t] : named) {
        const Matrix* stored = ckpt.find(name);
        if (!stored) throw ShapeError("checkpoint has no array '" + name + "' required by the configuration");
        if (!stored->same_shape(t.value()))
            throw ShapeError("checkpoint array '" + name + "' is " + stored->shape_string() +
                             " but the configuration needs " + t.shape_string());
        Tensor handle = t;
        handle.mutable_value() = *stored;
    }
    if (ckpt.arrays.size() != named.size()) {
        for (const auto& a : ckpt.arrays) {
            const bool known = std::any_of(named.begin(), named.end(), [&](const auto& nt) { return nt.first == a.name; });
            if (!known) throw ShapeError("checkpoint array '" + a.name + "' is not used by the configuration");
        }
    }
    return p;
}

std::optional<EdgeStats> stats_from_checkpoint(const Checkpoint& ckpt) {
    const auto mu = ckpt.meta_value("edge_mu");
    const auto sigma = ckpt.meta_value("edge_sigma");
    if (!mu || !sigma) return std::nullopt;
    EdgeStats s;
    if (!text::parse_number(std::string_view(*mu), s.mu) || !text::parse_number(std::string_view(*sigma), s.sigma))
        throw FormatError("invalid edge statistics in checkpoint", 0);
    return s;
}

}  // namespace semgraph
