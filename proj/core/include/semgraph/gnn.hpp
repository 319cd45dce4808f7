#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "semgraph/adam.hpp"
#include "semgraph/checkpoint.hpp"
#include "semgraph/graph_sample.hpp"
#include "semgraph/random.hpp"
#include "semgraph/tensor.hpp"

namespace semgraph {

/// How edge weights are computed from node representations h_w, h_q.
enum class EdgeScheme {
    DefaultOne,     // 1
    ExpL2,          // exp(|h_w - h_q|)
    ExpL2Squared,   // exp(|h_w - h_q|^2)
    GaussKernel,    // exp(-|h_w - h_q|^2 / sigma^2)
    GaussianInput,  // exp(-((x - mu) / (2 sigma))^2) / (sqrt(2 pi) sigma), x = |h_w - h_q|
};

enum class Normalization {
    Row,             // D^-1 A
    Column,          // A D^-1
    NaiveSymmetric,  // D^-1 A D^-1
    Symmetric,       // D^-1/2 A D^-1/2
};

enum class AddonUpdate { Matmul, Elementwise };
enum class Activation { Tanh, Relu };

std::string_view to_string(EdgeScheme s);
std::string_view to_string(Normalization n);
std::string_view to_string(AddonUpdate u);
std::string_view to_string(Activation a);
EdgeScheme parse_edge_scheme(std::string_view s);
Normalization parse_normalization(std::string_view s);
AddonUpdate parse_addon_update(std::string_view s);
Activation parse_activation(std::string_view s);

inline constexpr EdgeScheme kAllEdgeSchemes[] = {EdgeScheme::DefaultOne, EdgeScheme::ExpL2,
                                                 EdgeScheme::ExpL2Squared, EdgeScheme::GaussKernel,
                                                 EdgeScheme::GaussianInput};
inline constexpr Normalization kAllNormalizations[] = {Normalization::Row, Normalization::Column,
                                                       Normalization::NaiveSymmetric,
                                                       Normalization::Symmetric};

struct ModelConfig {
    std::vector<std::size_t> layer_dims{32, 32, 32, 1};
    std::size_t sort_k = 30;  // rows kept by SortPooling
    EdgeScheme edge_scheme = EdgeScheme::ExpL2;
    Normalization normalization = Normalization::Row;
    bool addon_enabled = true;
    AddonUpdate addon_update = AddonUpdate::Matmul;
    bool addon_bias = true;
    /// Layer-0 edges fixed to 1 (one-hot datasets); later layers still use edge_scheme.
    bool input_edge_one = false;
    Activation activation = Activation::Tanh;
    double kernel_sigma = 1.0;

    std::size_t conv1_channels = 16;
    std::size_t conv2_channels = 32;
    std::size_t conv2_kernel = 5;
    std::size_t dense_units = 128;
    double dropout = 0.5;

    /// Throws ConfigError for unusable combinations (e.g. sort_k too small for conv2).
    void validate() const;
    std::size_t concat_width() const;
    /// Sequence length after maxpool and conv2.
    std::size_t conv2_length() const;

    std::vector<std::pair<std::string, std::string>> to_meta() const;
    /// Inverse of to_meta; unknown keys are ignored, missing keys keep defaults.
    static ModelConfig from_meta(const std::vector<std::pair<std::string, std::string>>& meta);
};

/// Mean and standard deviation of node distances over a dataset.
struct EdgeStats {
    double mu = 0.0;
    double sigma = 1.0;
};

/// Statistics over every connected node pair (w != q) of every sample.
EdgeStats compute_edge_stats(std::span<const GraphSample> samples);

struct Linear {
    Tensor weight;  // in x out
    Tensor bias;    // 1 x out, may be undefined

    /// x * weight (+ bias on every row)
    Tensor operator()(const Tensor& x) const;
};

struct AddonParams {
    Linear row_map;  // f -> 1, broadcast along rows
    Linear col_map;  // f -> 1, transposed and broadcast along columns
};

struct ModelParams {
    std::vector<Tensor> conv_weights;  // W^0..W^{L-1}
    std::vector<AddonParams> addons;   // between consecutive convolutions; empty when disabled
    Linear conv1;
    Linear conv2;
    Linear dense;
    Linear output;

    /// Every trainable tensor with a stable name, in a fixed order.
    std::vector<std::pair<std::string, Tensor>> named() const;
    std::vector<Tensor> tensors() const;
    std::size_t parameter_count() const;
    /// Deep copy with fresh gradient-free leaves.
    ModelParams clone() const;
};

/// Glorot-uniform weights, zero biases, drawn from named sub-streams of `seed`.
ModelParams init_params(const ModelConfig& config, std::size_t in_features,
                        std::size_t num_classes, std::uint64_t seed);

/// Closed-form trainable-parameter count for a configuration.
std::size_t expected_parameter_count(const ModelConfig& config, std::size_t in_features,
                                     std::size_t num_classes);

Tensor edge_features(const Tensor& h, EdgeScheme scheme, const std::optional<EdgeStats>& stats,
                     double kernel_sigma = 1.0);

/// Throws DegeneracyError when a degree (row sum) is not positive.
Tensor normalize_adjacency(const Tensor& a, Normalization mode);

Tensor graph_conv(const Tensor& h, const Tensor& a_norm, const Tensor& w,
                  Activation activation = Activation::Tanh);

/// (row_map(h) + col_map(h)^T) combined with a_norm by matrix product or entrywise.
Tensor addon_layer(const Tensor& h, const Tensor& a_norm, const AddonParams& params,
                   AddonUpdate update);

/// Row order used by SortPooling: last column descending, ties broken by the
/// next-to-last column descending, then by original index.
std::vector<std::size_t> sort_pooling_order(const Matrix& h);

Tensor sort_pooling(const Tensor& h, std::size_t k);

/// Dropout is applied when `dropout_rng` is non-null.
Tensor readout(const Tensor& pooled, const ModelParams& params, const ModelConfig& config,
               Rng* dropout_rng);

/// Logits (1 x C) for one sample. `dropout_rng` selects train mode.
Tensor forward(const GraphSample& sample, const ModelParams& params, const ModelConfig& config,
               const std::optional<EdgeStats>& stats, Rng* dropout_rng = nullptr);

std::size_t predict(const Tensor& logits);

struct EpochMetrics {
    std::size_t epoch = 0;
    double loss = 0.0;      // mean training loss over the epoch (train mode)
    double accuracy = 0.0;  // fraction of training samples classified correctly during the epoch
};

struct TrainOptions {
    std::size_t epochs = 200;
    std::size_t batch_size = 20;
    AdamConfig adam;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
};

struct TrainResult {
    ModelParams params;
    std::optional<EdgeStats> stats;
    std::vector<EpochMetrics> history;
};

using EpochCallback = std::function<void(const EpochMetrics&, const ModelParams&)>;

/// Mini-batch training: per-sample backward passes, mean gradient per batch,
/// one Adam step per batch, seeded shuffling each epoch.
///
/// `initial` resumes from existing parameters (shapes must match the config).
TrainResult train(std::span<const GraphSample> samples, std::size_t num_classes,
                  const ModelConfig& config, const TrainOptions& options,
                  const EpochCallback& on_epoch = {},
                  std::optional<ModelParams> initial = std::nullopt);

struct Evaluation {
    double loss = 0.0;
    double accuracy = 0.0;
    std::vector<std::size_t> predictions;
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

Evaluation evaluate(std::span<const GraphSample> samples, std::size_t num_classes,
                    const ModelParams& params, const ModelConfig& config,
                    const std::optional<EdgeStats>& stats, std::size_t workers = 1);

/// Parameters, configuration, class count and edge statistics in one checkpoint.
Checkpoint make_checkpoint(const ModelParams& params, const ModelConfig& config,
                           std::size_t in_features, std::size_t num_classes,
                           const std::optional<EdgeStats>& stats);

/// Copies checkpoint arrays into parameters built for `config`. Throws
/// ShapeError when an array is missing or has a different shape.
ModelParams params_from_checkpoint(const Checkpoint& ckpt, const ModelConfig& config,
                                   std::size_t in_features, std::size_t num_classes);

std::optional<EdgeStats> stats_from_checkpoint(const Checkpoint& ckpt);

}  // namespace semgraph
