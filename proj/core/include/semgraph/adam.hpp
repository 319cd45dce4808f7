#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "semgraph/tensor.hpp"

namespace semgraph {

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Moment estimates for one list of parameters (bias-corrected Adam).
struct AdamState {
    AdamConfig config;
    std::vector<Matrix> first_moment;
    std::vector<Matrix> second_moment;
    std::int64_t step = 0;

    AdamState() = default;
    explicit AdamState(AdamConfig cfg) : config(cfg) {}
};

/// One update of `params` from `grads` (matched by position). Moments are
/// created on the first call; later calls must keep the same shapes.
void adam_step(std::span<Tensor> params, std::span<const Matrix> grads, AdamState& state);

}  // namespace semgraph
