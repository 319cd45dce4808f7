#include "semgraph/adam.hpp"

#include <cmath>

#include "semgraph/error.hpp"

namespace semgraph {

void adam_step(std::span<Tensor> params, std::span<const Matrix> grads, AdamState& state) {
    if (params.size() != grads.size())
        throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
    if (state.step == 0 && state.first_moment.empty()) {
        for (const auto& p : params) {
            state.first_moment.emplace_back(p.rows(), p.cols());
            state.second_moment.emplace_back(p.rows(), p.cols());
        }
    }
    if (state.first_moment.size() != params.size())
        throw ShapeError("adam_step: optimizer state tracks " +
                         std::to_string(state.first_moment.size()) + " parameters, got " +
                         std::to_string(params.size()));
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (!grads[k].same_shape(params[k].value()) ||
            !state.first_moment[k].same_shape(params[k].value()))
            throw ShapeError("adam_step: parameter " + std::to_string(k) + " is " +
                             params[k].shape_string() + " but gradient is " +
                             grads[k].shape_string());
    }

    const AdamConfig& c = state.config;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bias1 = 1.0 - std::pow(c.beta1, t);
    const double bias2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        Matrix& w = params[k].mutable_value();
        Matrix& m = state.first_moment[k];
        Matrix& v = state.second_moment[k];
        const Matrix& g = grads[k];
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bias1;
            const double v_hat = v[i] / bias2;
            w[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
        }
    }
}

}  // namespace semgraph
