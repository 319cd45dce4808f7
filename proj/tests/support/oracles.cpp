#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace semgraph::testing {

std::set<std::vector<std::size_t>> union_find_components(std::span<const Point3> pts, double tau) {
    std::vector<std::size_t> parent(pts.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            const double dx = pts[i].x - pts[j].x;
            const double dy = pts[i].y - pts[j].y;
            const double dz = pts[i].z - pts[j].z;
            if (std::sqrt(dx * dx + dy * dy + dz * dz) <= tau) parent[find(i)] = find(j);
        }
    }
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < pts.size(); ++i) groups[find(i)].push_back(i);
    std::set<std::vector<std::size_t>> out;
    for (auto& [root, members] : groups) out.insert(members);
    return out;
}

double relative_error(double a, double b, double floor) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

namespace {

void clear(std::span<Tensor> params) {
    for (auto& p : params) p.zero_grad();
}

struct Probe {
    double slope = 0.0;  // central difference at h
    bool smooth = true;
};

// f(s) is the loss at offset s along the probed coordinate or direction. On a
// smooth stretch the one-sided gap f(h) - 2 f(0) + f(-h) shrinks with h^2, so
// it scales by 1/16 from h to h/4; a kink keeps it roughly h-proportional and
// a jump keeps it constant, both of which break the ratio.
Probe probe(const std::function<double(double)>& f, double h) {
    const double f0 = f(0.0);
    const double up = f(h), down = f(-h);
    const double up4 = f(h / 4), down4 = f(-h / 4);
    Probe p;
    p.slope = (up - down) / (2.0 * h);
    const double fine = (up4 - down4) / (h / 2);
    const double gap = (up - 2.0 * f0 + down) / h;
    const double gap4 = (up4 - 2.0 * f0 + down4) / (h / 4);
    const double scale = std::max({std::abs(p.slope), std::abs(fine), 1e-4});
    p.smooth = std::abs(p.slope - fine) <= 1e-3 * scale && std::abs(gap4 - gap / 4) <= 1e-3 * scale;
    return p;
}

}  // namespace

GradCheck check_gradients(const std::function<Tensor()>& loss, std::span<Tensor> params, double h) {
    clear(params);
    loss().backward();
    std::vector<Matrix> analytic;
    for (auto& p : params) analytic.push_back(p.grad());
    clear(params);

    GradCheck out;
    for (std::size_t k = 0; k < params.size(); ++k) {
        Matrix& v = params[k].mutable_value();
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double saved = v[i];
            const Probe p = probe(
                [&](double s) {
                    v[i] = saved + s;
                    return loss().item();
                },
                h);
            v[i] = saved;
            if (!p.smooth) {
                ++out.nonsmooth;
                continue;
            }
            out.max_rel_error = std::max(out.max_rel_error, relative_error(analytic[k][i], p.slope));
            ++out.checked;
        }
    }
    return out;
}

GradCheck check_directional(const std::function<Tensor()>& loss, std::span<Tensor> params, Rng& rng,
                            std::size_t directions, double h) {
    clear(params);
    loss().backward();
    std::vector<Matrix> analytic;
    for (auto& p : params) analytic.push_back(p.grad());
    clear(params);

    std::vector<Matrix> saved;
    for (auto& p : params) saved.push_back(p.value());
    GradCheck out;
    for (std::size_t draw = 0; draw < 4 * directions && out.checked < directions; ++draw) {
        std::vector<Matrix> dir;
        double projected = 0.0;
        for (std::size_t k = 0; k < params.size(); ++k) {
            Matrix m(params[k].rows(), params[k].cols());
            for (std::size_t i = 0; i < m.size(); ++i) {
                m[i] = rng.uniform(-1.0, 1.0);
                projected += m[i] * analytic[k][i];
            }
            dir.push_back(std::move(m));
        }
        const Probe p = probe(
            [&](double s) {
                for (std::size_t k = 0; k < params.size(); ++k) {
                    Matrix& v = params[k].mutable_value();
                    for (std::size_t i = 0; i < v.size(); ++i) v[i] = saved[k][i] + s * dir[k][i];
                }
                return loss().item();
            },
            h);
        for (std::size_t k = 0; k < params.size(); ++k) params[k].mutable_value() = saved[k];
        if (!p.smooth) {
            ++out.nonsmooth;
            continue;
        }
        out.max_rel_error = std::max(out.max_rel_error, relative_error(projected, p.slope));
        ++out.checked;
    }
    return out;
}

namespace {

Matrix product(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
            out(i, j) = acc;
        }
    }
    return out;
}

Matrix dense(const Matrix& x, const Linear& l, bool rectify) {
    Matrix out = product(x, l.weight.value());
    for (std::size_t i = 0; i < out.rows(); ++i) {
        for (std::size_t j = 0; j < out.cols(); ++j) {
            double v = out(i, j) + l.bias.value()(0, j);
            out(i, j) = rectify ? std::max(v, 0.0) : v;
        }
    }
    return out;
}

}  // namespace

Matrix backbone_logits(const GraphSample& sample, const ModelParams& params, const ModelConfig& config) {
    const std::size_t n = sample.node_count();
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        double degree = 0.0;
        for (std::size_t j = 0; j < n; ++j) degree += (i == j || sample.base_adjacency(i, j)) ? 1.0 : 0.0;
        for (std::size_t j = 0; j < n; ++j)
            a(i, j) = ((i == j || sample.base_adjacency(i, j)) ? 1.0 : 0.0) * (1.0 / degree);
    }

    Matrix h = sample.node_features;
    std::vector<Matrix> layers;
    for (const auto& w : params.conv_weights) {
        h = product(product(a, h), w.value());
        for (auto& v : h.values()) v = std::tanh(v);
        layers.push_back(h);
    }
    std::size_t width = 0;
    for (const auto& l : layers) width += l.cols();
    Matrix all(n, width);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t c = 0;
        for (const auto& l : layers)
            for (std::size_t j = 0; j < l.cols(); ++j) all(i, c++) = l(i, j);
    }

    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::sort(rows.begin(), rows.end(), [&](std::size_t x, std::size_t y) {
        const std::size_t last = width - 1;
        if (all(x, last) != all(y, last)) return all(x, last) > all(y, last);
        if (all(x, last - 1) != all(y, last - 1)) return all(x, last - 1) > all(y, last - 1);
        return x < y;
    });
    Matrix pooled(config.sort_k, width);
    for (std::size_t r = 0; r < std::min(n, config.sort_k); ++r)
        for (std::size_t c = 0; c < width; ++c) pooled(r, c) = all(rows[r], c);

    const Matrix c1 = dense(pooled, params.conv1, true);
    Matrix mp(c1.rows() / 2, c1.cols());
    for (std::size_t r = 0; r < mp.rows(); ++r)
        for (std::size_t c = 0; c < mp.cols(); ++c) mp(r, c) = std::max(c1(2 * r, c), c1(2 * r + 1, c));

    const std::size_t k = config.conv2_kernel;
    const std::size_t len = mp.rows() - k + 1;
    Matrix windows(len, k * mp.cols());
    for (std::size_t r = 0; r < len; ++r)
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t c = 0; c < mp.cols(); ++c) windows(r, j * mp.cols() + c) = mp(r + j, c);
    const Matrix c2 = dense(windows, params.conv2, true);

    Matrix flat(1, c2.size());
    for (std::size_t i = 0; i < c2.size(); ++i) flat[i] = c2[i];
    return dense(dense(flat, params.dense, true), params.output, false);
}

std::size_t hand_parameter_count(const ModelConfig& config, std::size_t in_features, std::size_t classes) {
    std::size_t total = 0;
    std::size_t prev = in_features;
    std::size_t concat = 0;
    for (auto d : config.layer_dims) {
        total += prev * d;
        prev = d;
        concat += d;
    }
    if (config.addon_enabled)
        for (std::size_t k = 0; k + 1 < config.layer_dims.size(); ++k)
            total += 2 * config.layer_dims[k] + (config.addon_bias ? 2 : 0);
    const std::size_t seq = config.sort_k / 2 - config.conv2_kernel + 1;
    total += concat * config.conv1_channels + config.conv1_channels;
    total += config.conv2_kernel * config.conv1_channels * config.conv2_channels + config.conv2_channels;
    total += seq * config.conv2_channels * config.dense_units + config.dense_units;
    total += config.dense_units * classes + classes;
    return total;
}

}  // namespace semgraph::testing
