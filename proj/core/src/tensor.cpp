#include "semgraph/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "semgraph/error.hpp"

namespace semgraph {

// ---- Matrix ----------------------------------------------------------------

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows_ * cols_)
        throw ShapeError("matrix of shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                         " given " + std::to_string(data_.size()) + " values");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ShapeError("ragged matrix literal");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

std::string Matrix::shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix& Matrix::operator+=(const Matrix& o) {
    if (!same_shape(o)) throw ShapeError("cannot add " + o.shape_string() + " to " + shape_string());
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

// ---- Tensor ----------------------------------------------------------------

void Tensor::Node::accumulate(const Matrix& g) {
    if (!requires_grad) return;
    if (!has_grad) {
        grad = g;
        has_grad = true;
    } else {
        grad += g;
    }
}

Tensor Tensor::parameter(Matrix value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->requires_grad = true;
    return Tensor(std::move(node));
}

Tensor Tensor::constant(Matrix value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    return Tensor(std::move(node));
}

std::size_t Tensor::rows() const { return value().rows(); }
std::size_t Tensor::cols() const { return value().cols(); }

const Matrix& Tensor::value() const {
    if (!node_) throw ArgumentError("use of an undefined tensor");
    return node_->value;
}

Matrix& Tensor::mutable_value() {
    if (!node_) throw ArgumentError("use of an undefined tensor");
    return node_->value;
}

double Tensor::item() const {
    const Matrix& v = value();
    if (v.size() != 1) throw ShapeError("item() on a " + v.shape_string() + " tensor");
    return v[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
bool Tensor::has_grad() const { return node_ && node_->has_grad; }

Matrix Tensor::grad() const {
    if (has_grad()) return node_->grad;
    return Matrix(rows(), cols());
}

void Tensor::zero_grad() {
    if (!node_) return;
    node_->grad = Matrix();
    node_->has_grad = false;
}

Tensor Tensor::make_result(Matrix value, const char* op, std::vector<Tensor> inputs,
                           BackwardFn backward) {
    if (!value.all_finite())
        throw NumericError(std::string(op) + " produced a non-finite value");
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    for (const auto& t : inputs) node->requires_grad = node->requires_grad || t.requires_grad();
    if (node->requires_grad) {
        node->inputs.reserve(inputs.size());
        for (auto& t : inputs) node->inputs.push_back(t.node_);
        node->backward = std::move(backward);
    }
    return Tensor(std::move(node));
}

void Tensor::backward() const {
    if (value().size() != 1)
        throw ShapeError("backward() needs a 1x1 result, got " + value().shape_string());
    if (!node_->requires_grad) return;

    // Post-order DFS gives a topological order (inputs before consumers).
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next++].get();
            if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    node_->accumulate(Matrix(1, 1, 1.0));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward && n->has_grad) n->backward(*n);
    }
}

// ---- ops -------------------------------------------------------------------

namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (!a.value().same_shape(b.value()))
        throw ShapeError(std::string(op) + ": shapes " + a.shape_string() + " and " +
                         b.shape_string() + " differ");
}

Matrix matmul_values(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), b.cols());
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a(i, p);
            for (std::size_t j = 0; j < m; ++j) out(i, j) += aip * b(p, j);
        }
    }
    return out;
}

Matrix transpose_values(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

// Elementwise unary op whose derivative is expressed through input x and output y.
template <typename Fwd, typename Deriv>
Tensor unary(const char* op, const Tensor& a, Fwd f, Deriv dfdx) {
    Matrix out(a.rows(), a.cols());
    const Matrix& x = a.value();
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
    return Tensor::make_result(std::move(out), op, {a}, [dfdx](Tensor::Node& self) {
        auto& in = self.input(0);
        if (!in.requires_grad) return;
        Matrix g(self.value.rows(), self.value.cols());
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] = self.grad[i] * dfdx(in.value[i], self.value[i]);
        in.accumulate(g);
    });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: shapes " + a.shape_string() + " and " + b.shape_string() +
                         " are incompatible");
    return Tensor::make_result(matmul_values(a.value(), b.value()), "matmul", {a, b},
                               [](Tensor::Node& self) {
                                   auto& lhs = self.input(0);
                                   auto& rhs = self.input(1);
                                   if (lhs.requires_grad)
                                       lhs.accumulate(matmul_values(self.grad, transpose_values(rhs.value)));
                                   if (rhs.requires_grad)
                                       rhs.accumulate(matmul_values(transpose_values(lhs.value), self.grad));
                               });
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape("add", a, b);
    Matrix out = a.value();
    out += b.value();
    return Tensor::make_result(std::move(out), "add", {a, b}, [](Tensor::Node& self) {
        self.input(0).accumulate(self.grad);
        self.input(1).accumulate(self.grad);
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape("sub", a, b);
    Matrix out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
    return Tensor::make_result(std::move(out), "sub", {a, b}, [](Tensor::Node& self) {
        self.input(0).accumulate(self.grad);
        Matrix g = self.grad;
        for (auto& v : g.values()) v = -v;
        self.input(1).accumulate(g);
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape("mul", a, b);
    Matrix out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
    return Tensor::make_result(std::move(out), "mul", {a, b}, [](Tensor::Node& self) {
        auto& x = self.input(0);
        auto& y = self.input(1);
        if (x.requires_grad) {
            Matrix g = self.grad;
            for (std::size_t i = 0; i < g.size(); ++i) g[i] *= y.value[i];
            x.accumulate(g);
        }
        if (y.requires_grad) {
            Matrix g = self.grad;
            for (std::size_t i = 0; i < g.size(); ++i) g[i] *= x.value[i];
            y.accumulate(g);
        }
    });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor scale(const Tensor& a, double s) {
    return unary(
        "scale", a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
    return unary(
        "add_scalar", a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor exp(const Tensor& a) {
    return unary(
        "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor tanh(const Tensor& a) {
    return unary(
        "tanh", a, [](double x) { return std::tanh(x); },
        [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& a) {
    return unary(
        "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sqrt(const Tensor& a) {
    return unary(
        "sqrt", a, [](double x) { return std::sqrt(x); },
        [](double, double y) { return 0.5 / y; });
}

Tensor reciprocal(const Tensor& a) {
    return unary(
        "reciprocal", a, [](double x) { return 1.0 / x; },
        [](double, double y) { return -y * y; });
}

Tensor row_sum(const Tensor& a) {
    const Matrix& x = a.value();
    Matrix out(x.rows(), 1);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) out(i, 0) += x(i, j);
    return Tensor::make_result(std::move(out), "row_sum", {a}, [](Tensor::Node& self) {
        auto& in = self.input(0);
        Matrix g(in.value.rows(), in.value.cols());
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) g(i, j) = self.grad(i, 0);
        in.accumulate(g);
    });
}

Tensor transpose(const Tensor& a) {
    return Tensor::make_result(transpose_values(a.value()), "transpose", {a},
                               [](Tensor::Node& self) {
                                   self.input(0).accumulate(transpose_values(self.grad));
                               });
}

Tensor concat_cols(std::span<const Tensor> parts) {
    if (parts.empty()) throw ShapeError("concat_cols of nothing");
    const std::size_t rows = parts[0].rows();
    std::size_t cols = 0;
    for (const auto& p : parts) {
        if (p.rows() != rows)
            throw ShapeError("concat_cols: row counts differ (" + parts[0].shape_string() + " vs " +
                             p.shape_string() + ")");
        cols += p.cols();
    }
    Matrix out(rows, cols);
    std::size_t offset = 0;
    for (const auto& p : parts) {
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < p.cols(); ++j) out(i, offset + j) = p.value()(i, j);
        offset += p.cols();
    }
    return Tensor::make_result(std::move(out), "concat_cols", {parts.begin(), parts.end()},
                               [](Tensor::Node& self) {
                                   std::size_t off = 0;
                                   for (auto& in : self.inputs) {
                                       const std::size_t c = in->value.cols();
                                       if (in->requires_grad) {
                                           Matrix g(in->value.rows(), c);
                                           for (std::size_t i = 0; i < g.rows(); ++i)
                                               for (std::size_t j = 0; j < c; ++j)
                                                   g(i, j) = self.grad(i, off + j);
                                           in->accumulate(g);
                                       }
                                       off += c;
                                   }
                               });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
    if (begin > end || end > a.rows())
        throw ShapeError("slice_rows: range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") outside " + a.shape_string());
    Matrix out(end - begin, a.cols());
    for (std::size_t i = begin; i < end; ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i - begin, j) = a.value()(i, j);
    return Tensor::make_result(std::move(out), "slice_rows", {a}, [begin](Tensor::Node& self) {
        auto& in = self.input(0);
        Matrix g(in.value.rows(), in.value.cols());
        for (std::size_t i = 0; i < self.grad.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) g(begin + i, j) = self.grad(i, j);
        in.accumulate(g);
    });
}

Tensor reshape(const Tensor& a, std::size_t rows, std::size_t cols) {
    if (rows * cols != a.value().size())
        throw ShapeError("reshape: cannot view " + a.shape_string() + " as " +
                         std::to_string(rows) + "x" + std::to_string(cols));
    const auto v = a.value().values();
    Matrix out(rows, cols, std::vector<double>(v.begin(), v.end()));
    return Tensor::make_result(std::move(out), "reshape", {a}, [](Tensor::Node& self) {
        auto& in = self.input(0);
        const auto gv = self.grad.values();
        in.accumulate(Matrix(in.value.rows(), in.value.cols(), std::vector<double>(gv.begin(), gv.end())));
    });
}

Tensor broadcast_add(const Tensor& col, const Tensor& row) {
    if (col.cols() != 1 || row.rows() != 1)
        throw ShapeError("broadcast_add: expected n x 1 and 1 x m, got " + col.shape_string() +
                         " and " + row.shape_string());
    const std::size_t n = col.rows(), m = row.cols();
    Matrix out(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) out(i, j) = col.value()(i, 0) + row.value()(0, j);
    return Tensor::make_result(std::move(out), "broadcast_add", {col, row}, [](Tensor::Node& self) {
        auto& c = self.input(0);
        auto& r = self.input(1);
        Matrix gc(c.value.rows(), 1);
        Matrix gr(1, r.value.cols());
        for (std::size_t i = 0; i < self.grad.rows(); ++i) {
            for (std::size_t j = 0; j < self.grad.cols(); ++j) {
                gc(i, 0) += self.grad(i, j);
                gr(0, j) += self.grad(i, j);
            }
        }
        c.accumulate(gc);
        r.accumulate(gr);
    });
}

Tensor scale_rows(const Tensor& a, const Tensor& v) {
    if (v.rows() != a.rows() || v.cols() != 1)
        throw ShapeError("scale_rows: " + a.shape_string() + " needs a " +
                         std::to_string(a.rows()) + "x1 scale, got " + v.shape_string());
    Matrix out = a.value();
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) *= v.value()(i, 0);
    return Tensor::make_result(std::move(out), "scale_rows", {a, v}, [](Tensor::Node& self) {
        auto& x = self.input(0);
        auto& s = self.input(1);
        if (x.requires_grad) {
            Matrix g = self.grad;
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t j = 0; j < g.cols(); ++j) g(i, j) *= s.value(i, 0);
            x.accumulate(g);
        }
        if (s.requires_grad) {
            Matrix g(s.value.rows(), 1);
            for (std::size_t i = 0; i < self.grad.rows(); ++i)
                for (std::size_t j = 0; j < self.grad.cols(); ++j) g(i, 0) += self.grad(i, j) * x.value(i, j);
            s.accumulate(g);
        }
    });
}

Tensor scale_cols(const Tensor& a, const Tensor& v) {
    if (v.rows() != a.cols() || v.cols() != 1)
        throw ShapeError("scale_cols: " + a.shape_string() + " needs a " +
                         std::to_string(a.cols()) + "x1 scale, got " + v.shape_string());
    Matrix out = a.value();
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) *= v.value()(j, 0);
    return Tensor::make_result(std::move(out), "scale_cols", {a, v}, [](Tensor::Node& self) {
        auto& x = self.input(0);
        auto& s = self.input(1);
        if (x.requires_grad) {
            Matrix g = self.grad;
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t j = 0; j < g.cols(); ++j) g(i, j) *= s.value(j, 0);
            x.accumulate(g);
        }
        if (s.requires_grad) {
            Matrix g(s.value.rows(), 1);
            for (std::size_t i = 0; i < self.grad.rows(); ++i)
                for (std::size_t j = 0; j < self.grad.cols(); ++j) g(j, 0) += self.grad(i, j) * x.value(i, j);
            s.accumulate(g);
        }
    });
}

Tensor l2_rowpair_norms(const Tensor& h) {
    const Matrix& x = h.value();
    const std::size_t n = x.rows(), f = x.cols();
    if (n == 0) throw ShapeError("l2_rowpair_norms needs at least one row");
    Matrix out(n, n);
    for (std::size_t w = 0; w < n; ++w) {
        for (std::size_t q = 0; q < n; ++q) {
            double s = 0.0;
            for (std::size_t c = 0; c < f; ++c) {
                const double d = x(w, c) - x(q, c);
                s += d * d;
            }
            out(w, q) = std::sqrt(s + kPairNormEpsilon);
        }
    }
    return Tensor::make_result(std::move(out), "l2_rowpair_norms", {h}, [](Tensor::Node& self) {
        auto& in = self.input(0);
        const Matrix& x = in.value;
        const std::size_t n = x.rows(), f = x.cols();
        Matrix g(n, f);
        for (std::size_t w = 0; w < n; ++w) {
            for (std::size_t q = 0; q < n; ++q) {
                const double coef = self.grad(w, q) / self.value(w, q);
                for (std::size_t c = 0; c < f; ++c) {
                    const double d = coef * (x(w, c) - x(q, c));
                    g(w, c) += d;
                    g(q, c) -= d;
                }
            }
        }
        in.accumulate(g);
    });
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> indices, std::size_t out_rows) {
    if (indices.size() > out_rows) throw ShapeError("gather_rows: more indices than output rows");
    Matrix out(out_rows, a.cols());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        if (indices[r] >= a.rows())
            throw ShapeError("gather_rows: index " + std::to_string(indices[r]) + " outside " +
                             a.shape_string());
        for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = a.value()(indices[r], c);
    }
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    return Tensor::make_result(std::move(out), "gather_rows", {a}, [idx](Tensor::Node& self) {
        auto& in = self.input(0);
        Matrix g(in.value.rows(), in.value.cols());
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c) g(idx[r], c) += self.grad(r, c);
        in.accumulate(g);
    });
}

Tensor maxpool_rows(const Tensor& a, std::size_t window) {
    if (window == 0) throw ShapeError("maxpool_rows: window must be positive");
    const std::size_t out_rows = a.rows() / window;
    const std::size_t cols = a.cols();
    Matrix out(out_rows, cols);
    std::vector<std::size_t> argmax(out_rows * cols);
    for (std::size_t r = 0; r < out_rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            std::size_t best = r * window;
            for (std::size_t k = 1; k < window; ++k)
                if (a.value()(r * window + k, c) > a.value()(best, c)) best = r * window + k;
            out(r, c) = a.value()(best, c);
            argmax[r * cols + c] = best;
        }
    }
    return Tensor::make_result(std::move(out), "maxpool_rows", {a}, [argmax](Tensor::Node& self) {
        auto& in = self.input(0);
        Matrix g(in.value.rows(), in.value.cols());
        const std::size_t cols = g.cols();
        for (std::size_t r = 0; r < self.grad.rows(); ++r)
            for (std::size_t c = 0; c < cols; ++c) g(argmax[r * cols + c], c) += self.grad(r, c);
        in.accumulate(g);
    });
}

Tensor unfold_rows(const Tensor& a, std::size_t kernel) {
    if (kernel == 0 || kernel > a.rows())
        throw ShapeError("unfold_rows: kernel " + std::to_string(kernel) + " does not fit " +
                         a.shape_string());
    const std::size_t out_rows = a.rows() - kernel + 1;
    const std::size_t cols = a.cols();
    Matrix out(out_rows, kernel * cols);
    for (std::size_t i = 0; i < out_rows; ++i)
        for (std::size_t j = 0; j < kernel; ++j)
            for (std::size_t c = 0; c < cols; ++c) out(i, j * cols + c) = a.value()(i + j, c);
    return Tensor::make_result(std::move(out), "unfold_rows", {a}, [kernel](Tensor::Node& self) {
        auto& in = self.input(0);
        const std::size_t cols = in.value.cols();
        Matrix g(in.value.rows(), cols);
        for (std::size_t i = 0; i < self.grad.rows(); ++i)
            for (std::size_t j = 0; j < kernel; ++j)
                for (std::size_t c = 0; c < cols; ++c) g(i + j, c) += self.grad(i, j * cols + c);
        in.accumulate(g);
    });
}

std::vector<double> softmax(std::span<const double> logits) {
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(logits[i] - top);
        total += p[i];
    }
    for (auto& v : p) v /= total;
    return p;
}

Tensor softmax_cross_entropy(const Tensor& logits, std::size_t label) {
    if (logits.rows() != 1 || logits.cols() < 2)
        throw ShapeError("softmax_cross_entropy needs 1 x C logits with C >= 2, got " +
                         logits.shape_string());
    if (label >= logits.cols())
        throw ArgumentError("class label " + std::to_string(label) + " outside [0, " +
                            std::to_string(logits.cols()) + ")");
    const auto z = logits.value().values();
    const double top = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double v : z) total += std::exp(v - top);
    const double loss = std::log(total) - (z[label] - top);
    return Tensor::make_result(Matrix(1, 1, loss), "softmax_cross_entropy", {logits},
                               [label](Tensor::Node& self) {
                                   auto& in = self.input(0);
                                   const auto p = softmax(in.value.values());
                                   Matrix g(1, p.size());
                                   for (std::size_t i = 0; i < p.size(); ++i)
                                       g(0, i) = self.grad(0, 0) * (p[i] - (i == label ? 1.0 : 0.0));
                                   in.accumulate(g);
                               });
}

}  // namespace semgraph
