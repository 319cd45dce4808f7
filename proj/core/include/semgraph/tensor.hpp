#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace semgraph {

/// Dense row-major matrix of doubles. Plain value type with no autodiff.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    std::string shape_string() const;
    bool all_finite() const;

    Matrix& operator+=(const Matrix& o);

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Node in a dynamically recorded computation graph.
///
/// A Tensor is a shared handle: copies refer to the same value and gradient.
/// Every op checks its output for NaN/Inf and throws NumericError.
/// `backward()` on a 1x1 result walks the graph in reverse topological order
/// and accumulates (never overwrites) gradients into every tensor that
/// requires them.
class Tensor {
public:
    Tensor() = default;

    /// Leaf that receives gradients.
    static Tensor parameter(Matrix value);
    /// Leaf excluded from differentiation.
    static Tensor constant(Matrix value);

    bool defined() const { return node_ != nullptr; }
    std::size_t rows() const;
    std::size_t cols() const;
    const Matrix& value() const;
    /// Mutable access to a leaf's value (optimizer updates, finite differences).
    Matrix& mutable_value();
    double item() const;

    bool requires_grad() const;
    bool has_grad() const;
    /// Zero matrix of the right shape when no gradient has been accumulated.
    Matrix grad() const;
    void zero_grad();

    void backward() const;

    std::string shape_string() const { return value().shape_string(); }

    // Used by op implementations.
    struct Node;
    using BackwardFn = std::function<void(Node& self)>;
    static Tensor make_result(Matrix value, const char* op, std::vector<Tensor> inputs,
                              BackwardFn backward);
    const std::shared_ptr<Node>& node() const { return node_; }

private:
    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
    std::shared_ptr<Node> node_;
};

struct Tensor::Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    std::vector<std::shared_ptr<Node>> inputs;
    BackwardFn backward;

    /// Accumulates into this node's gradient if it requires one.
    void accumulate(const Matrix& g);
    Node& input(std::size_t i) { return *inputs[i]; }
};

// Matrix product.
Tensor matmul(const Tensor& a, const Tensor& b);

// Same-shape elementwise arithmetic.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor exp(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor reciprocal(const Tensor& a);

/// n x m -> n x 1
Tensor row_sum(const Tensor& a);
Tensor transpose(const Tensor& a);
Tensor concat_cols(std::span<const Tensor> parts);
/// Rows [begin, end).
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
/// Same values, new row-major shape.
Tensor reshape(const Tensor& a, std::size_t rows, std::size_t cols);

/// out(i, j) = col(i) + row(j) for col n x 1 and row 1 x m.
Tensor broadcast_add(const Tensor& col, const Tensor& row);
/// out(i, j) = a(i, j) * v(i) for v of shape rows x 1.
Tensor scale_rows(const Tensor& a, const Tensor& v);
/// out(i, j) = a(i, j) * v(j) for v of shape cols x 1.
Tensor scale_cols(const Tensor& a, const Tensor& v);

inline constexpr double kPairNormEpsilon = 1e-12;

/// out(w, q) = sqrt(sum_c (h(w, c) - h(q, c))^2 + kPairNormEpsilon).
/// The epsilon keeps the diagonal differentiable.
Tensor l2_rowpair_norms(const Tensor& h);

/// Row r of the result is row indices[r] of `a`; rows past indices.size()
/// are zero. The result has `out_rows` rows.
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> indices, std::size_t out_rows);

/// Non-overlapping max over `window` consecutive rows, per column. Trailing
/// rows that do not fill a window are dropped.
Tensor maxpool_rows(const Tensor& a, std::size_t window);

/// Sliding windows of `kernel` consecutive rows, each flattened row-major:
/// out(i, j * cols + c) = a(i + j, c). Turns a 1-D convolution into a matmul.
Tensor unfold_rows(const Tensor& a, std::size_t kernel);

/// -log softmax(logits)[label] for 1 x C logits, as a 1 x 1 tensor.
Tensor softmax_cross_entropy(const Tensor& logits, std::size_t label);

/// Numerically stable softmax of a plain row vector.
std::vector<double> softmax(std::span<const double> logits);

}  // namespace semgraph
