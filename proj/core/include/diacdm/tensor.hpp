#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace diacdm {

namespace detail {

// One vertex of the dynamic autodiff graph. Non-leaf nodes keep their
// parents and a closure that pushes their gradient into the parents.
struct TensorNode {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> value;
    std::vector<double> grad;  // empty until a gradient arrives
    bool requires_grad = false;
    const char* op = "leaf";
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward;
};

}  // namespace detail

/// Dense row-major double matrix with reverse-mode differentiation.
///
/// A Tensor is a cheap handle; copies share the underlying node. Every op
/// in `ops` whose operand requires a gradient records itself on the graph,
/// and `backward()` on a 1x1 result accumulates d(result)/d(leaf) into the
/// `grad()` buffer of every leaf that requires a gradient. The graph below
/// the loss is released afterwards, so each forward pass can be
/// differentiated once.
class Tensor {
   public:
    Tensor();

    static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
    static Tensor from_values(std::size_t rows, std::size_t cols, std::vector<double> values,
                              bool requires_grad = false);
    static Tensor row(std::span<const double> values, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    std::size_t rows() const noexcept { return node_->rows; }
    std::size_t cols() const noexcept { return node_->cols; }
    std::size_t size() const noexcept { return node_->value.size(); }
    bool empty() const noexcept { return node_->value.empty(); }
    std::string shape_string() const;

    std::span<const double> values() const noexcept { return node_->value; }
    /// Direct write access; intended for leaves (parameters, inputs).
    std::span<double> mutable_values() noexcept { return node_->value; }
    double at(std::size_t r, std::size_t c) const { return node_->value[r * node_->cols + c]; }
    double item() const;

    bool requires_grad() const noexcept { return node_->requires_grad; }
    bool is_leaf() const noexcept { return !node_->backward; }
    /// Empty span when no gradient has been accumulated yet.
    std::span<const double> grad() const noexcept { return node_->grad; }
    void zero_grad();

    void backward() const;

    /// Fresh leaf holding a copy of the values, detached from any graph.
    Tensor detach(bool requires_grad = false) const;

    bool same_node(const Tensor& other) const noexcept { return node_ == other.node_; }

    const char* op_name() const noexcept { return node_->op; }

   private:
    explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}

    std::shared_ptr<detail::TensorNode> node_;

    friend struct TensorAccess;
};

/// While alive, ops on this thread record nothing and return constants.
class NoGradGuard {
   public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

   private:
    bool previous_;
};

namespace ops {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
/// Element-wise (Hadamard) product.
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
/// 1x1 tensor `s` times every entry of `m`.
Tensor scale_by(const Tensor& s, const Tensor& m);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
/// Row-wise softmax.
Tensor softmax(const Tensor& a);
/// Column means: n x c -> 1 x c.
Tensor mean_rows(const Tensor& a);
Tensor slice_row(const Tensor& a, std::size_t row);
Tensor select_cols(const Tensor& a, std::span<const std::size_t> cols);
/// Horizontal concatenation; all parts must share the row count.
Tensor concat(std::span<const Tensor> parts);
/// Vertical concatenation; all parts must share the column count.
Tensor concat_rows(std::span<const Tensor> parts);
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
/// Mean binary cross-entropy of probabilities `probs` (n x 1 or 1 x n)
/// against 0/1 labels; probabilities are clamped to [eps, 1 - eps] first.
Tensor binary_cross_entropy(const Tensor& probs, std::span<const int> labels, double eps);

}  // namespace ops

}  // namespace diacdm
