#include "diacdm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "diacdm/error.hpp"

namespace diacdm {

using detail::TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

struct TensorAccess {
    static const NodePtr& node(const Tensor& t) { return t.node_; }
    static Tensor wrap(NodePtr node) { return Tensor(std::move(node)); }
};

namespace {

thread_local bool g_grad_disabled = false;

NodePtr make_leaf(std::size_t rows, std::size_t cols, std::vector<double> values,
                  bool requires_grad) {
    auto node = std::make_shared<TensorNode>();
    node->rows = rows;
    node->cols = cols;
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    return node;
}

std::string shape_of(const NodePtr& n) {
    return "(" + std::to_string(n->rows) + "x" + std::to_string(n->cols) + ")";
}

[[noreturn]] void shape_error(const char* op, const NodePtr& a, const NodePtr& b) {
    throw Error(Errc::ShapeMismatch,
                std::string(op) + ": incompatible shapes " + shape_of(a) + " and " + shape_of(b));
}

std::vector<double>& grad_buffer(TensorNode& n) {
    if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
    return n.grad;
}

// Builds an op result; records the closure only when some parent needs a
// gradient so constant subexpressions never allocate graph state.
Tensor make_result(const char* op, std::size_t rows, std::size_t cols,
                   std::vector<double> values, std::vector<NodePtr> parents,
                   std::function<void(TensorNode&)> backward) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw Error(Errc::NonFinite, std::string("op '") + op + "' produced a non-finite value");
        }
    }
    auto node = make_leaf(rows, cols, std::move(values), false);
    node->op = op;
    const bool needs = !g_grad_disabled && std::any_of(parents.begin(), parents.end(),
                                   [](const NodePtr& p) { return p->requires_grad; });
    if (needs) {
        node->requires_grad = true;
        node->parents = std::move(parents);
        node->backward = std::move(backward);
    }
    return TensorAccess::wrap(std::move(node));
}

}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_grad_disabled) { g_grad_disabled = true; }
NoGradGuard::~NoGradGuard() { g_grad_disabled = previous_; }

Tensor::Tensor() : node_(make_leaf(0, 0, {}, false)) {}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
    return Tensor(make_leaf(rows, cols, std::vector<double>(rows * cols, 0.0), requires_grad));
}

Tensor Tensor::from_values(std::size_t rows, std::size_t cols, std::vector<double> values,
                           bool requires_grad) {
    if (values.size() != rows * cols) {
        throw Error(Errc::ShapeMismatch, "from_values: " + std::to_string(values.size()) +
                                             " values for shape (" + std::to_string(rows) + "x" +
                                             std::to_string(cols) + ")");
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw Error(Errc::NonFinite, "from_values: non-finite input");
    }
    return Tensor(make_leaf(rows, cols, std::move(values), requires_grad));
}

Tensor Tensor::row(std::span<const double> values, bool requires_grad) {
    return from_values(1, values.size(), std::vector<double>(values.begin(), values.end()),
                       requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_values(1, 1, {value}, requires_grad);
}

std::string Tensor::shape_string() const { return shape_of(node_); }

double Tensor::item() const {
    if (size() != 1) throw Error(Errc::ShapeMismatch, "item() on tensor of shape " + shape_string());
    return node_->value[0];
}

void Tensor::zero_grad() { node_->grad.clear(); }

Tensor Tensor::detach(bool requires_grad) const {
    return Tensor(make_leaf(rows(), cols(), node_->value, requires_grad));
}

void Tensor::backward() const {
    if (size() != 1) {
        throw Error(Errc::NotScalarLoss, "backward() needs a 1x1 loss, got " + shape_string());
    }
    if (!node_->requires_grad) return;

    // Iterative post-order DFS gives a topological order (parents first).
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> seen;
    std::vector<std::pair<TensorNode*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            TensorNode* p = n->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    grad_buffer(*node_)[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorNode* n = *it;
        if (n->backward && !n->grad.empty()) n->backward(*n);
    }
    // Consume the tape: interior nodes drop their closures and buffers.
    for (TensorNode* n : order) {
        if (n->backward) {
            n->backward = nullptr;
            n->parents.clear();
            n->grad.clear();
            n->grad.shrink_to_fit();
        }
    }
}

namespace ops {

Tensor matmul(const Tensor& a, const Tensor& b) {
    const auto& na = TensorAccess::node(a);
    const auto& nb = TensorAccess::node(b);
    if (na->cols != nb->rows) shape_error("matmul", na, nb);
    const std::size_t n = na->rows, k = na->cols, m = nb->cols;
    std::vector<double> out(n * m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double av = na->value[i * k + p];
            if (av == 0.0) continue;
            const double* brow = &nb->value[p * m];
            double* orow = &out[i * m];
            for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    }
    return make_result("matmul", n, m, std::move(out), {na, nb}, [n, k, m](TensorNode& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        const auto& g = self.grad;
        if (pa.requires_grad) {
            auto& ga = grad_buffer(pa);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < m; ++j) s += g[i * m + j] * pb.value[p * m + j];
                    ga[i * k + p] += s;
                }
        }
        if (pb.requires_grad) {
            auto& gb = grad_buffer(pb);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double av = pa.value[i * k + p];
                    if (av == 0.0) continue;
                    for (std::size_t j = 0; j < m; ++j) gb[p * m + j] += av * g[i * m + j];
                }
        }
    });
}

Tensor transpose(const Tensor& a) {
    const auto& na = TensorAccess::node(a);
    const std::size_t r = na->rows, c = na->cols;
    std::vector<double> out(r * c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = na->value[i * c + j];
    return make_result("transpose", c, r, std::move(out), {na}, [r, c](TensorNode& self) {
        auto& ga = grad_buffer(*self.parents[0]);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += self.grad[j * r + i];
    });
}

namespace {

template <typename Fwd>
Tensor binary_same_shape(const char* op, const Tensor& a, const Tensor& b, Fwd fwd,
                         std::function<void(TensorNode&)> backward) {
    const auto& na = TensorAccess::node(a);
    const auto& nb = TensorAccess::node(b);
    if (na->rows != nb->rows || na->cols != nb->cols) shape_error(op, na, nb);
    std::vector<double> out(na->value.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(na->value[i], nb->value[i]);
    return make_result(op, na->rows, na->cols, std::move(out), {na, nb}, std::move(backward));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_same_shape(
        "add", a, b, [](double x, double y) { return x + y; },
        [](TensorNode& self) {
            for (int side = 0; side < 2; ++side) {
                auto& p = *self.parents[side];
                if (!p.requires_grad) continue;
                auto& g = grad_buffer(p);
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
            }
        });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_same_shape(
        "sub", a, b, [](double x, double y) { return x - y; },
        [](TensorNode& self) {
            for (int side = 0; side < 2; ++side) {
                auto& p = *self.parents[side];
                if (!p.requires_grad) continue;
                const double sign = side == 0 ? 1.0 : -1.0;
                auto& g = grad_buffer(p);
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign * self.grad[i];
            }
        });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_same_shape(
        "mul", a, b, [](double x, double y) { return x * y; },
        [](TensorNode& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            if (pa.requires_grad) {
                auto& g = grad_buffer(pa);
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value[i];
            }
            if (pb.requires_grad) {
                auto& g = grad_buffer(pb);
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.value[i];
            }
        });
}

Tensor scale(const Tensor& a, double factor) {
    const auto& na = TensorAccess::node(a);
    std::vector<double> out(na->value);
    for (double& v : out) v *= factor;
    return make_result("scale", na->rows, na->cols, std::move(out), {na},
                       [factor](TensorNode& self) {
                           auto& g = grad_buffer(*self.parents[0]);
                           for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
                       });
}

Tensor scale_by(const Tensor& s, const Tensor& m) {
    const auto& ns = TensorAccess::node(s);
    const auto& nm = TensorAccess::node(m);
    if (ns->value.size() != 1) shape_error("scale_by", ns, nm);
    const double factor = ns->value[0];
    std::vector<double> out(nm->value);
    for (double& v : out) v *= factor;
    return make_result("scale_by", nm->rows, nm->cols, std::move(out), {ns, nm},
                       [](TensorNode& self) {
                           auto& ps = *self.parents[0];
                           auto& pm = *self.parents[1];
                           if (ps.requires_grad) {
                               double acc = 0.0;
                               for (std::size_t i = 0; i < pm.value.size(); ++i)
                                   acc += self.grad[i] * pm.value[i];
                               grad_buffer(ps)[0] += acc;
                           }
                           if (pm.requires_grad) {
                               auto& g = grad_buffer(pm);
                               for (std::size_t i = 0; i < g.size(); ++i)
                                   g[i] += self.grad[i] * ps.value[0];
                           }
                       });
}

Tensor relu(const Tensor& a) {
    const auto& na = TensorAccess::node(a);
    std::vector<double> out(na->value.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = na->value[i] > 0.0 ? na->value[i] : 0.0;
    return make_result("relu", na->rows, na->cols, std::move(out), {na}, [](TensorNode& self) {
        auto& p = *self.parents[0];
        auto& g = grad_buffer(p);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (p.value[i] > 0.0) g[i] += self.grad[i];
    });
}

Tensor sigmoid(const Tensor& a) {
    const auto& na = TensorAccess::node(a);
    std::vector<double> out(na->value.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = na->value[i];
        // Split by sign so exp never overflows.
        if (x >= 0.0) {
            out[i] = 1.0 / (1.0 + std::exp(-x));
        } else {
            const double e = std::exp(x);
            out[i] = e / (1.0 + e);
        }
    }
    return make_result("sigmoid", na->rows, na->cols, std::move(out), {na}, [](TensorNode& self) {
        auto& g = grad_buffer(*self.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double y = self.value[i];
            g[i] += self.grad[i] * y * (1.0 - y);
        }
    });
}

Tensor softmax(const Tensor& a) {
    const auto& na = TensorAccess::node(a);
    const std::size_t r = na->rows, c = na->cols;
    std::vector<double> out(r * c);
    for (std::size_t i = 0; i < r; ++i) {
        const double* in = &na->value[i * c];
        double mx = -INFINITY;
        for (std::size_t j = 0; j < c; ++j) mx = std::max(mx, in[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            out[i * c + j] = std::exp(in[j] - mx);
            z += out[i * c + j];
        }
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] /= z;
    }
    return make_result("softmax", r, c, std::move(out), {na}, [r, c](TensorNode& self) {
        auto& g = grad_buffer(*self.parents[0]);
        for (std::size_t i = 0; i < r; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j) dot += self.grad[i * c + j] * self.value[i * c + j];
            for (std::size_t j = 0; j < c; ++j)
                g[i * c + j] += self.value[i * c + j] * (self.grad[i * c + j] - dot);
        }
    });
}

Tensor mean_rows(const Tensor& a) {
    const auto& na = TensorAccess::node(a);
    const std::size_t r = na->rows, c = na->cols;
    if (r == 0) throw Error(Errc::ShapeMismatch, "mean_rows: tensor has no rows " + shape_of(na));
    std::vector<double> out(c, 0.0);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j] += na->value[i * c + j];
    for (double& v : out) v /= static_cast<double>(r);
    return make_result("mean_rows", 1, c, std::move(out), {na}, [r, c](TensorNode& self) {
        auto& g = grad_buffer(*self.parents[0]);
        const double inv = 1.0 / static_cast<double>(r);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j] * inv;
    });
}

Tensor slice_row(const Tensor& a, std::size_t row) {
    const auto& na = TensorAccess::node(a);
    if (row >= na->rows) {
        throw Error(Errc::ShapeMismatch,
                    "slice_row: row " + std::to_string(row) + " out of range for " + shape_of(na));
    }
    const std::size_t c = na->cols;
    std::vector<double> out(na->value.begin() + static_cast<std::ptrdiff_t>(row * c),
                            na->value.begin() + static_cast<std::ptrdiff_t>((row + 1) * c));
    return make_result("slice_row", 1, c, std::move(out), {na}, [row, c](TensorNode& self) {
        auto& g = grad_buffer(*self.parents[0]);
        for (std::size_t j = 0; j < c; ++j) g[row * c + j] += self.grad[j];
    });
}

Tensor select_cols(const Tensor& a, std::span<const std::size_t> cols) {
    const auto& na = TensorAccess::node(a);
    const std::size_t r = na->rows, c = na->cols;
    std::vector<std::size_t> idx(cols.begin(), cols.end());
    for (std::size_t j : idx) {
        if (j >= c) {
            throw Error(Errc::ShapeMismatch, "select_cols: column " + std::to_string(j) +
                                                 " out of range for " + shape_of(na));
        }
    }
    const std::size_t m = idx.size();
    std::vector<double> out(r * m);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < m; ++j) out[i * m + j] = na->value[i * c + idx[j]];
    return make_result("select_cols", r, m, std::move(out), {na},
                       [r, c, m, idx = std::move(idx)](TensorNode& self) {
                           auto& g = grad_buffer(*self.parents[0]);
                           for (std::size_t i = 0; i < r; ++i)
                               for (std::size_t j = 0; j < m; ++j)
                                   g[i * c + idx[j]] += self.grad[i * m + j];
                       });
}

Tensor concat(std::span<const Tensor> parts) {
    if (parts.empty()) return Tensor();
    const std::size_t r = parts[0].rows();
    std::vector<NodePtr> parents;
    std::vector<std::size_t> widths;
    std::size_t total = 0;
    for (const Tensor& t : parts) {
        const auto& n = TensorAccess::node(t);
        if (n->rows != r) shape_error("concat", TensorAccess::node(parts[0]), n);
        parents.push_back(n);
        widths.push_back(n->cols);
        total += n->cols;
    }
    std::vector<double> out(r * total);
    for (std::size_t i = 0; i < r; ++i) {
        std::size_t off = 0;
        for (std::size_t p = 0; p < parents.size(); ++p) {
            for (std::size_t j = 0; j < widths[p]; ++j)
                out[i * total + off + j] = parents[p]->value[i * widths[p] + j];
            off += widths[p];
        }
    }
    return make_result("concat", r, total, std::move(out), std::move(parents),
                       [r, total, widths = std::move(widths)](TensorNode& self) {
                           std::size_t off = 0;
                           for (std::size_t p = 0; p < widths.size(); ++p) {
                               auto& parent = *self.parents[p];
                               if (parent.requires_grad) {
                                   auto& g = grad_buffer(parent);
                                   for (std::size_t i = 0; i < r; ++i)
                                       for (std::size_t j = 0; j < widths[p]; ++j)
                                           g[i * widths[p] + j] += self.grad[i * total + off + j];
                               }
                               off += widths[p];
                           }
                       });
}

Tensor concat_rows(std::span<const Tensor> parts) {
    if (parts.empty()) return Tensor();
    const std::size_t c = parts[0].cols();
    std::vector<NodePtr> parents;
    std::vector<double> out;
    std::size_t total = 0;
    for (const Tensor& t : parts) {
        const auto& n = TensorAccess::node(t);
        if (n->cols != c) shape_error("concat_rows", TensorAccess::node(parts[0]), n);
        parents.push_back(n);
        out.insert(out.end(), n->value.begin(), n->value.end());
        total += n->rows;
    }
    return make_result("concat_rows", total, c, std::move(out), std::move(parents),
                       [](TensorNode& self) {
                           std::size_t off = 0;
                           for (auto& parent : self.parents) {
                               const std::size_t len = parent->value.size();
                               if (parent->requires_grad) {
                                   auto& g = grad_buffer(*parent);
                                   for (std::size_t i = 0; i < len; ++i) g[i] += self.grad[off + i];
                               }
                               off += len;
                           }
                       });
}

Tensor sum_all(const Tensor& a) {
    const auto& na = TensorAccess::node(a);
    double s = 0.0;
    for (double v : na->value) s += v;
    return make_result("sum_all", 1, 1, {s}, {na}, [](TensorNode& self) {
        auto& g = grad_buffer(*self.parents[0]);
        for (double& v : g) v += self.grad[0];
    });
}

Tensor mean_all(const Tensor& a) {
    const auto& na = TensorAccess::node(a);
    if (na->value.empty()) throw Error(Errc::ShapeMismatch, "mean_all: empty tensor");
    return scale(sum_all(a), 1.0 / static_cast<double>(na->value.size()));
}

Tensor binary_cross_entropy(const Tensor& probs, std::span<const int> labels, double eps) {
    const auto& np = TensorAccess::node(probs);
    const std::size_t n = np->value.size();
    if (np->rows != 1 && np->cols != 1) {
        throw Error(Errc::ShapeMismatch, "binary_cross_entropy: expected a vector, got " + shape_of(np));
    }
    if (labels.size() != n || n == 0) {
        throw Error(Errc::ShapeMismatch, "binary_cross_entropy: " + std::to_string(n) +
                                             " predictions vs " + std::to_string(labels.size()) +
                                             " labels");
    }
    std::vector<int> y(labels.begin(), labels.end());
    for (int v : y) {
        if (v != 0 && v != 1) throw Error(Errc::InvalidLabel, "label " + std::to_string(v));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = std::clamp(np->value[i], eps, 1.0 - eps);
        total -= y[i] ? std::log(p) : std::log(1.0 - p);
    }
    return make_result("binary_cross_entropy", 1, 1, {total / static_cast<double>(n)}, {np},
                       [y = std::move(y), eps](TensorNode& self) {
                           auto& parent = *self.parents[0];
                           auto& g = grad_buffer(parent);
                           const double inv = 1.0 / static_cast<double>(y.size());
                           for (std::size_t i = 0; i < y.size(); ++i) {
                               const double raw = parent.value[i];
                               if (raw < eps || raw > 1.0 - eps) continue;  // clamp is flat
                               const double d = y[i] ? -1.0 / raw : 1.0 / (1.0 - raw);
                               g[i] += self.grad[0] * d * inv;
                           }
                       });
}

}  // namespace ops

}  // namespace diacdm
