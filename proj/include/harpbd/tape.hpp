#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "harpbd/common.hpp"
#include "harpbd/tensor.hpp"

namespace harpbd {

// Reverse-mode automatic differentiation over an explicit operation record.
// Graphs are built once, then reused: leaf values may be rebound and
// forward()/backward() replayed. backward() always starts from freshly
// zeroed intermediate gradients, so repeated runs are bit-identical.

enum class Op : uint8_t {
    Leaf,
    Add,
    Sub,
    Mul,
    MatMul,
    Scale,
    AddConst,
    RSubConst,
    PowConst,
    Clamp,
    Tanh,
    Sigmoid,
    Exp,
    Log,
    Softmax,
    ConcatCols,
    SliceCols,
    Sum,
    Reshape,
};

inline const char* op_name(Op op) {
    switch (op) {
        case Op::Leaf: return "leaf";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::MatMul: return "matmul";
        case Op::Scale: return "scale";
        case Op::AddConst: return "add_const";
        case Op::RSubConst: return "rsub_const";
        case Op::PowConst: return "pow_const";
        case Op::Clamp: return "clamp";
        case Op::Tanh: return "tanh";
        case Op::Sigmoid: return "sigmoid";
        case Op::Exp: return "exp";
        case Op::Log: return "log";
        case Op::Softmax: return "softmax";
        case Op::ConcatCols: return "concat_cols";
        case Op::SliceCols: return "slice_cols";
        case Op::Sum: return "sum";
        case Op::Reshape: return "reshape";
    }
    return "?";
}

namespace detail {

// da(i,p) += sum_j g(i,j) * b(p,j)   (i.e. da += g * b^T)
inline void matmul_nt_acc(const Tensor& g, const Tensor& b, Tensor& da) {
    const int64_t m = g.rows(), n = g.cols(), k = b.rows();
    const double* pg = g.data();
    const double* pb = b.data();
    double* pd = da.data();
    for (int64_t i = 0; i < m; ++i) {
        const double* grow = pg + i * n;
        double* drow = pd + i * k;
        for (int64_t p = 0; p < k; ++p) {
            const double* brow = pb + p * n;
            double acc = 0.0;
            for (int64_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
            drow[p] += acc;
        }
    }
}

// db(p,j) += sum_i a(i,p) * g(i,j)   (i.e. db += a^T * g)
inline void matmul_tn_acc(const Tensor& a, const Tensor& g, Tensor& db) {
    const int64_t m = a.rows(), k = a.cols(), n = g.cols();
    const double* pa = a.data();
    const double* pg = g.data();
    double* pd = db.data();
    for (int64_t i = 0; i < m; ++i) {
        const double* arow = pa + i * k;
        const double* grow = pg + i * n;
        for (int64_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            double* drow = pd + p * n;
            for (int64_t j = 0; j < n; ++j) drow[j] += av * grow[j];
        }
    }
}

}  // namespace detail

class Tape {
  public:
    struct Node {
        Op op = Op::Leaf;
        int a = -1, b = -1;
        double c0 = 0.0, c1 = 0.0;  // scale factor / added constant / exponent / clamp bounds
        int64_t i0 = 0, i1 = 0;     // column range for slice
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        bool is_param = false;
        std::string name;
    };

    Tape() = default;

    void set_check_finite(bool on) { check_finite_ = on; }
    bool check_finite() const { return check_finite_; }

    int size() const { return static_cast<int>(nodes_.size()); }

    int leaf(Tensor v, std::string name = "", bool requires_grad = false) {
        Node n;
        n.op = Op::Leaf;
        n.value = std::move(v);
        n.requires_grad = requires_grad;
        n.name = std::move(name);
        if (requires_grad) n.grad = Tensor(n.value.shape());
        nodes_.push_back(std::move(n));
        int id = size() - 1;
        verify_finite(id);
        return id;
    }

    int param(Tensor v, std::string name) {
        int id = leaf(std::move(v), std::move(name), true);
        nodes_[static_cast<size_t>(id)].is_param = true;
        param_ids_.push_back(id);
        return id;
    }

    const std::vector<int>& param_ids() const { return param_ids_; }

    int add(int a, int b) { return binary(Op::Add, a, b, same_shape_out(a, b, "add")); }
    int sub(int a, int b) { return binary(Op::Sub, a, b, same_shape_out(a, b, "sub")); }
    int mul(int a, int b) { return binary(Op::Mul, a, b, same_shape_out(a, b, "mul")); }

    int matmul(int a, int b) {
        const Tensor& ta = val(a);
        const Tensor& tb = val(b);
        require(ta.cols() == tb.rows(),
                "tape matmul: inner dimensions differ " + ta.shape_str() + " vs " + tb.shape_str());
        return binary(Op::MatMul, a, b, {ta.rows(), tb.cols()});
    }

    int concat_cols(int a, int b) {
        const Tensor& ta = val(a);
        const Tensor& tb = val(b);
        require(ta.rows() == tb.rows(), "concat_cols: row counts differ");
        return binary(Op::ConcatCols, a, b, {ta.rows(), ta.cols() + tb.cols()});
    }

    int scale(int a, double c) { return unary_c(Op::Scale, a, c, 0.0, val(a).shape()); }
    int add_const(int a, double c) { return unary_c(Op::AddConst, a, c, 0.0, val(a).shape()); }
    int rsub_const(int a, double c) { return unary_c(Op::RSubConst, a, c, 0.0, val(a).shape()); }
    int pow_const(int a, double e) { return unary_c(Op::PowConst, a, e, 0.0, val(a).shape()); }

    int clamp(int a, double lo, double hi) {
        require(lo <= hi, "clamp: lo > hi");
        return unary_c(Op::Clamp, a, lo, hi, val(a).shape());
    }

    int tanh_op(int a) { return unary_c(Op::Tanh, a, 0, 0, val(a).shape()); }
    int sigmoid(int a) { return unary_c(Op::Sigmoid, a, 0, 0, val(a).shape()); }
    int exp_op(int a) { return unary_c(Op::Exp, a, 0, 0, val(a).shape()); }
    int log_op(int a) { return unary_c(Op::Log, a, 0, 0, val(a).shape()); }

    int softmax(int a) {
        require(val(a).shape().size() == 2, "softmax: rank-2 tensor required");
        return unary_c(Op::Softmax, a, 0, 0, val(a).shape());
    }

    int slice_cols(int a, int64_t c0, int64_t c1) {
        const Tensor& ta = val(a);
        require(0 <= c0 && c0 < c1 && c1 <= ta.cols(), "slice_cols: bad column range");
        Node n = make_unary(Op::SliceCols, a, {ta.rows(), c1 - c0});
        n.i0 = c0;
        n.i1 = c1;
        return push(std::move(n));
    }

    int sum(int a) { return unary_c(Op::Sum, a, 0, 0, {1, 1}); }

    int reshape(int a, std::vector<int64_t> shape) {
        Tensor probe(shape);  // validates non-negativity
        require(probe.numel() == val(a).numel(), "reshape: element count mismatch");
        return push(make_unary(Op::Reshape, a, std::move(shape)));
    }

    const Tensor& val(int id) const { return nodes_[static_cast<size_t>(id)].value; }
    const Tensor& grad(int id) const {
        const Node& n = nodes_[static_cast<size_t>(id)];
        require(n.requires_grad, "grad: node does not track gradients");
        return n.grad;
    }
    const Node& node(int id) const { return nodes_[static_cast<size_t>(id)]; }

    /// Rebind a leaf's value in place (shape must match).
    void set_leaf(int id, const Tensor& v) {
        Node& n = nodes_[static_cast<size_t>(id)];
        require(n.op == Op::Leaf, "set_leaf: not a leaf");
        require(n.value.same_shape(v), "set_leaf: shape mismatch on '" + n.name + "'");
        n.value = v;
    }

    /// Mutable access to a leaf's storage for in-place rebinding.
    Tensor& leaf_value(int id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        require(n.op == Op::Leaf, "leaf_value: not a leaf");
        return n.value;
    }

    /// Recompute every interior node in insertion order.
    void forward() {
        for (int i = 0; i < size(); ++i) {
            if (nodes_[static_cast<size_t>(i)].op == Op::Leaf) continue;
            compute(i);
            verify_finite(i);
        }
    }

    void zero_param_grads() {
        for (int id : param_ids_) nodes_[static_cast<size_t>(id)].grad.fill(0.0);
    }

    /// Reverse sweep from a scalar output node. With accumulate_params set,
    /// parameter gradients are added onto their current contents; all other
    /// gradients start from zero either way.
    void backward(int out, bool accumulate_params = false) {
        Node& o = nodes_[static_cast<size_t>(out)];
        require(o.value.numel() == 1, "backward: output must be scalar");
        require(o.requires_grad, "backward: output does not depend on any parameter");
        for (auto& n : nodes_) {
            if (!n.requires_grad) continue;
            if (accumulate_params && n.is_param) continue;
            n.grad.fill(0.0);
        }
        o.grad[0] = 1.0;
        for (int i = out; i >= 0; --i) propagate(i);
    }

    /// Max over entries of a leaf of the relative disagreement between the
    /// recorded gradient and a central finite difference with step h.
    double fd_check(int out, int leaf_id, double h = 1e-5) {
        Node& lf = nodes_[static_cast<size_t>(leaf_id)];
        require(lf.op == Op::Leaf && lf.requires_grad, "fd_check: gradient-tracking leaf required");
        forward();
        backward(out);
        Tensor analytic = lf.grad;
        double worst = 0.0;
        for (int64_t i = 0; i < lf.value.numel(); ++i) {
            const double orig = lf.value[static_cast<size_t>(i)];
            lf.value[static_cast<size_t>(i)] = orig + h;
            forward();
            const double fp = val(out)[0];
            lf.value[static_cast<size_t>(i)] = orig - h;
            forward();
            const double fm = val(out)[0];
            lf.value[static_cast<size_t>(i)] = orig;
            const double fd = (fp - fm) / (2.0 * h);
            const double rel = std::abs(analytic[static_cast<size_t>(i)] - fd) /
                               std::max(1e-12, std::abs(fd));
            worst = std::max(worst, rel);
        }
        forward();
        return worst;
    }

  private:
    std::vector<int64_t> same_shape_out(int a, int b, const char* what) {
        require(val(a).same_shape(val(b)),
                std::string(what) + ": shape mismatch " + val(a).shape_str() + " vs " +
                    val(b).shape_str());
        return val(a).shape();
    }

    Node make_unary(Op op, int a, std::vector<int64_t> out_shape) {
        Node n;
        n.op = op;
        n.a = a;
        n.value = Tensor(std::move(out_shape));
        n.requires_grad = nodes_[static_cast<size_t>(a)].requires_grad;
        if (n.requires_grad) n.grad = Tensor(n.value.shape());
        return n;
    }

    int unary_c(Op op, int a, double c0, double c1, std::vector<int64_t> out_shape) {
        Node n = make_unary(op, a, std::move(out_shape));
        n.c0 = c0;
        n.c1 = c1;
        return push(std::move(n));
    }

    int binary(Op op, int a, int b, std::vector<int64_t> out_shape) {
        Node n;
        n.op = op;
        n.a = a;
        n.b = b;
        n.value = Tensor(std::move(out_shape));
        n.requires_grad = nodes_[static_cast<size_t>(a)].requires_grad ||
                          nodes_[static_cast<size_t>(b)].requires_grad;
        if (n.requires_grad) n.grad = Tensor(n.value.shape());
        return push(std::move(n));
    }

    int push(Node n) {
        nodes_.push_back(std::move(n));
        int id = size() - 1;
        compute(id);
        verify_finite(id);
        return id;
    }

    void verify_finite(int id) {
        if (!check_finite_) return;
        const Node& n = nodes_[static_cast<size_t>(id)];
        if (!n.value.all_finite())
            throw NumericalError("non-finite value at node " + std::to_string(id) + " (" +
                                 op_name(n.op) + (n.name.empty() ? "" : ", '" + n.name + "'") +
                                 ")");
    }

    void compute(int id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        const size_t count = static_cast<size_t>(n.value.numel());
        double* out = n.value.data();
        const Tensor* ta = n.a >= 0 ? &nodes_[static_cast<size_t>(n.a)].value : nullptr;
        const Tensor* tb = n.b >= 0 ? &nodes_[static_cast<size_t>(n.b)].value : nullptr;
        switch (n.op) {
            case Op::Leaf: break;
            case Op::Add:
                for (size_t i = 0; i < count; ++i) out[i] = (*ta)[i] + (*tb)[i];
                break;
            case Op::Sub:
                for (size_t i = 0; i < count; ++i) out[i] = (*ta)[i] - (*tb)[i];
                break;
            case Op::Mul:
                for (size_t i = 0; i < count; ++i) out[i] = (*ta)[i] * (*tb)[i];
                break;
            case Op::MatMul: matmul_into(*ta, *tb, n.value); break;
            case Op::Scale:
                for (size_t i = 0; i < count; ++i) out[i] = n.c0 * (*ta)[i];
                break;
            case Op::AddConst:
                for (size_t i = 0; i < count; ++i) out[i] = (*ta)[i] + n.c0;
                break;
            case Op::RSubConst:
                for (size_t i = 0; i < count; ++i) out[i] = n.c0 - (*ta)[i];
                break;
            case Op::PowConst:
                for (size_t i = 0; i < count; ++i) out[i] = std::pow((*ta)[i], n.c0);
                break;
            case Op::Clamp:
                for (size_t i = 0; i < count; ++i)
                    out[i] = std::min(std::max((*ta)[i], n.c0), n.c1);
                break;
            case Op::Tanh:
                for (size_t i = 0; i < count; ++i) out[i] = std::tanh((*ta)[i]);
                break;
            case Op::Sigmoid:
                for (size_t i = 0; i < count; ++i) out[i] = 1.0 / (1.0 + std::exp(-(*ta)[i]));
                break;
            case Op::Exp:
                for (size_t i = 0; i < count; ++i) out[i] = std::exp((*ta)[i]);
                break;
            case Op::Log:
                for (size_t i = 0; i < count; ++i) out[i] = std::log((*ta)[i]);
                break;
            case Op::Softmax: {
                const int64_t rows = ta->rows(), cols = ta->cols();
                for (int64_t r = 0; r < rows; ++r) {
                    const double* x = ta->data() + r * cols;
                    double* y = out + r * cols;
                    double m = x[0];
                    for (int64_t j = 1; j < cols; ++j) m = std::max(m, x[j]);
                    double s = 0.0;
                    for (int64_t j = 0; j < cols; ++j) {
                        y[j] = std::exp(x[j] - m);
                        s += y[j];
                    }
                    for (int64_t j = 0; j < cols; ++j) y[j] /= s;
                }
                break;
            }
            case Op::ConcatCols: {
                const int64_t rows = ta->rows(), ca = ta->cols(), cb = tb->cols();
                for (int64_t r = 0; r < rows; ++r) {
                    for (int64_t j = 0; j < ca; ++j) out[r * (ca + cb) + j] = (*ta)(r, j);
                    for (int64_t j = 0; j < cb; ++j) out[r * (ca + cb) + ca + j] = (*tb)(r, j);
                }
                break;
            }
            case Op::SliceCols: {
                const int64_t rows = ta->rows(), w = n.i1 - n.i0;
                for (int64_t r = 0; r < rows; ++r)
                    for (int64_t j = 0; j < w; ++j) out[r * w + j] = (*ta)(r, n.i0 + j);
                break;
            }
            case Op::Sum: {
                double s = 0.0;
                for (int64_t i = 0; i < ta->numel(); ++i) s += (*ta)[static_cast<size_t>(i)];
                out[0] = s;
                break;
            }
            case Op::Reshape:
                for (size_t i = 0; i < count; ++i) out[i] = (*ta)[i];
                break;
        }
    }

    void propagate(int id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        if (!n.requires_grad || n.op == Op::Leaf) return;
        Node& na = nodes_[static_cast<size_t>(n.a)];
        Node* nb = n.b >= 0 ? &nodes_[static_cast<size_t>(n.b)] : nullptr;
        const bool ga = na.requires_grad;
        const bool gb = nb && nb->requires_grad;
        if (!ga && !gb) return;
        const double* g = n.grad.data();
        const size_t count = static_cast<size_t>(n.value.numel());
        switch (n.op) {
            case Op::Leaf: break;
            case Op::Add:
                if (ga)
                    for (size_t i = 0; i < count; ++i) na.grad[i] += g[i];
                if (gb)
                    for (size_t i = 0; i < count; ++i) nb->grad[i] += g[i];
                break;
            case Op::Sub:
                if (ga)
                    for (size_t i = 0; i < count; ++i) na.grad[i] += g[i];
                if (gb)
                    for (size_t i = 0; i < count; ++i) nb->grad[i] -= g[i];
                break;
            case Op::Mul:
                if (ga)
                    for (size_t i = 0; i < count; ++i) na.grad[i] += g[i] * nb->value[i];
                if (gb)
                    for (size_t i = 0; i < count; ++i) nb->grad[i] += g[i] * na.value[i];
                break;
            case Op::MatMul:
                if (ga) detail::matmul_nt_acc(n.grad, nb->value, na.grad);
                if (gb) detail::matmul_tn_acc(na.value, n.grad, nb->grad);
                break;
            case Op::Scale:
                for (size_t i = 0; i < count; ++i) na.grad[i] += n.c0 * g[i];
                break;
            case Op::AddConst:
                for (size_t i = 0; i < count; ++i) na.grad[i] += g[i];
                break;
            case Op::RSubConst:
                for (size_t i = 0; i < count; ++i) na.grad[i] -= g[i];
                break;
            case Op::PowConst: {
                if (n.c0 == 0.0) break;  // constant output, zero slope
                for (size_t i = 0; i < count; ++i) {
                    const double x = na.value[i];
                    double slope;
                    if (x == 0.0 && n.c0 < 1.0)
                        slope = 0.0;  // subgradient at the singular corner
                    else
                        slope = n.c0 * std::pow(x, n.c0 - 1.0);
                    na.grad[i] += g[i] * slope;
                }
                break;
            }
            case Op::Clamp:
                for (size_t i = 0; i < count; ++i) {
                    const double x = na.value[i];
                    if (x >= n.c0 && x <= n.c1) na.grad[i] += g[i];
                }
                break;
            case Op::Tanh:
                for (size_t i = 0; i < count; ++i) {
                    const double y = n.value[i];
                    na.grad[i] += g[i] * (1.0 - y * y);
                }
                break;
            case Op::Sigmoid:
                for (size_t i = 0; i < count; ++i) {
                    const double y = n.value[i];
                    na.grad[i] += g[i] * y * (1.0 - y);
                }
                break;
            case Op::Exp:
                for (size_t i = 0; i < count; ++i) na.grad[i] += g[i] * n.value[i];
                break;
            case Op::Log:
                for (size_t i = 0; i < count; ++i) na.grad[i] += g[i] / na.value[i];
                break;
            case Op::Softmax: {
                const int64_t rows = n.value.rows(), cols = n.value.cols();
                for (int64_t r = 0; r < rows; ++r) {
                    const double* y = n.value.data() + r * cols;
                    const double* gr = g + r * cols;
                    double dot = 0.0;
                    for (int64_t j = 0; j < cols; ++j) dot += gr[j] * y[j];
                    for (int64_t j = 0; j < cols; ++j)
                        na.grad[static_cast<size_t>(r * cols + j)] += y[j] * (gr[j] - dot);
                }
                break;
            }
            case Op::ConcatCols: {
                const int64_t rows = n.value.rows();
                const int64_t ca = na.value.cols();
                const int64_t cb = nb->value.cols();
                for (int64_t r = 0; r < rows; ++r) {
                    if (ga)
                        for (int64_t j = 0; j < ca; ++j)
                            na.grad[static_cast<size_t>(r * ca + j)] += g[r * (ca + cb) + j];
                    if (gb)
                        for (int64_t j = 0; j < cb; ++j)
                            nb->grad[static_cast<size_t>(r * cb + j)] += g[r * (ca + cb) + ca + j];
                }
                break;
            }
            case Op::SliceCols: {
                const int64_t rows = n.value.rows(), w = n.i1 - n.i0;
                const int64_t cs = na.value.cols();
                for (int64_t r = 0; r < rows; ++r)
                    for (int64_t j = 0; j < w; ++j)
                        na.grad[static_cast<size_t>(r * cs + n.i0 + j)] += g[r * w + j];
                break;
            }
            case Op::Sum: {
                const double gs = g[0];
                for (int64_t i = 0; i < na.value.numel(); ++i)
                    na.grad[static_cast<size_t>(i)] += gs;
                break;
            }
            case Op::Reshape:
                for (size_t i = 0; i < count; ++i) na.grad[i] += g[i];
                break;
        }
    }

    std::vector<Node> nodes_;
    std::vector<int> param_ids_;
    bool check_finite_ = true;
};

}  // namespace harpbd
