#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ucgan/tensor.hpp"

namespace ucgan::ad {

enum class Op {
    Leaf,
    Add,
    Mul,
    Affine,  // alpha*x + beta, elementwise
    Matmul,
    Transpose,
    BiasAdd,
    ColSum,
    BroadcastRow,
    RowSum,
    BroadcastCol,
    ChanBias,
    ChanSum,
    BroadcastChan,
    Relu,
    LeakyRelu,
    Tanh,
    Sigmoid,
    Softplus,
    Reshape,
    Concat,
    Slice,
    Embed,  // adjoint of Slice: place a block into zeros
    SumAll,
    BroadcastScalar,
    Conv2d,
    Conv2dInputGrad,
    Conv2dWeightGrad,
    Upsample2x,
    Downsample2xSum,
    SoftmaxRows,
    CrossEntropyMean,
};

const char* op_name(Op op);

struct ConvGeom {
    int64_t n = 0, ic = 0, oc = 0, k = 0, stride = 1, pad = 0;
    int64_t ih = 0, iw = 0, oh = 0, ow = 0;
};

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

struct Node {
    Op op = Op::Leaf;
    std::vector<int> inputs;
    Tensor out;
    bool needs_grad = false;
    // op attributes (only the ones the op uses are meaningful)
    float alpha = 0.0f, beta = 0.0f;
    int axis = 0;
    int64_t start = 0;
    std::vector<int64_t> aux_shape;
    ConvGeom geom;
    std::vector<int> labels;
    Tensor saved;  // recorded intermediate (softmax probs)
};

// Records primitive applications in topological (creation) order and plays
// them backwards. Gradients are built as tape nodes themselves, so a gradient
// can be differentiated again (needed for the R1 penalty's parameter update).
// One tape per training step; not shareable across threads.
class Tape {
public:
    Var leaf(Tensor t, bool requires_grad = false);
    Var constant(Tensor t) { return leaf(std::move(t), false); }

    const Tensor& val(Var v) const { return node(v).out; }
    // gradient of the last backward() root w.r.t. a requires_grad leaf
    const std::vector<double>& grad(Var v) const;

    Var add(Var a, Var b);
    Var mul(Var a, Var b);
    Var affine(Var a, float alpha, float beta);
    Var neg(Var a) { return affine(a, -1.0f, 0.0f); }
    Var sub(Var a, Var b) { return add(a, neg(b)); }
    Var matmul(Var a, Var b);
    Var transpose(Var a);
    Var bias_add(Var x, Var b);
    Var col_sum(Var x);
    Var broadcast_row(Var b, int64_t rows);
    Var row_sum(Var x);
    Var broadcast_col(Var x, int64_t cols);
    Var chan_bias(Var x, Var b);
    Var chan_sum(Var x);
    Var broadcast_chan(Var b, int64_t n, int64_t h, int64_t w);
    Var relu(Var x);
    Var leaky_relu(Var x, float slope);
    Var tanh(Var x);
    Var sigmoid(Var x);
    Var softplus(Var x);
    Var reshape(Var x, std::vector<int64_t> target);
    Var concat(const std::vector<Var>& xs, int axis);
    Var slice(Var x, int axis, int64_t start, int64_t len);
    Var embed(Var x, std::vector<int64_t> full_shape, int axis, int64_t start);
    Var sum_all(Var x);
    Var mean_all(Var x) { return affine(sum_all(x), 1.0f / static_cast<float>(val(x).numel()), 0.0f); }
    Var broadcast_scalar(Var s, std::vector<int64_t> shape);
    Var conv2d(Var x, Var w, int64_t stride, int64_t pad);
    Var conv2d_input_grad(Var dy, Var w, const ConvGeom& g);
    Var conv2d_weight_grad(Var x, Var dy, const ConvGeom& g);
    Var upsample2x(Var x);
    Var downsample2x_sum(Var x);
    Var softmax_rows(Var logits);
    Var cross_entropy_mean(Var logits, std::vector<int> labels);

    // Reverse sweep from a scalar root; fills .grad on every requires_grad
    // leaf reachable from it (overwriting previous grads).
    void backward(Var root);

    // Same sweep, but returns the gradient of root w.r.t. `wrt` as a Var so
    // it can enter further computation (and be differentiated again).
    Var grad_of(Var root, Var wrt);

    size_t size() const { return nodes_.size(); }

private:
    std::vector<Node> nodes_;

    Node& node(Var v);
    const Node& node(Var v) const;
    Var push(Node n);
    // reverse sweep; returns gradmap (node id -> grad var id, -1 if none)
    std::vector<int> backward_graph(Var root);
    void accumulate(std::vector<int>& gradmap, int target, Var g);
};

// Spec'd relative-error gradient check: max over coordinates of
// |analytic - central difference| / max(1, |analytic|).
// `f` builds a scalar graph from an input leaf. Coordinates with |x_i| < eps
// are skipped when skip_kink_coords is set (ReLU-style kinks at zero).
using ScalarGraphFn = std::function<Var(Tape&, Var)>;
double grad_check(const ScalarGraphFn& f, const Tensor& point, double eps, bool skip_kink_coords = false);

}  // namespace ucgan::ad
