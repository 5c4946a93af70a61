#include "ucgan/tape.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstring>

namespace ucgan::ad {

namespace {

using MatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

[[noreturn]] void shape_error(Op op, const std::string& detail) {
    throw std::invalid_argument(std::string("autodiff: ") + op_name(op) + ": " + detail);
}

void require_rank(Op op, const Tensor& t, int rank, const char* role) {
    if (t.rank() != rank)
        shape_error(op, std::string(role) + " must have rank " + std::to_string(rank) + ", got " + t.shape_str());
}

double softplus_f(double x) {
    // max(x,0) + log1p(exp(-|x|)): overflow-safe for any logit
    return (x > 0.0f ? x : 0.0f) + std::log1p(std::exp(-std::fabs(x)));
}

// patch matrix [ic*k*k x oh*ow] for one sample
void im2col(const double* x, const ConvGeom& g, double* col) {
    const int64_t kk = g.k * g.k;
    for (int64_t ic = 0; ic < g.ic; ++ic) {
        const double* xc = x + ic * g.ih * g.iw;
        for (int64_t kh = 0; kh < g.k; ++kh) {
            for (int64_t kw = 0; kw < g.k; ++kw) {
                double* row = col + (ic * kk + kh * g.k + kw) * g.oh * g.ow;
                for (int64_t oh = 0; oh < g.oh; ++oh) {
                    int64_t ih = oh * g.stride + kh - g.pad;
                    if (ih < 0 || ih >= g.ih) {
                        std::memset(row + oh * g.ow, 0, sizeof(double) * g.ow);
                        continue;
                    }
                    const double* xr = xc + ih * g.iw;
                    for (int64_t ow = 0; ow < g.ow; ++ow) {
                        int64_t iw = ow * g.stride + kw - g.pad;
                        row[oh * g.ow + ow] = (iw >= 0 && iw < g.iw) ? xr[iw] : 0.0f;
                    }
                }
            }
        }
    }
}

// adjoint of im2col: scatter-add patch matrix back into the input layout
void col2im_add(const double* col, const ConvGeom& g, double* x) {
    const int64_t kk = g.k * g.k;
    for (int64_t ic = 0; ic < g.ic; ++ic) {
        double* xc = x + ic * g.ih * g.iw;
        for (int64_t kh = 0; kh < g.k; ++kh) {
            for (int64_t kw = 0; kw < g.k; ++kw) {
                const double* row = col + (ic * kk + kh * g.k + kw) * g.oh * g.ow;
                for (int64_t oh = 0; oh < g.oh; ++oh) {
                    int64_t ih = oh * g.stride + kh - g.pad;
                    if (ih < 0 || ih >= g.ih) continue;
                    double* xr = xc + ih * g.iw;
                    for (int64_t ow = 0; ow < g.ow; ++ow) {
                        int64_t iw = ow * g.stride + kw - g.pad;
                        if (iw >= 0 && iw < g.iw) xr[iw] += row[oh * g.ow + ow];
                    }
                }
            }
        }
    }
}

}  // namespace

const char* op_name(Op op) {
    switch (op) {
        case Op::Leaf: return "leaf";
        case Op::Add: return "add";
        case Op::Mul: return "mul";
        case Op::Affine: return "affine";
        case Op::Matmul: return "matmul";
        case Op::Transpose: return "transpose";
        case Op::BiasAdd: return "bias_add";
        case Op::ColSum: return "col_sum";
        case Op::BroadcastRow: return "broadcast_row";
        case Op::RowSum: return "row_sum";
        case Op::BroadcastCol: return "broadcast_col";
        case Op::ChanBias: return "chan_bias";
        case Op::ChanSum: return "chan_sum";
        case Op::BroadcastChan: return "broadcast_chan";
        case Op::Relu: return "relu";
        case Op::LeakyRelu: return "leaky_relu";
        case Op::Tanh: return "tanh";
        case Op::Sigmoid: return "sigmoid";
        case Op::Softplus: return "softplus";
        case Op::Reshape: return "reshape";
        case Op::Concat: return "concat";
        case Op::Slice: return "slice";
        case Op::Embed: return "embed";
        case Op::SumAll: return "sum_all";
        case Op::BroadcastScalar: return "broadcast_scalar";
        case Op::Conv2d: return "conv2d";
        case Op::Conv2dInputGrad: return "conv2d_input_grad";
        case Op::Conv2dWeightGrad: return "conv2d_weight_grad";
        case Op::Upsample2x: return "upsample2x";
        case Op::Downsample2xSum: return "downsample2x_sum";
        case Op::SoftmaxRows: return "softmax_rows";
        case Op::CrossEntropyMean: return "cross_entropy_mean";
    }
    return "?";
}

Node& Tape::node(Var v) {
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size())) throw std::invalid_argument("autodiff: invalid var");
    return nodes_[static_cast<size_t>(v.id)];
}
const Node& Tape::node(Var v) const {
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size())) throw std::invalid_argument("autodiff: invalid var");
    return nodes_[static_cast<size_t>(v.id)];
}

Var Tape::push(Node n) {
    for (int in : n.inputs) n.needs_grad = n.needs_grad || nodes_[static_cast<size_t>(in)].needs_grad;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Tensor t, bool requires_grad) {
    Node n;
    n.op = Op::Leaf;
    n.out = std::move(t);
    n.out.requires_grad = requires_grad;
    n.needs_grad = requires_grad;
    return push(std::move(n));
}

const std::vector<double>& Tape::grad(Var v) const {
    const Node& n = node(v);
    if (n.op != Op::Leaf || !n.out.grad) throw std::invalid_argument("autodiff: no gradient recorded for this var");
    return *n.out.grad;
}

Var Tape::add(Var a, Var b) {
    const Tensor &ta = val(a), &tb = val(b);
    if (!same_shape(ta, tb)) shape_error(Op::Add, ta.shape_str() + " vs " + tb.shape_str());
    Node n;
    n.op = Op::Add;
    n.inputs = {a.id, b.id};
    n.out = Tensor::zeros(ta.shape);
    for (size_t i = 0; i < ta.values.size(); ++i) n.out.values[i] = ta.values[i] + tb.values[i];
    return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
    const Tensor &ta = val(a), &tb = val(b);
    if (!same_shape(ta, tb)) shape_error(Op::Mul, ta.shape_str() + " vs " + tb.shape_str());
    Node n;
    n.op = Op::Mul;
    n.inputs = {a.id, b.id};
    n.out = Tensor::zeros(ta.shape);
    for (size_t i = 0; i < ta.values.size(); ++i) n.out.values[i] = ta.values[i] * tb.values[i];
    return push(std::move(n));
}

Var Tape::affine(Var a, float alpha, float beta) {
    const Tensor& ta = val(a);
    Node n;
    n.op = Op::Affine;
    n.inputs = {a.id};
    n.alpha = alpha;
    n.beta = beta;
    n.out = Tensor::zeros(ta.shape);
    for (size_t i = 0; i < ta.values.size(); ++i) n.out.values[i] = alpha * ta.values[i] + beta;
    return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
    const Tensor &ta = val(a), &tb = val(b);
    require_rank(Op::Matmul, ta, 2, "lhs");
    require_rank(Op::Matmul, tb, 2, "rhs");
    if (ta.shape[1] != tb.shape[0]) shape_error(Op::Matmul, ta.shape_str() + " x " + tb.shape_str());
    Node n;
    n.op = Op::Matmul;
    n.inputs = {a.id, b.id};
    n.out = Tensor::zeros({ta.shape[0], tb.shape[1]});
    ConstMatMap A(ta.values.data(), ta.shape[0], ta.shape[1]);
    ConstMatMap B(tb.values.data(), tb.shape[0], tb.shape[1]);
    MatMap C(n.out.values.data(), ta.shape[0], tb.shape[1]);
    C.noalias() = A * B;
    return push(std::move(n));
}

Var Tape::transpose(Var a) {
    const Tensor& ta = val(a);
    require_rank(Op::Transpose, ta, 2, "input");
    Node n;
    n.op = Op::Transpose;
    n.inputs = {a.id};
    n.out = Tensor::zeros({ta.shape[1], ta.shape[0]});
    for (int64_t i = 0; i < ta.shape[0]; ++i)
        for (int64_t j = 0; j < ta.shape[1]; ++j) n.out.at2(j, i) = ta.at2(i, j);
    return push(std::move(n));
}

Var Tape::bias_add(Var x, Var b) {
    const Tensor &tx = val(x), &tb = val(b);
    require_rank(Op::BiasAdd, tx, 2, "input");
    require_rank(Op::BiasAdd, tb, 1, "bias");
    if (tx.shape[1] != tb.shape[0]) shape_error(Op::BiasAdd, tx.shape_str() + " + " + tb.shape_str());
    Node n;
    n.op = Op::BiasAdd;
    n.inputs = {x.id, b.id};
    n.out = Tensor::zeros(tx.shape);
    for (int64_t i = 0; i < tx.shape[0]; ++i)
        for (int64_t j = 0; j < tx.shape[1]; ++j) n.out.at2(i, j) = tx.at2(i, j) + tb.values[static_cast<size_t>(j)];
    return push(std::move(n));
}

Var Tape::col_sum(Var x) {
    const Tensor& tx = val(x);
    require_rank(Op::ColSum, tx, 2, "input");
    Node n;
    n.op = Op::ColSum;
    n.inputs = {x.id};
    n.out = Tensor::zeros({tx.shape[1]});
    for (int64_t i = 0; i < tx.shape[0]; ++i)
        for (int64_t j = 0; j < tx.shape[1]; ++j) n.out.values[static_cast<size_t>(j)] += tx.at2(i, j);
    return push(std::move(n));
}

Var Tape::broadcast_row(Var b, int64_t rows) {
    const Tensor& tb = val(b);
    require_rank(Op::BroadcastRow, tb, 1, "input");
    Node n;
    n.op = Op::BroadcastRow;
    n.inputs = {b.id};
    n.out = Tensor::zeros({rows, tb.shape[0]});
    for (int64_t i = 0; i < rows; ++i)
        for (int64_t j = 0; j < tb.shape[0]; ++j) n.out.at2(i, j) = tb.values[static_cast<size_t>(j)];
    return push(std::move(n));
}

Var Tape::row_sum(Var x) {
    const Tensor& tx = val(x);
    require_rank(Op::RowSum, tx, 2, "input");
    Node n;
    n.op = Op::RowSum;
    n.inputs = {x.id};
    n.out = Tensor::zeros({tx.shape[0], 1});
    for (int64_t i = 0; i < tx.shape[0]; ++i) {
        double s = 0.0;
        for (int64_t j = 0; j < tx.shape[1]; ++j) s += tx.at2(i, j);
        n.out.values[static_cast<size_t>(i)] = s;
    }
    return push(std::move(n));
}

Var Tape::broadcast_col(Var x, int64_t cols) {
    const Tensor& tx = val(x);
    require_rank(Op::BroadcastCol, tx, 2, "input");
    if (tx.shape[1] != 1) shape_error(Op::BroadcastCol, "expected [N,1], got " + tx.shape_str());
    Node n;
    n.op = Op::BroadcastCol;
    n.inputs = {x.id};
    n.out = Tensor::zeros({tx.shape[0], cols});
    for (int64_t i = 0; i < tx.shape[0]; ++i)
        for (int64_t j = 0; j < cols; ++j) n.out.at2(i, j) = tx.values[static_cast<size_t>(i)];
    return push(std::move(n));
}

Var Tape::chan_bias(Var x, Var b) {
    const Tensor &tx = val(x), &tb = val(b);
    require_rank(Op::ChanBias, tx, 4, "input");
    require_rank(Op::ChanBias, tb, 1, "bias");
    if (tx.shape[1] != tb.shape[0]) shape_error(Op::ChanBias, tx.shape_str() + " + " + tb.shape_str());
    Node n;
    n.op = Op::ChanBias;
    n.inputs = {x.id, b.id};
    n.out = Tensor::zeros(tx.shape);
    const int64_t hw = tx.shape[2] * tx.shape[3];
    for (int64_t i = 0; i < tx.shape[0]; ++i)
        for (int64_t c = 0; c < tx.shape[1]; ++c) {
            const double bias = tb.values[static_cast<size_t>(c)];
            const int64_t base = (i * tx.shape[1] + c) * hw;
            for (int64_t p = 0; p < hw; ++p) n.out.values[static_cast<size_t>(base + p)] = tx.values[static_cast<size_t>(base + p)] + bias;
        }
    return push(std::move(n));
}

Var Tape::chan_sum(Var x) {
    const Tensor& tx = val(x);
    require_rank(Op::ChanSum, tx, 4, "input");
    Node n;
    n.op = Op::ChanSum;
    n.inputs = {x.id};
    n.out = Tensor::zeros({tx.shape[1]});
    const int64_t hw = tx.shape[2] * tx.shape[3];
    for (int64_t i = 0; i < tx.shape[0]; ++i)
        for (int64_t c = 0; c < tx.shape[1]; ++c) {
            const int64_t base = (i * tx.shape[1] + c) * hw;
            double s = 0.0;
            for (int64_t p = 0; p < hw; ++p) s += tx.values[static_cast<size_t>(base + p)];
            n.out.values[static_cast<size_t>(c)] += s;
        }
    return push(std::move(n));
}

Var Tape::broadcast_chan(Var b, int64_t batch, int64_t h, int64_t w) {
    const Tensor& tb = val(b);
    require_rank(Op::BroadcastChan, tb, 1, "input");
    Node n;
    n.op = Op::BroadcastChan;
    n.inputs = {b.id};
    n.out = Tensor::zeros({batch, tb.shape[0], h, w});
    const int64_t hw = h * w;
    for (int64_t i = 0; i < batch; ++i)
        for (int64_t c = 0; c < tb.shape[0]; ++c) {
            const int64_t base = (i * tb.shape[0] + c) * hw;
            for (int64_t p = 0; p < hw; ++p) n.out.values[static_cast<size_t>(base + p)] = tb.values[static_cast<size_t>(c)];
        }
    return push(std::move(n));
}

Var Tape::relu(Var x) {
    const Tensor& tx = val(x);
    Node n;
    n.op = Op::Relu;
    n.inputs = {x.id};
    n.out = Tensor::zeros(tx.shape);
    for (size_t i = 0; i < tx.values.size(); ++i) n.out.values[i] = tx.values[i] > 0.0f ? tx.values[i] : 0.0f;
    return push(std::move(n));
}

Var Tape::leaky_relu(Var x, float slope) {
    const Tensor& tx = val(x);
    Node n;
    n.op = Op::LeakyRelu;
    n.inputs = {x.id};
    n.alpha = slope;
    n.out = Tensor::zeros(tx.shape);
    for (size_t i = 0; i < tx.values.size(); ++i) n.out.values[i] = tx.values[i] > 0.0f ? tx.values[i] : slope * tx.values[i];
    return push(std::move(n));
}

Var Tape::tanh(Var x) {
    const Tensor& tx = val(x);
    Node n;
    n.op = Op::Tanh;
    n.inputs = {x.id};
    n.out = Tensor::zeros(tx.shape);
    for (size_t i = 0; i < tx.values.size(); ++i) n.out.values[i] = std::tanh(tx.values[i]);
    return push(std::move(n));
}

Var Tape::sigmoid(Var x) {
    const Tensor& tx = val(x);
    Node n;
    n.op = Op::Sigmoid;
    n.inputs = {x.id};
    n.out = Tensor::zeros(tx.shape);
    for (size_t i = 0; i < tx.values.size(); ++i) {
        double v = tx.values[i];
        // evaluate on the negative branch only, no overflow either side
        n.out.values[i] = v >= 0.0f ? 1.0f / (1.0f + std::exp(-v)) : std::exp(v) / (1.0f + std::exp(v));
    }
    return push(std::move(n));
}

Var Tape::softplus(Var x) {
    const Tensor& tx = val(x);
    Node n;
    n.op = Op::Softplus;
    n.inputs = {x.id};
    n.out = Tensor::zeros(tx.shape);
    for (size_t i = 0; i < tx.values.size(); ++i) n.out.values[i] = softplus_f(tx.values[i]);
    return push(std::move(n));
}

Var Tape::reshape(Var x, std::vector<int64_t> target) {
    const Tensor& tx = val(x);
    if (Tensor::numel_of(target) != tx.numel())
        shape_error(Op::Reshape, tx.shape_str() + " -> " + Tensor::shape_str(target));
    Node n;
    n.op = Op::Reshape;
    n.inputs = {x.id};
    n.out.shape = std::move(target);
    n.out.values = tx.values;
    return push(std::move(n));
}

Var Tape::concat(const std::vector<Var>& xs, int axis) {
    if (xs.empty()) shape_error(Op::Concat, "no inputs");
    const Tensor& t0 = val(xs[0]);
    const int rank = t0.rank();
    if (axis < 0 || axis >= rank) shape_error(Op::Concat, "axis " + std::to_string(axis) + " out of range for " + t0.shape_str());
    int64_t axis_total = 0;
    for (Var v : xs) {
        const Tensor& t = val(v);
        if (t.rank() != rank) shape_error(Op::Concat, "rank mismatch " + t0.shape_str() + " vs " + t.shape_str());
        for (int d = 0; d < rank; ++d)
            if (d != axis && t.shape[d] != t0.shape[d])
                shape_error(Op::Concat, "off-axis mismatch " + t0.shape_str() + " vs " + t.shape_str());
        axis_total += t.shape[axis];
    }
    std::vector<int64_t> out_shape = t0.shape;
    out_shape[static_cast<size_t>(axis)] = axis_total;

    Node n;
    n.op = Op::Concat;
    n.axis = axis;
    for (Var v : xs) n.inputs.push_back(v.id);
    n.out = Tensor::zeros(out_shape);

    int64_t outer = 1, inner = 1;
    for (int d = 0; d < axis; ++d) outer *= t0.shape[d];
    for (int d = axis + 1; d < rank; ++d) inner *= t0.shape[d];

    int64_t dst_axis_off = 0;
    for (Var v : xs) {
        const Tensor& t = val(v);
        const int64_t alen = t.shape[static_cast<size_t>(axis)];
        for (int64_t o = 0; o < outer; ++o) {
            const double* src = t.values.data() + o * alen * inner;
            double* dst = n.out.values.data() + (o * axis_total + dst_axis_off) * inner;
            std::memcpy(dst, src, sizeof(double) * static_cast<size_t>(alen * inner));
        }
        dst_axis_off += alen;
    }
    return push(std::move(n));
}

Var Tape::slice(Var x, int axis, int64_t start, int64_t len) {
    const Tensor& tx = val(x);
    const int rank = tx.rank();
    if (axis < 0 || axis >= rank) shape_error(Op::Slice, "axis " + std::to_string(axis) + " out of range for " + tx.shape_str());
    if (start < 0 || len <= 0 || start + len > tx.shape[static_cast<size_t>(axis)])
        shape_error(Op::Slice, "range [" + std::to_string(start) + "," + std::to_string(start + len) + ") out of " + tx.shape_str());
    std::vector<int64_t> out_shape = tx.shape;
    out_shape[static_cast<size_t>(axis)] = len;

    Node n;
    n.op = Op::Slice;
    n.inputs = {x.id};
    n.axis = axis;
    n.start = start;
    n.out = Tensor::zeros(out_shape);

    int64_t outer = 1, inner = 1;
    for (int d = 0; d < axis; ++d) outer *= tx.shape[d];
    for (int d = axis + 1; d < rank; ++d) inner *= tx.shape[d];
    const int64_t alen = tx.shape[static_cast<size_t>(axis)];
    for (int64_t o = 0; o < outer; ++o) {
        const double* src = tx.values.data() + (o * alen + start) * inner;
        double* dst = n.out.values.data() + o * len * inner;
        std::memcpy(dst, src, sizeof(double) * static_cast<size_t>(len * inner));
    }
    return push(std::move(n));
}

Var Tape::embed(Var x, std::vector<int64_t> full_shape, int axis, int64_t start) {
    const Tensor& tx = val(x);
    const int rank = tx.rank();
    if (static_cast<int>(full_shape.size()) != rank) shape_error(Op::Embed, "rank mismatch");
    if (axis < 0 || axis >= rank) shape_error(Op::Embed, "axis out of range");
    const int64_t len = tx.shape[static_cast<size_t>(axis)];
    if (start < 0 || start + len > full_shape[static_cast<size_t>(axis)]) shape_error(Op::Embed, "block out of range");
    for (int d = 0; d < rank; ++d)
        if (d != axis && tx.shape[d] != full_shape[static_cast<size_t>(d)]) shape_error(Op::Embed, "off-axis mismatch");

    Node n;
    n.op = Op::Embed;
    n.inputs = {x.id};
    n.axis = axis;
    n.start = start;
    n.out = Tensor::zeros(full_shape);

    int64_t outer = 1, inner = 1;
    for (int d = 0; d < axis; ++d) outer *= full_shape[d];
    for (int d = axis + 1; d < rank; ++d) inner *= full_shape[d];
    const int64_t alen = full_shape[static_cast<size_t>(axis)];
    for (int64_t o = 0; o < outer; ++o) {
        const double* src = tx.values.data() + o * len * inner;
        double* dst = n.out.values.data() + (o * alen + start) * inner;
        std::memcpy(dst, src, sizeof(double) * static_cast<size_t>(len * inner));
    }
    return push(std::move(n));
}

Var Tape::sum_all(Var x) {
    const Tensor& tx = val(x);
    Node n;
    n.op = Op::SumAll;
    n.inputs = {x.id};
    n.out = Tensor::zeros({1});
    double s = 0.0;
    for (double v : tx.values) s += v;
    n.out.values[0] = s;
    return push(std::move(n));
}

Var Tape::broadcast_scalar(Var s, std::vector<int64_t> shape) {
    const Tensor& ts = val(s);
    if (!ts.is_scalar()) shape_error(Op::BroadcastScalar, "input must be scalar, got " + ts.shape_str());
    Node n;
    n.op = Op::BroadcastScalar;
    n.inputs = {s.id};
    n.out = Tensor::full(std::move(shape), ts.values[0]);
    return push(std::move(n));
}

Var Tape::conv2d(Var x, Var w, int64_t stride, int64_t pad) {
    const Tensor &tx = val(x), &tw = val(w);
    require_rank(Op::Conv2d, tx, 4, "input");
    require_rank(Op::Conv2d, tw, 4, "weight");
    if (tx.shape[1] != tw.shape[1]) shape_error(Op::Conv2d, "channels: " + tx.shape_str() + " vs " + tw.shape_str());
    if (tw.shape[2] != tw.shape[3]) shape_error(Op::Conv2d, "kernel must be square, got " + tw.shape_str());
    ConvGeom g;
    g.n = tx.shape[0];
    g.ic = tx.shape[1];
    g.oc = tw.shape[0];
    g.k = tw.shape[2];
    g.stride = stride;
    g.pad = pad;
    g.ih = tx.shape[2];
    g.iw = tx.shape[3];
    if (g.ih + 2 * pad < g.k || g.iw + 2 * pad < g.k) shape_error(Op::Conv2d, "kernel larger than padded input");
    g.oh = (g.ih + 2 * pad - g.k) / stride + 1;
    g.ow = (g.iw + 2 * pad - g.k) / stride + 1;

    Node n;
    n.op = Op::Conv2d;
    n.inputs = {x.id, w.id};
    n.geom = g;
    n.out = Tensor::zeros({g.n, g.oc, g.oh, g.ow});

    const int64_t ckk = g.ic * g.k * g.k, ohw = g.oh * g.ow;
    std::vector<double> col(static_cast<size_t>(ckk * ohw));
    ConstMatMap W(tw.values.data(), g.oc, ckk);
    for (int64_t i = 0; i < g.n; ++i) {
        im2col(tx.values.data() + i * g.ic * g.ih * g.iw, g, col.data());
        ConstMatMap C(col.data(), ckk, ohw);
        MatMap Y(n.out.values.data() + i * g.oc * ohw, g.oc, ohw);
        Y.noalias() = W * C;
    }
    return push(std::move(n));
}

Var Tape::conv2d_input_grad(Var dy, Var w, const ConvGeom& g) {
    const Tensor &tdy = val(dy), &tw = val(w);
    require_rank(Op::Conv2dInputGrad, tdy, 4, "dy");
    require_rank(Op::Conv2dInputGrad, tw, 4, "weight");
    if (tdy.shape[0] != g.n || tdy.shape[1] != g.oc || tdy.shape[2] != g.oh || tdy.shape[3] != g.ow)
        shape_error(Op::Conv2dInputGrad, "dy " + tdy.shape_str() + " does not match conv geometry");

    Node n;
    n.op = Op::Conv2dInputGrad;
    n.inputs = {dy.id, w.id};
    n.geom = g;
    n.out = Tensor::zeros({g.n, g.ic, g.ih, g.iw});

    const int64_t ckk = g.ic * g.k * g.k, ohw = g.oh * g.ow;
    std::vector<double> col(static_cast<size_t>(ckk * ohw));
    ConstMatMap W(tw.values.data(), g.oc, ckk);
    for (int64_t i = 0; i < g.n; ++i) {
        ConstMatMap DY(tdy.values.data() + i * g.oc * ohw, g.oc, ohw);
        MatMap C(col.data(), ckk, ohw);
        C.noalias() = W.transpose() * DY;
        col2im_add(col.data(), g, n.out.values.data() + i * g.ic * g.ih * g.iw);
    }
    return push(std::move(n));
}

Var Tape::conv2d_weight_grad(Var x, Var dy, const ConvGeom& g) {
    const Tensor &tx = val(x), &tdy = val(dy);
    require_rank(Op::Conv2dWeightGrad, tx, 4, "x");
    require_rank(Op::Conv2dWeightGrad, tdy, 4, "dy");
    if (tx.shape[0] != g.n || tx.shape[1] != g.ic || tx.shape[2] != g.ih || tx.shape[3] != g.iw)
        shape_error(Op::Conv2dWeightGrad, "x " + tx.shape_str() + " does not match conv geometry");
    if (tdy.shape[0] != g.n || tdy.shape[1] != g.oc || tdy.shape[2] != g.oh || tdy.shape[3] != g.ow)
        shape_error(Op::Conv2dWeightGrad, "dy " + tdy.shape_str() + " does not match conv geometry");

    Node n;
    n.op = Op::Conv2dWeightGrad;
    n.inputs = {x.id, dy.id};
    n.geom = g;
    n.out = Tensor::zeros({g.oc, g.ic, g.k, g.k});

    const int64_t ckk = g.ic * g.k * g.k, ohw = g.oh * g.ow;
    std::vector<double> col(static_cast<size_t>(ckk * ohw));
    MatMap DW(n.out.values.data(), g.oc, ckk);
    for (int64_t i = 0; i < g.n; ++i) {
        im2col(tx.values.data() + i * g.ic * g.ih * g.iw, g, col.data());
        ConstMatMap C(col.data(), ckk, ohw);
        ConstMatMap DY(tdy.values.data() + i * g.oc * ohw, g.oc, ohw);
        DW.noalias() += DY * C.transpose();
    }
    return push(std::move(n));
}

Var Tape::upsample2x(Var x) {
    const Tensor& tx = val(x);
    require_rank(Op::Upsample2x, tx, 4, "input");
    const int64_t N = tx.shape[0], C = tx.shape[1], H = tx.shape[2], W = tx.shape[3];
    Node n;
    n.op = Op::Upsample2x;
    n.inputs = {x.id};
    n.out = Tensor::zeros({N, C, 2 * H, 2 * W});
    for (int64_t i = 0; i < N * C; ++i) {
        const double* src = tx.values.data() + i * H * W;
        double* dst = n.out.values.data() + i * 4 * H * W;
        for (int64_t h = 0; h < H; ++h)
            for (int64_t w = 0; w < W; ++w) {
                const double v = src[h * W + w];
                double* d = dst + (2 * h) * 2 * W + 2 * w;
                d[0] = v;
                d[1] = v;
                d[2 * W] = v;
                d[2 * W + 1] = v;
            }
    }
    return push(std::move(n));
}

Var Tape::downsample2x_sum(Var x) {
    const Tensor& tx = val(x);
    require_rank(Op::Downsample2xSum, tx, 4, "input");
    if (tx.shape[2] % 2 != 0 || tx.shape[3] % 2 != 0) shape_error(Op::Downsample2xSum, "odd spatial dims " + tx.shape_str());
    const int64_t N = tx.shape[0], C = tx.shape[1], H = tx.shape[2] / 2, W = tx.shape[3] / 2;
    Node n;
    n.op = Op::Downsample2xSum;
    n.inputs = {x.id};
    n.out = Tensor::zeros({N, C, H, W});
    for (int64_t i = 0; i < N * C; ++i) {
        const double* src = tx.values.data() + i * 4 * H * W;
        double* dst = n.out.values.data() + i * H * W;
        for (int64_t h = 0; h < H; ++h)
            for (int64_t w = 0; w < W; ++w) {
                const double* s = src + (2 * h) * 2 * W + 2 * w;
                dst[h * W + w] = s[0] + s[1] + s[2 * W] + s[2 * W + 1];
            }
    }
    return push(std::move(n));
}

Var Tape::softmax_rows(Var logits) {
    const Tensor& tl = val(logits);
    require_rank(Op::SoftmaxRows, tl, 2, "logits");
    if (tl.shape[1] < 2) shape_error(Op::SoftmaxRows, "need at least 2 classes, got " + tl.shape_str());
    Node n;
    n.op = Op::SoftmaxRows;
    n.inputs = {logits.id};
    n.out = Tensor::zeros(tl.shape);
    const int64_t N = tl.shape[0], K = tl.shape[1];
    for (int64_t i = 0; i < N; ++i) {
        double mx = tl.at2(i, 0);
        for (int64_t j = 1; j < K; ++j) mx = std::max(mx, tl.at2(i, j));
        double denom = 0.0;
        for (int64_t j = 0; j < K; ++j) {
            double e = std::exp(tl.at2(i, j) - mx);
            n.out.at2(i, j) = e;
            denom += e;
        }
        for (int64_t j = 0; j < K; ++j) n.out.at2(i, j) /= denom;
    }
    return push(std::move(n));
}

Var Tape::cross_entropy_mean(Var logits, std::vector<int> labels) {
    const Tensor& tl = val(logits);
    require_rank(Op::CrossEntropyMean, tl, 2, "logits");
    const int64_t N = tl.shape[0], K = tl.shape[1];
    if (static_cast<int64_t>(labels.size()) != N)
        shape_error(Op::CrossEntropyMean, "label count " + std::to_string(labels.size()) + " vs batch " + std::to_string(N));
    for (int lab : labels)
        if (lab < 0 || lab >= K)
            throw std::invalid_argument("autodiff: cross_entropy_mean: label " + std::to_string(lab) + " outside [0," +
                                        std::to_string(K) + ")");
    Node n;
    n.op = Op::CrossEntropyMean;
    n.inputs = {logits.id};
    n.labels = std::move(labels);
    n.out = Tensor::zeros({1});
    n.saved = Tensor::zeros(tl.shape);  // probs, for the backward rule
    double total = 0.0;
    for (int64_t i = 0; i < N; ++i) {
        double mx = tl.at2(i, 0);
        for (int64_t j = 1; j < K; ++j) mx = std::max(mx, tl.at2(i, j));
        double denom = 0.0;
        for (int64_t j = 0; j < K; ++j) {
            double e = std::exp(tl.at2(i, j) - mx);
            n.saved.at2(i, j) = e;
            denom += e;
        }
        for (int64_t j = 0; j < K; ++j) n.saved.at2(i, j) = n.saved.at2(i, j) / denom;
        const int lab = n.labels[static_cast<size_t>(i)];
        total += -(static_cast<double>(tl.at2(i, lab)) - mx - std::log(denom));
    }
    n.out.values[0] = total / static_cast<double>(N);
    return push(std::move(n));
}

void Tape::accumulate(std::vector<int>& gradmap, int target, Var g) {
    int& slot = gradmap[static_cast<size_t>(target)];
    if (slot < 0)
        slot = g.id;
    else
        slot = add(Var{slot}, g).id;
}

std::vector<int> Tape::backward_graph(Var root) {
    const Node& r = node(root);
    if (!r.out.is_scalar())
        throw std::invalid_argument("autodiff: backward root must be scalar, got " + r.out.shape_str());

    std::vector<int> gradmap(nodes_.size(), -1);
    gradmap[static_cast<size_t>(root.id)] = constant(Tensor::scalar(1.0f)).id;

    for (int id = root.id; id >= 0; --id) {
        const int gid = gradmap[static_cast<size_t>(id)];
        if (gid < 0) continue;
        if (!nodes_[static_cast<size_t>(id)].needs_grad) continue;
        Var g{gid};
        // snapshot what backward needs: pushing new nodes may reallocate nodes_
        const Op op = nodes_[static_cast<size_t>(id)].op;
        const std::vector<int> inputs = nodes_[static_cast<size_t>(id)].inputs;
        const float alpha = nodes_[static_cast<size_t>(id)].alpha;
        const int axis = nodes_[static_cast<size_t>(id)].axis;
        const int64_t start = nodes_[static_cast<size_t>(id)].start;
        const ConvGeom geom = nodes_[static_cast<size_t>(id)].geom;
        Var self{id};

        auto in_needs = [&](size_t i) { return nodes_[static_cast<size_t>(inputs[i])].needs_grad; };

        switch (op) {
            case Op::Leaf:
                break;
            case Op::Add:
                if (in_needs(0)) accumulate(gradmap, inputs[0], g);
                if (in_needs(1)) accumulate(gradmap, inputs[1], g);
                break;
            case Op::Mul:
                if (in_needs(0)) accumulate(gradmap, inputs[0], mul(g, Var{inputs[1]}));
                if (in_needs(1)) accumulate(gradmap, inputs[1], mul(g, Var{inputs[0]}));
                break;
            case Op::Affine:
                if (in_needs(0)) accumulate(gradmap, inputs[0], affine(g, alpha, 0.0f));
                break;
            case Op::Matmul:
                if (in_needs(0)) accumulate(gradmap, inputs[0], matmul(g, transpose(Var{inputs[1]})));
                if (in_needs(1)) accumulate(gradmap, inputs[1], matmul(transpose(Var{inputs[0]}), g));
                break;
            case Op::Transpose:
                if (in_needs(0)) accumulate(gradmap, inputs[0], transpose(g));
                break;
            case Op::BiasAdd:
                if (in_needs(0)) accumulate(gradmap, inputs[0], g);
                if (in_needs(1)) accumulate(gradmap, inputs[1], col_sum(g));
                break;
            case Op::ColSum:
                if (in_needs(0)) accumulate(gradmap, inputs[0], broadcast_row(g, val(Var{inputs[0]}).shape[0]));
                break;
            case Op::BroadcastRow:
                if (in_needs(0)) accumulate(gradmap, inputs[0], col_sum(g));
                break;
            case Op::RowSum:
                if (in_needs(0)) accumulate(gradmap, inputs[0], broadcast_col(g, val(Var{inputs[0]}).shape[1]));
                break;
            case Op::BroadcastCol:
                if (in_needs(0)) accumulate(gradmap, inputs[0], row_sum(g));
                break;
            case Op::ChanBias:
                if (in_needs(0)) accumulate(gradmap, inputs[0], g);
                if (in_needs(1)) accumulate(gradmap, inputs[1], chan_sum(g));
                break;
            case Op::ChanSum: {
                const Tensor& tin = val(Var{inputs[0]});
                if (in_needs(0)) accumulate(gradmap, inputs[0], broadcast_chan(g, tin.shape[0], tin.shape[2], tin.shape[3]));
                break;
            }
            case Op::BroadcastChan:
                if (in_needs(0)) accumulate(gradmap, inputs[0], chan_sum(g));
                break;
            case Op::Relu:
            case Op::LeakyRelu: {
                if (in_needs(0)) {
                    const Tensor& tin = val(Var{inputs[0]});
                    Tensor mask = Tensor::zeros(tin.shape);
                    const double lo = op == Op::Relu ? 0.0 : static_cast<double>(alpha);
                    for (size_t i = 0; i < tin.values.size(); ++i) mask.values[i] = tin.values[i] > 0.0f ? 1.0f : lo;
                    accumulate(gradmap, inputs[0], mul(g, constant(std::move(mask))));
                }
                break;
            }
            case Op::Tanh:
                if (in_needs(0)) accumulate(gradmap, inputs[0], mul(g, affine(mul(self, self), -1.0f, 1.0f)));
                break;
            case Op::Sigmoid:
                if (in_needs(0)) accumulate(gradmap, inputs[0], mul(g, sub(self, mul(self, self))));
                break;
            case Op::Softplus:
                if (in_needs(0)) accumulate(gradmap, inputs[0], mul(g, sigmoid(Var{inputs[0]})));
                break;
            case Op::Reshape:
                if (in_needs(0)) accumulate(gradmap, inputs[0], reshape(g, val(Var{inputs[0]}).shape));
                break;
            case Op::Concat: {
                int64_t off = 0;
                for (size_t i = 0; i < inputs.size(); ++i) {
                    const int64_t len = val(Var{inputs[i]}).shape[static_cast<size_t>(axis)];
                    if (in_needs(i)) accumulate(gradmap, inputs[i], slice(g, axis, off, len));
                    off += len;
                }
                break;
            }
            case Op::Slice:
                if (in_needs(0)) accumulate(gradmap, inputs[0], embed(g, val(Var{inputs[0]}).shape, axis, start));
                break;
            case Op::Embed:
                if (in_needs(0))
                    accumulate(gradmap, inputs[0], slice(g, axis, start, val(Var{inputs[0]}).shape[static_cast<size_t>(axis)]));
                break;
            case Op::SumAll:
                if (in_needs(0)) accumulate(gradmap, inputs[0], broadcast_scalar(g, val(Var{inputs[0]}).shape));
                break;
            case Op::BroadcastScalar:
                if (in_needs(0)) accumulate(gradmap, inputs[0], sum_all(g));
                break;
            case Op::Conv2d:
                if (in_needs(0)) accumulate(gradmap, inputs[0], conv2d_input_grad(g, Var{inputs[1]}, geom));
                if (in_needs(1)) accumulate(gradmap, inputs[1], conv2d_weight_grad(Var{inputs[0]}, g, geom));
                break;
            case Op::Conv2dInputGrad:
                // out is x-like; inputs are (dy, w), both linear
                if (in_needs(0)) accumulate(gradmap, inputs[0], conv2d(g, Var{inputs[1]}, geom.stride, geom.pad));
                if (in_needs(1)) accumulate(gradmap, inputs[1], conv2d_weight_grad(g, Var{inputs[0]}, geom));
                break;
            case Op::Conv2dWeightGrad:
                // out is w-like; inputs are (x, dy), both linear
                if (in_needs(0)) accumulate(gradmap, inputs[0], conv2d_input_grad(Var{inputs[1]}, g, geom));
                if (in_needs(1)) accumulate(gradmap, inputs[1], conv2d(Var{inputs[0]}, g, geom.stride, geom.pad));
                break;
            case Op::Upsample2x:
                if (in_needs(0)) accumulate(gradmap, inputs[0], downsample2x_sum(g));
                break;
            case Op::Downsample2xSum:
                if (in_needs(0)) accumulate(gradmap, inputs[0], upsample2x(g));
                break;
            case Op::SoftmaxRows: {
                if (in_needs(0)) {
                    Var dot = row_sum(mul(g, self));
                    Var corr = broadcast_col(dot, val(self).shape[1]);
                    accumulate(gradmap, inputs[0], mul(self, sub(g, corr)));
                }
                break;
            }
            case Op::CrossEntropyMean: {
                if (in_needs(0)) {
                    const Node& me = nodes_[static_cast<size_t>(id)];
                    const Tensor& probs = me.saved;
                    const int64_t N = probs.shape[0], K = probs.shape[1];
                    Tensor delta = probs;
                    delta.requires_grad = false;
                    for (int64_t i = 0; i < N; ++i) delta.at2(i, me.labels[static_cast<size_t>(i)]) -= 1.0f;
                    for (double& v : delta.values) v /= static_cast<double>(N);
                    Var gb = broadcast_scalar(g, {N, K});
                    accumulate(gradmap, inputs[0], mul(gb, constant(std::move(delta))));
                }
                break;
            }
        }
    }
    return gradmap;
}

void Tape::backward(Var root) {
    std::vector<int> gradmap = backward_graph(root);
    for (size_t id = 0; id < gradmap.size(); ++id) {
        Node& n = nodes_[id];
        if (n.op != Op::Leaf || !n.out.requires_grad) continue;
        n.out.ensure_grad();
        if (gradmap[id] >= 0)
            *n.out.grad = nodes_[static_cast<size_t>(gradmap[id])].out.values;
        else
            std::fill(n.out.grad->begin(), n.out.grad->end(), 0.0f);
    }
}

Var Tape::grad_of(Var root, Var wrt) {
    if (!node(wrt).needs_grad)
        throw std::invalid_argument("autodiff: grad_of target does not require gradients");
    std::vector<int> gradmap = backward_graph(root);
    const int gid = gradmap[static_cast<size_t>(wrt.id)];
    if (gid < 0) return constant(Tensor::zeros(val(wrt).shape));
    return Var{gid};
}

double grad_check(const ScalarGraphFn& f, const Tensor& point, double eps, bool skip_kink_coords) {
    if (!(eps > 0.0 && eps <= 1e-2)) throw std::invalid_argument("grad_check: eps must be in (0, 1e-2]");

    Tape t;
    Var x = t.leaf(point, true);
    Var r = f(t, x);
    if (!t.val(r).is_scalar()) throw std::invalid_argument("grad_check: function output is not scalar");
    t.backward(r);
    const std::vector<double> analytic = t.grad(x);

    auto eval_at = [&](const Tensor& p) {
        Tape tt;
        Var xx = tt.leaf(p, false);
        Var rr = f(tt, xx);
        if (!tt.val(rr).is_scalar()) throw std::invalid_argument("grad_check: function output is not scalar");
        return static_cast<double>(tt.val(rr).values[0]);
    };

    double worst = 0.0;
    Tensor probe = point;
    for (size_t i = 0; i < point.values.size(); ++i) {
        if (skip_kink_coords && std::fabs(static_cast<double>(point.values[i])) < eps) continue;
        const double orig = probe.values[i];
        probe.values[i] = orig + eps;
        const double up = eval_at(probe);
        probe.values[i] = orig - eps;
        const double down = eval_at(probe);
        probe.values[i] = orig;
        const double numeric = (up - down) / (2.0 * eps);
        const double a = static_cast<double>(analytic[i]);
        const double err = std::fabs(a - numeric) / std::max(1.0, std::fabs(a));
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace ucgan::ad
