#include "ucgan/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace ucgan::nn {

namespace {

bool relu_family(Act a) { return a == Act::Relu || a == Act::LeakyRelu; }

Tensor init_weight(std::vector<int64_t> shape, int64_t fan_in, Act act, Rng& rng) {
    const double stddev = relu_family(act) ? std::sqrt(2.0 / static_cast<double>(fan_in))
                                           : std::sqrt(1.0 / static_cast<double>(fan_in));
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.values) v = static_cast<double>(static_cast<float>(rng.normal() * stddev));
    return t;
}

}  // namespace

std::string act_name(Act a) {
    switch (a) {
        case Act::None: return "none";
        case Act::Relu: return "relu";
        case Act::LeakyRelu: return "leaky_relu";
        case Act::Tanh: return "tanh";
        case Act::Sigmoid: return "sigmoid";
    }
    return "none";
}

Act act_from_name(const std::string& s) {
    if (s == "none") return Act::None;
    if (s == "relu") return Act::Relu;
    if (s == "leaky_relu") return Act::LeakyRelu;
    if (s == "tanh") return Act::Tanh;
    if (s == "sigmoid") return Act::Sigmoid;
    throw std::invalid_argument("unknown activation: " + s);
}

Network Network::build(std::vector<LayerSpec> arch, Rng& rng) {
    Network net;
    net.arch = std::move(arch);
    for (size_t li = 0; li < net.arch.size(); ++li) {
        const LayerSpec& l = net.arch[li];
        const std::string prefix = "layer" + std::to_string(li);
        switch (l.kind) {
            case LayerSpec::Kind::Dense:
                net.param_names.push_back(prefix + ".weight");
                net.params.push_back(init_weight({l.in, l.out}, l.in, l.act, rng));
                net.param_names.push_back(prefix + ".bias");
                net.params.push_back(Tensor::zeros({l.out}));
                break;
            case LayerSpec::Kind::Conv:
                net.param_names.push_back(prefix + ".weight");
                net.params.push_back(init_weight({l.out, l.in, l.k, l.k}, l.in * l.k * l.k, l.act, rng));
                net.param_names.push_back(prefix + ".bias");
                net.params.push_back(Tensor::zeros({l.out}));
                break;
            case LayerSpec::Kind::Reshape:
            case LayerSpec::Kind::Upsample2x:
                break;
        }
    }
    return net;
}

ad::Var Network::forward(ad::Tape& t, ad::Var x, bool trainable, std::vector<ad::Var>* param_vars) const {
    std::vector<ad::Var> pv;
    pv.reserve(params.size());
    for (const Tensor& p : params) pv.push_back(t.leaf(p, trainable));
    if (param_vars) *param_vars = pv;
    return forward_with(t, x, pv);
}

ad::Var Network::forward_with(ad::Tape& t, ad::Var x, const std::vector<ad::Var>& pv) const {
    if (pv.size() != params.size()) throw std::invalid_argument("network: wrong parameter var count");
    size_t pi = 0;
    ad::Var h = x;
    for (const LayerSpec& l : arch) {
        switch (l.kind) {
            case LayerSpec::Kind::Dense: {
                ad::Var w = pv[pi++], b = pv[pi++];
                h = t.bias_add(t.matmul(h, w), b);
                break;
            }
            case LayerSpec::Kind::Conv: {
                ad::Var w = pv[pi++], b = pv[pi++];
                h = t.chan_bias(t.conv2d(h, w, l.stride, l.pad), b);
                break;
            }
            case LayerSpec::Kind::Reshape: {
                std::vector<int64_t> target{t.val(h).shape[0]};
                target.insert(target.end(), l.target.begin(), l.target.end());
                h = t.reshape(h, std::move(target));
                break;
            }
            case LayerSpec::Kind::Upsample2x:
                h = t.upsample2x(h);
                break;
        }
        switch (l.act) {
            case Act::None: break;
            case Act::Relu: h = t.relu(h); break;
            case Act::LeakyRelu: h = t.leaky_relu(h, kLeakySlope); break;
            case Act::Tanh: h = t.tanh(h); break;
            case Act::Sigmoid: h = t.sigmoid(h); break;
        }
    }
    return h;
}

Tensor Network::infer(const Tensor& x) const {
    ad::Tape t;
    ad::Var out = forward(t, t.constant(x), false);
    return t.val(out);
}

}  // namespace ucgan::nn
