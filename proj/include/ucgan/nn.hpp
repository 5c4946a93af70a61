#pragma once

#include <string>
#include <vector>

#include "ucgan/rng.hpp"
#include "ucgan/tape.hpp"
#include "ucgan/tensor.hpp"

namespace ucgan::nn {

enum class Act { None, Relu, LeakyRelu, Tanh, Sigmoid };

// Fixed negative slope for every leaky_relu in the project.
inline constexpr float kLeakySlope = 0.2f;

struct LayerSpec {
    enum class Kind { Dense, Conv, Reshape, Upsample2x };
    Kind kind = Kind::Dense;
    int64_t in = 0, out = 0;  // dense widths / conv channels
    int64_t k = 3, stride = 1, pad = 1;
    std::vector<int64_t> target;  // per-sample reshape target
    Act act = Act::None;

    static LayerSpec dense(int64_t in, int64_t out, Act act) {
        LayerSpec s;
        s.kind = Kind::Dense;
        s.in = in;
        s.out = out;
        s.act = act;
        return s;
    }
    static LayerSpec conv(int64_t in_ch, int64_t out_ch, int64_t k, int64_t stride, int64_t pad, Act act) {
        LayerSpec s;
        s.kind = Kind::Conv;
        s.in = in_ch;
        s.out = out_ch;
        s.k = k;
        s.stride = stride;
        s.pad = pad;
        s.act = act;
        return s;
    }
    static LayerSpec reshape(std::vector<int64_t> per_sample_target) {
        LayerSpec s;
        s.kind = Kind::Reshape;
        s.target = std::move(per_sample_target);
        return s;
    }
    static LayerSpec upsample2x() {
        LayerSpec s;
        s.kind = Kind::Upsample2x;
        return s;
    }
};

// A plain feed-forward stack (the classifier, generator and discriminator are
// all instances of this) with named parameter tensors.
struct Network {
    std::vector<LayerSpec> arch;
    std::vector<std::string> param_names;
    std::vector<Tensor> params;

    int64_t param_count() const {
        int64_t n = 0;
        for (const Tensor& t : params) n += t.numel();
        return n;
    }

    // He init for relu-family layers, Xavier for the rest; biases zero.
    static Network build(std::vector<LayerSpec> arch, Rng& rng);

    // Registers parameters on the tape (trainable leaves or constants) and
    // builds the forward graph for a batch input x.
    ad::Var forward(ad::Tape& t, ad::Var x, bool trainable, std::vector<ad::Var>* param_vars = nullptr) const;

    // Builds the forward graph against already-registered parameter vars, so
    // several passes in one step share one set of gradients.
    ad::Var forward_with(ad::Tape& t, ad::Var x, const std::vector<ad::Var>& param_vars) const;

    // Forward pass without gradient bookkeeping.
    Tensor infer(const Tensor& x) const;
};

std::string act_name(Act a);
Act act_from_name(const std::string& s);

}  // namespace ucgan::nn
