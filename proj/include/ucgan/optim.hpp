#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ucgan/tensor.hpp"

namespace ucgan {

struct AdamHyper {
    float lr = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float epsilon = 1e-8f;
};

// Moments are stored at float32 so optimizer state round-trips exactly
// through checkpoint payloads; the update arithmetic runs in double.
struct AdamState {
    int64_t step = 0;
    std::vector<float> m;
    std::vector<float> v;
    AdamHyper hyper;

    static AdamState make(int64_t total_len, AdamHyper h) {
        AdamState s;
        s.m.assign(static_cast<size_t>(total_len), 0.0f);
        s.v.assign(static_cast<size_t>(total_len), 0.0f);
        s.hyper = h;
        return s;
    }
};

// Bias-corrected Adam over a parameter list; grads[i] pairs with params[i].
// Updated parameters are rounded to float32 values, keeping every model
// parameter exactly representable in the checkpoint format.
inline void adam_step(std::vector<Tensor>& params, const std::vector<std::vector<double>>& grads, AdamState& s) {
    if (params.size() != grads.size()) throw std::invalid_argument("adam_step: param/grad list size mismatch");
    size_t total = 0;
    for (size_t i = 0; i < params.size(); ++i) {
        if (params[i].values.size() != grads[i].size())
            throw std::invalid_argument("adam_step: length mismatch for parameter " + std::to_string(i));
        total += grads[i].size();
    }
    if (total != s.m.size())
        throw std::invalid_argument("adam_step: state sized for " + std::to_string(s.m.size()) + " but got " +
                                    std::to_string(total) + " parameters");

    s.step += 1;
    const double b1 = s.hyper.beta1, b2 = s.hyper.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(s.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(s.step));
    const double lr = s.hyper.lr, eps = s.hyper.epsilon;

    size_t off = 0;
    for (size_t i = 0; i < params.size(); ++i) {
        double* p = params[i].values.data();
        const double* g = grads[i].data();
        for (size_t j = 0; j < grads[i].size(); ++j) {
            float& m = s.m[off + j];
            float& v = s.v[off + j];
            m = static_cast<float>(b1 * m + (1.0 - b1) * g[j]);
            v = static_cast<float>(b2 * v + (1.0 - b2) * g[j] * g[j]);
            const double mhat = m / c1;
            const double vhat = v / c2;
            p[j] = static_cast<double>(static_cast<float>(p[j] - lr * mhat / (std::sqrt(vhat) + eps)));
        }
        off += grads[i].size();
    }
}

}  // namespace ucgan
