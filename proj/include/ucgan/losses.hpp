#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ucgan {

// softplus(x) = log(1 + e^x), safe for logits of any magnitude
inline double softplus(double x) { return (x > 0.0 ? x : 0.0) + std::log1p(std::exp(-std::fabs(x))); }

struct GanLossTerms {
    double d_loss;  // softplus(-d_real) + softplus(d_fake)
    double g_loss;  // softplus(-d_fake)
};

// Non-saturating logistic GAN loss contributions for one (real, fake) logit pair.
inline GanLossTerms gan_logistic_terms(double d_real_logit, double d_fake_logit) {
    if (!std::isfinite(d_real_logit) || !std::isfinite(d_fake_logit))
        throw std::invalid_argument("gan_logistic_terms: non-finite logit");
    return {softplus(-d_real_logit) + softplus(d_fake_logit), softplus(-d_fake_logit)};
}

// Max-shift stabilized softmax of one logit vector.
inline std::vector<double> softmax_vec(const std::vector<double>& logits) {
    if (logits.size() < 2) throw std::invalid_argument("softmax: need at least 2 classes");
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    std::vector<double> out(logits.size());
    double denom = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        denom += out[i];
    }
    for (double& v : out) v /= denom;
    return out;
}

}  // namespace ucgan
