#include "ucgan/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "ucgan/losses.hpp"
#include "ucgan/optim.hpp"
#include "ucgan/tape.hpp"

namespace ucgan::clf {

namespace {

int64_t conv_out(int64_t in, int64_t k, int64_t stride, int64_t pad) { return (in + 2 * pad - k) / stride + 1; }

std::vector<int64_t> model_batch_shape(const std::vector<int64_t>& feature_shape, int64_t n) {
    if (feature_shape.size() == 1) return {n, feature_shape[0]};
    if (feature_shape.size() == 2) return {n, 1, feature_shape[0], feature_shape[1]};
    throw std::invalid_argument("classifier: unsupported feature shape " + Tensor::shape_str(feature_shape));
}

}  // namespace

std::string param_fingerprint(const nn::Network& net) {
    uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](unsigned char b) {
        h ^= b;
        h *= 0x100000001b3ULL;
    };
    for (const Tensor& t : net.params) {
        for (double dv : t.values) {
            const float f = static_cast<float>(dv);
            uint32_t bits;
            std::memcpy(&bits, &f, 4);
            for (int i = 0; i < 4; ++i) mix(static_cast<unsigned char>(bits >> (8 * i)));
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<nn::LayerSpec> classifier_arch(const std::vector<int64_t>& feature_shape, int num_classes,
                                           const std::vector<int64_t>& hidden) {
    using nn::Act;
    using nn::LayerSpec;
    std::vector<LayerSpec> arch;
    if (feature_shape.size() == 1) {
        int64_t in = feature_shape[0];
        for (int64_t w : hidden) {
            arch.push_back(LayerSpec::dense(in, w, Act::Relu));
            in = w;
        }
        arch.push_back(LayerSpec::dense(in, num_classes, Act::None));
        return arch;
    }
    if (feature_shape.size() == 2) {
        const int64_t h1 = conv_out(feature_shape[0], 3, 2, 1), w1 = conv_out(feature_shape[1], 3, 2, 1);
        const int64_t h2 = conv_out(h1, 3, 2, 1), w2 = conv_out(w1, 3, 2, 1);
        arch.push_back(LayerSpec::conv(1, 16, 3, 2, 1, Act::Relu));
        arch.push_back(LayerSpec::conv(16, 32, 3, 2, 1, Act::Relu));
        arch.push_back(LayerSpec::reshape({32 * h2 * w2}));
        arch.push_back(LayerSpec::dense(32 * h2 * w2, 128, Act::Relu));
        arch.push_back(LayerSpec::dense(128, num_classes, Act::None));
        return arch;
    }
    throw std::invalid_argument("classifier: unsupported feature shape");
}

Tensor gather_batch(const data::LabeledDataset& ds, const std::vector<int64_t>& indices) {
    const int64_t item = ds.item_size();
    Tensor out = Tensor::zeros(model_batch_shape(ds.feature_shape, static_cast<int64_t>(indices.size())));
    for (size_t i = 0; i < indices.size(); ++i) {
        auto v = ds.item(static_cast<size_t>(indices[i]));
        std::copy(v.begin(), v.end(), out.values.begin() + static_cast<int64_t>(i) * item);
    }
    return out;
}

namespace {

std::pair<double, double> eval_acc_loss(const nn::Network& net, const data::LabeledDataset& ds) {
    const int64_t chunk = 512;
    const int64_t n = static_cast<int64_t>(ds.size());
    int64_t correct = 0;
    double loss_sum = 0.0;
    for (int64_t start = 0; start < n; start += chunk) {
        const int64_t b = std::min(chunk, n - start);
        std::vector<int64_t> idx(static_cast<size_t>(b));
        std::iota(idx.begin(), idx.end(), start);
        Tensor logits = net.infer(gather_batch(ds, idx));
        for (int64_t i = 0; i < b; ++i) {
            const int label = ds.labels[static_cast<size_t>(start + i)];
            int64_t arg = 0;
            double best = logits.at2(i, 0);
            double mx = best;
            for (int64_t k = 1; k < logits.shape[1]; ++k) {
                const double v = logits.at2(i, k);
                if (v > best) {
                    best = v;
                    arg = k;
                }
                mx = std::max(mx, v);
            }
            if (arg == label) ++correct;
            double denom = 0.0;
            for (int64_t k = 0; k < logits.shape[1]; ++k) denom += std::exp(static_cast<double>(logits.at2(i, k)) - mx);
            loss_sum += -(static_cast<double>(logits.at2(i, label)) - mx - std::log(denom));
        }
    }
    return {static_cast<double>(correct) / static_cast<double>(n), loss_sum / static_cast<double>(n)};
}

}  // namespace

std::pair<ClassifierModel, std::vector<HistoryRow>> train_classifier(const data::LabeledDataset& train,
                                                                     const data::LabeledDataset& val,
                                                                     const ClassifierConfig& cfg) {
    if (train.size() == 0) throw std::invalid_argument("train_classifier: empty training set");

    Rng init_rng(derive_seed(cfg.seed, "clf/init"));
    nn::Network net = nn::Network::build(classifier_arch(train.feature_shape, train.num_classes, cfg.hidden), init_rng);
    AdamState adam = AdamState::make(net.param_count(), {cfg.lr, 0.9f, 0.999f, 1e-8f});
    Rng shuffle_rng(derive_seed(cfg.seed, "clf/shuffle"));

    const int64_t n = static_cast<int64_t>(train.size());
    std::vector<int64_t> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    std::vector<HistoryRow> history;
    for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (int64_t start = 0; start < n; start += cfg.batch) {
            const int64_t b = std::min(cfg.batch, n - start);
            std::vector<int64_t> idx(order.begin() + start, order.begin() + start + b);
            std::vector<int> labels(static_cast<size_t>(b));
            for (int64_t i = 0; i < b; ++i) labels[static_cast<size_t>(i)] = train.labels[static_cast<size_t>(idx[static_cast<size_t>(i)])];

            ad::Tape t;
            std::vector<ad::Var> pvars;
            ad::Var x = t.constant(gather_batch(train, idx));
            ad::Var logits = net.forward(t, x, true, &pvars);
            ad::Var loss = t.cross_entropy_mean(logits, labels);
            const double loss_val = t.val(loss).values[0];
            if (!std::isfinite(loss_val))
                throw std::runtime_error("train_classifier: diverged (non-finite loss) at epoch " +
                                         std::to_string(epoch) + ", lr " + std::to_string(cfg.lr));
            t.backward(loss);
            std::vector<std::vector<double>> grads;
            grads.reserve(pvars.size());
            for (ad::Var pv : pvars) grads.push_back(t.grad(pv));
            adam_step(net.params, grads, adam);
        }
        auto [train_acc, train_loss] = eval_acc_loss(net, train);
        auto [val_acc, val_loss] = eval_acc_loss(net, val);
        history.push_back({epoch, train_acc, val_acc, train_loss, val_loss});
    }

    ClassifierModel model;
    model.net = std::move(net);
    model.num_classes = train.num_classes;
    model.feature_shape = train.feature_shape;
    model.frozen = true;
    model.fingerprint = param_fingerprint(model.net);
    return {std::move(model), std::move(history)};
}

Tensor predict_probs_batch(const ClassifierModel& model, const Tensor& batch) {
    const std::vector<int64_t> expected = model_batch_shape(model.feature_shape, batch.shape.empty() ? 0 : batch.shape[0]);
    if (batch.shape != expected)
        throw std::invalid_argument("predict_probs: batch shape " + batch.shape_str() + " does not match model input " +
                                    Tensor::shape_str(expected));
    ad::Tape t;
    ad::Var logits = model.net.forward(t, t.constant(batch), false);
    return t.val(t.softmax_rows(logits));
}

std::vector<double> predict_probs(const ClassifierModel& model, const Tensor& x) {
    if (x.shape != model.feature_shape)
        throw std::invalid_argument("predict_probs: item shape " + x.shape_str() + " does not match feature shape " +
                                    Tensor::shape_str(model.feature_shape));
    Tensor batch = Tensor::from(model_batch_shape(model.feature_shape, 1), x.values);
    Tensor probs = predict_probs_batch(model, batch);
    return probs.values;
}

double msp(const std::vector<double>& probs) {
    if (probs.size() < 2) throw std::invalid_argument("msp: need at least 2 classes");
    double sum = 0.0;
    double mx = probs[0];
    for (double p : probs) {
        sum += p;
        mx = std::max(mx, p);
    }
    if (std::fabs(sum - 1.0) > 1e-4)
        throw std::invalid_argument("msp: input not normalized (sum " + std::to_string(sum) + ")");
    return static_cast<double>(mx);
}

double accuracy(const ClassifierModel& model, const data::LabeledDataset& ds) {
    return eval_acc_loss(model.net, ds).first;
}

MspPool build_msp_pool(const ClassifierModel& model, const data::LabeledDataset& ds, const std::string& source_name) {
    if (!model.frozen) throw std::invalid_argument("build_msp_pool: classifier must be frozen");
    if (model.num_classes != ds.num_classes)
        throw std::invalid_argument("build_msp_pool: class count mismatch (model " + std::to_string(model.num_classes) +
                                    ", dataset " + std::to_string(ds.num_classes) + ")");
    MspPool pool;
    pool.source = source_name;
    pool.classifier_fingerprint = model.fingerprint;
    pool.entries.reserve(ds.size());
    const int64_t chunk = 512;
    const int64_t n = static_cast<int64_t>(ds.size());
    for (int64_t start = 0; start < n; start += chunk) {
        const int64_t b = std::min(chunk, n - start);
        std::vector<int64_t> idx(static_cast<size_t>(b));
        std::iota(idx.begin(), idx.end(), start);
        Tensor probs = predict_probs_batch(model, gather_batch(ds, idx));
        for (int64_t i = 0; i < b; ++i) {
            double mx = probs.at2(i, 0);
            for (int64_t k = 1; k < probs.shape[1]; ++k) mx = std::max(mx, probs.at2(i, k));
            pool.entries.push_back({ds.labels[static_cast<size_t>(start + i)], mx});
        }
    }
    return pool;
}

}  // namespace ucgan::clf
