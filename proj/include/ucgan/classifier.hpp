#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ucgan/dataset.hpp"
#include "ucgan/nn.hpp"
#include "ucgan/tensor.hpp"

namespace ucgan::clf {

struct ClassifierConfig {
    std::vector<int64_t> hidden = {64, 64};  // MLP widths (vector-feature datasets)
    int64_t epochs = 60;
    int64_t batch = 64;
    float lr = 1e-3f;
    uint64_t seed = 42;
};

struct HistoryRow {
    int64_t epoch;
    double train_acc, val_acc, train_loss, val_loss;
};

// Frozen after training; its MSP is the conditioning signal for everything
// downstream, so the parameters must never move again.
struct ClassifierModel {
    nn::Network net;
    int num_classes = 0;
    std::vector<int64_t> feature_shape;
    bool frozen = false;
    std::string fingerprint;  // hash of parameter bytes, set when frozen
};

// 2 -> 64 -> 64 -> K for vector features; conv(16)/conv(32) stride 2 + dense
// 128 -> K for 28x28 images.
std::vector<nn::LayerSpec> classifier_arch(const std::vector<int64_t>& feature_shape, int num_classes,
                                           const std::vector<int64_t>& hidden);

std::pair<ClassifierModel, std::vector<HistoryRow>> train_classifier(const data::LabeledDataset& train,
                                                                     const data::LabeledDataset& val,
                                                                     const ClassifierConfig& cfg);

// Batch of rows shaped for the model ([N,F] or [N,1,H,W]) -> [N,K] probabilities.
Tensor predict_probs_batch(const ClassifierModel& model, const Tensor& batch);
std::vector<double> predict_probs(const ClassifierModel& model, const Tensor& x);

// Maximum softmax probability of one probability vector; rejects vectors that
// do not sum to 1 within 1e-4.
double msp(const std::vector<double>& probs);

double accuracy(const ClassifierModel& model, const data::LabeledDataset& ds);

struct MspPool {
    struct Entry {
        int label;
        float msp;
    };
    std::vector<Entry> entries;  // index-aligned with the source dataset
    std::string source;
    std::string classifier_fingerprint;
};

MspPool build_msp_pool(const ClassifierModel& model, const data::LabeledDataset& ds, const std::string& source_name);

// Assemble a forward-ready batch tensor from dataset items ([N,F] vectors or
// [N,1,H,W] images).
Tensor gather_batch(const data::LabeledDataset& ds, const std::vector<int64_t>& indices);

std::string param_fingerprint(const nn::Network& net);

}  // namespace ucgan::clf
