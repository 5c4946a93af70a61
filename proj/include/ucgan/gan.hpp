#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ucgan/classifier.hpp"
#include "ucgan/dataset.hpp"
#include "ucgan/nn.hpp"
#include "ucgan/optim.hpp"

namespace ucgan::gan {

struct GanConfig {
    int64_t latent_dim = 8;
    int64_t batch = 64;
    int64_t steps = 20000;
    float lr_g = 1e-3f;
    float lr_d = 1e-3f;
    float beta1 = 0.5f;
    float beta2 = 0.999f;
    float r1_gamma = 1.0f;
    int64_t r1_interval = 16;
    uint64_t seed = 42;
    int64_t log_interval = 100;
    // 0 disables; otherwise every N steps a training-contract audit runs
    // (classifier frozen, fake-side passthrough, real-side MSP fidelity).
    int64_t contract_interval = 0;
};

struct GeneratorModel {
    nn::Network net;
    int64_t latent_dim = 0;
    int num_classes = 0;
    std::vector<int64_t> out_shape;  // per-sample, matches dataset feature_shape
    bool image_output = false;
};

struct DiscriminatorModel {
    nn::Network net;
    int num_classes = 0;
    bool image_input = false;
};

struct ConditionedBatch {
    enum class Provenance { Real, Fake };
    Tensor data;  // [N,F] or [N,1,H,W]
    std::vector<int> labels;
    std::vector<float> msp_conditions;
    Provenance provenance = Provenance::Real;
};

struct StepLog {
    int64_t step;
    double d_loss, g_loss, r1, d_real_mean, d_fake_mean;
};

// [z | onehot(label) | m]; m validated against (1/K, 1].
Tensor assemble_generator_input(const Tensor& z, int label, double m, int num_classes);
Tensor assemble_generator_input_batch(const Tensor& z, const std::vector<int>& labels, const std::vector<float>& ms,
                                      int num_classes);

// Dense tier: [x | onehot | m]. Image tier: K+1 constant planes appended as
// channels.
Tensor assemble_discriminator_input_batch(const Tensor& x, const std::vector<int>& labels, const std::vector<float>& ms,
                                          int num_classes);

std::vector<clf::MspPool::Entry> sample_conditions(const clf::MspPool& pool, int64_t batch_size, Rng& rng);

void validate_msp_condition(double m, int num_classes);

// Reference architectures. The generator ends linear for vector data and
// sigmoid for images; discriminators are leaky_relu stacks onto one logit.
GeneratorModel make_generator(const std::vector<int64_t>& feature_shape, int num_classes, int64_t latent_dim, Rng& rng);
DiscriminatorModel make_discriminator(const std::vector<int64_t>& feature_shape, int num_classes, Rng& rng);

Tensor generate_batch(const GeneratorModel& g, const Tensor& z, const std::vector<int>& labels,
                      const std::vector<float>& ms);

// (gamma/2) * mean over the batch of squared input-gradient norms of D,
// gradients taken w.r.t. the data only.
double r1_penalty(const DiscriminatorModel& d, const ConditionedBatch& real, double gamma);

struct TrainState {
    AdamState adam_g;
    AdamState adam_d;
    int64_t step = 0;
    std::string rng_shuffle, rng_z, rng_cond;  // serialized engines
    std::vector<int64_t> order;                // current epoch order
    int64_t cursor = 0;
};

struct GanTrainResult {
    GeneratorModel g;
    DiscriminatorModel d;
    std::vector<StepLog> history;
    int64_t contract_checks = 0;
    int64_t contract_violations = 0;
};

using SnapshotFn = std::function<void(int64_t step, const GeneratorModel&, const DiscriminatorModel&, const TrainState&)>;

// Fresh run when resume is null; otherwise continues from the snapshotted
// models + state, reproducing the uninterrupted run exactly (same seed
// stream positions, same shuffle order).
GanTrainResult train_gan(const data::LabeledDataset& dataset, const clf::ClassifierModel& classifier,
                         const clf::MspPool& pool, const GanConfig& cfg, const SnapshotFn& snapshot = nullptr,
                         int64_t snapshot_interval = 0, const TrainState* resume = nullptr,
                         const GeneratorModel* resume_g = nullptr, const DiscriminatorModel* resume_d = nullptr);

}  // namespace ucgan::gan
