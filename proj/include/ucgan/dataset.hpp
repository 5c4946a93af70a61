#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ucgan/rng.hpp"
#include "ucgan/tensor.hpp"

namespace ucgan::data {

// Ordered (features, label) collection with flat row-major feature storage.
struct LabeledDataset {
    std::vector<int64_t> feature_shape;  // {2} for moons, {28,28} for images
    std::vector<float> features;         // size() * item_size() values
    std::vector<int> labels;
    int num_classes = 0;
    bool clamp01 = false;  // image data lives in [0,1]

    size_t size() const { return labels.size(); }
    int64_t item_size() const { return Tensor::numel_of(feature_shape); }
    std::span<const float> item(size_t i) const {
        return {features.data() + static_cast<size_t>(item_size()) * i, static_cast<size_t>(item_size())};
    }
    std::span<float> item_mut(size_t i) {
        return {features.data() + static_cast<size_t>(item_size()) * i, static_cast<size_t>(item_size())};
    }
    Tensor item_tensor(size_t i) const {
        auto v = item(i);
        return Tensor::from(feature_shape, std::vector<double>(v.begin(), v.end()));
    }
};

enum class CorruptionKind { GaussianNoise, GaussianBlur };

struct CorruptionSpec {
    CorruptionKind kind = CorruptionKind::GaussianNoise;
    int severity = 1;  // 1..5
    double fraction_corrupted = 0.5;
    uint64_t seed = 0;
};

// Severity -> sigma lookup, index 0 unused. Tunable through config; the
// defaults target a ~5 point accuracy drop on the reference CNN.
struct CorruptionTables {
    std::vector<double> noise_sigma = {0.0, 0.08, 0.12, 0.18, 0.26, 0.38};
    std::vector<double> blur_sigma = {0.0, 0.5, 0.75, 1.0, 1.5, 2.0};
};

// Which corruption (if any) hit each item; one row per dataset item.
struct CorruptionAssignment {
    bool corrupted = false;
    CorruptionKind kind = CorruptionKind::GaussianNoise;
    int severity = 0;
};

// Two interleaving half-circles. Class 0: (cos t, sin t); class 1:
// (1 - cos t, 0.5 - sin t); t evenly spaced in [0, pi]; isotropic Gaussian
// noise added per coordinate; order shuffled by seed.
LabeledDataset make_moons(int64_t n, double noise, uint64_t seed);

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path);
void write_idx(const std::string& images_path, const std::string& labels_path, const LabeledDataset& ds);

Tensor apply_gaussian_noise(const Tensor& image, int severity, uint64_t seed, const CorruptionTables& tables = {});
Tensor apply_gaussian_blur(const Tensor& image, int severity, const CorruptionTables& tables = {});

std::pair<LabeledDataset, std::vector<CorruptionAssignment>> corrupt_dataset(const LabeledDataset& ds,
                                                                             const std::vector<CorruptionKind>& kinds,
                                                                             double fraction, uint64_t seed,
                                                                             const CorruptionTables& tables = {});

// Seeded stratified split: disjoint, exhaustive, per-class counts within +-1
// of the global ratio.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds, double val_fraction, uint64_t seed);

// Moons CSV persistence: header x0,x1,label; 9 significant digits.
void save_moons_csv(const std::string& path, const LabeledDataset& ds);
LabeledDataset load_moons_csv(const std::string& path);

}  // namespace ucgan::data
