#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ucgan/classifier.hpp"
#include "ucgan/gan.hpp"
#include "ucgan/nn.hpp"

namespace ucgan::io {

// Binary layout: "UCGN" | u32 version (LE) | u64 metadata length (LE) |
// UTF-8 JSON metadata | float32 LE payloads in manifest order.
inline constexpr uint32_t kCheckpointVersion = 1;

nlohmann::json arch_to_json(const std::vector<nn::LayerSpec>& arch);
std::vector<nn::LayerSpec> arch_from_json(const nlohmann::json& j);

// Generic save: metadata must not contain key "tensors" (written here).
void save_checkpoint(const std::string& path, nlohmann::json metadata, const nn::Network& net);

struct LoadedCheckpoint {
    nlohmann::json metadata;
    nn::Network net;
};
LoadedCheckpoint load_checkpoint(const std::string& path);

void save_classifier(const std::string& path, const clf::ClassifierModel& m, const std::string& config_snapshot);
clf::ClassifierModel load_classifier(const std::string& path);

void save_generator(const std::string& path, const gan::GeneratorModel& m, const std::string& classifier_fingerprint,
                    const std::string& config_snapshot, nlohmann::json extra = {});
gan::GeneratorModel load_generator(const std::string& path, nlohmann::json* metadata_out = nullptr);

void save_discriminator(const std::string& path, const gan::DiscriminatorModel& m,
                        const std::string& classifier_fingerprint, const std::string& config_snapshot,
                        nlohmann::json extra = {});
gan::DiscriminatorModel load_discriminator(const std::string& path, nlohmann::json* metadata_out = nullptr);

}  // namespace ucgan::io
