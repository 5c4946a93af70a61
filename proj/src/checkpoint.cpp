#include "ucgan/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace ucgan::io {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'U', 'C', 'G', 'N'};

void append_u32_le(std::string& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>(v >> (8 * i)));
}
void append_u64_le(std::string& buf, uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>(v >> (8 * i)));
}
uint32_t read_u32_le(const unsigned char* p) {
    return uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) | (uint32_t(p[3]) << 24);
}
uint64_t read_u64_le(const unsigned char* p) {
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

void append_f32_le(std::string& buf, float f) {
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    append_u32_le(buf, bits);
}
float read_f32_le(const unsigned char* p) {
    const uint32_t bits = read_u32_le(p);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

}  // namespace

json arch_to_json(const std::vector<nn::LayerSpec>& arch) {
    json out = json::array();
    for (const nn::LayerSpec& l : arch) {
        json j;
        switch (l.kind) {
            case nn::LayerSpec::Kind::Dense:
                j = {{"kind", "dense"}, {"in", l.in}, {"out", l.out}, {"act", nn::act_name(l.act)}};
                break;
            case nn::LayerSpec::Kind::Conv:
                j = {{"kind", "conv"},  {"in", l.in},   {"out", l.out},
                     {"k", l.k},        {"stride", l.stride}, {"pad", l.pad},
                     {"act", nn::act_name(l.act)}};
                break;
            case nn::LayerSpec::Kind::Reshape:
                j = {{"kind", "reshape"}, {"target", l.target}};
                break;
            case nn::LayerSpec::Kind::Upsample2x:
                j = {{"kind", "upsample2x"}};
                break;
        }
        out.push_back(std::move(j));
    }
    return out;
}

std::vector<nn::LayerSpec> arch_from_json(const json& j) {
    std::vector<nn::LayerSpec> arch;
    for (const json& l : j) {
        const std::string kind = l.at("kind").get<std::string>();
        if (kind == "dense") {
            arch.push_back(nn::LayerSpec::dense(l.at("in").get<int64_t>(), l.at("out").get<int64_t>(),
                                                nn::act_from_name(l.at("act").get<std::string>())));
        } else if (kind == "conv") {
            arch.push_back(nn::LayerSpec::conv(l.at("in").get<int64_t>(), l.at("out").get<int64_t>(),
                                               l.at("k").get<int64_t>(), l.at("stride").get<int64_t>(),
                                               l.at("pad").get<int64_t>(),
                                               nn::act_from_name(l.at("act").get<std::string>())));
        } else if (kind == "reshape") {
            arch.push_back(nn::LayerSpec::reshape(l.at("target").get<std::vector<int64_t>>()));
        } else if (kind == "upsample2x") {
            arch.push_back(nn::LayerSpec::upsample2x());
        } else {
            throw std::runtime_error("checkpoint: unknown layer kind '" + kind + "'");
        }
    }
    return arch;
}

void save_checkpoint(const std::string& path, json metadata, const nn::Network& net) {
    json manifest = json::array();
    uint64_t offset = 0;
    std::string payload;
    for (size_t i = 0; i < net.params.size(); ++i) {
        const Tensor& t = net.params[i];
        manifest.push_back({{"name", net.param_names[i]}, {"shape", t.shape}, {"offset", offset}});
        for (double f : t.values) append_f32_le(payload, static_cast<float>(f));
        offset += static_cast<uint64_t>(t.values.size()) * 4;
    }
    metadata["tensors"] = std::move(manifest);
    const std::string meta = metadata.dump();

    std::string buf;
    buf.append(kMagic, 4);
    append_u32_le(buf, kCheckpointVersion);
    append_u64_le(buf, meta.size());
    buf += meta;
    buf += payload;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const unsigned char* p = reinterpret_cast<const unsigned char*>(raw.data());

    if (raw.size() < 16) throw std::runtime_error("checkpoint: truncated file " + path);
    if (std::memcmp(p, kMagic, 4) != 0) throw std::runtime_error("checkpoint: bad magic in " + path);
    const uint32_t version = read_u32_le(p + 4);
    if (version != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version) + " in " + path);
    const uint64_t meta_len = read_u64_le(p + 8);
    if (16 + meta_len > raw.size()) throw std::runtime_error("checkpoint: truncated metadata in " + path);

    json metadata;
    try {
        metadata = json::parse(raw.substr(16, meta_len));
    } catch (const json::exception& e) {
        throw std::runtime_error("checkpoint: metadata parse error in " + path + ": " + e.what());
    }
    if (!metadata.contains("tensors")) throw std::runtime_error("checkpoint: manifest missing in " + path);

    const size_t payload_start = 16 + static_cast<size_t>(meta_len);
    const size_t payload_size = raw.size() - payload_start;

    LoadedCheckpoint out;
    uint64_t expect_offset = 0;
    for (const json& entry : metadata.at("tensors")) {
        const std::string name = entry.at("name").get<std::string>();
        const std::vector<int64_t> shape = entry.at("shape").get<std::vector<int64_t>>();
        const uint64_t offset = entry.at("offset").get<uint64_t>();
        if (offset != expect_offset)
            throw std::runtime_error("checkpoint: manifest offsets inconsistent at tensor '" + name + "' in " + path);
        const uint64_t n = static_cast<uint64_t>(Tensor::numel_of(shape));
        if (offset + n * 4 > payload_size)
            throw std::runtime_error("checkpoint: payload too short for tensor '" + name + "' in " + path);
        Tensor t = Tensor::zeros(shape);
        const unsigned char* src = p + payload_start + offset;
        for (uint64_t i = 0; i < n; ++i) t.values[static_cast<size_t>(i)] = read_f32_le(src + i * 4);
        out.net.param_names.push_back(name);
        out.net.params.push_back(std::move(t));
        expect_offset = offset + n * 4;
    }
    if (expect_offset != payload_size)
        throw std::runtime_error("checkpoint: payload length mismatch in " + path + " (manifest " +
                                 std::to_string(expect_offset) + ", file " + std::to_string(payload_size) + ")");

    if (metadata.contains("arch")) out.net.arch = arch_from_json(metadata.at("arch"));
    out.metadata = std::move(metadata);
    return out;
}

void save_classifier(const std::string& path, const clf::ClassifierModel& m, const std::string& config_snapshot) {
    json meta{{"kind", "classifier"},
              {"arch", arch_to_json(m.net.arch)},
              {"num_classes", m.num_classes},
              {"feature_shape", m.feature_shape},
              {"frozen", m.frozen},
              {"fingerprint", m.fingerprint},
              {"config", config_snapshot}};
    save_checkpoint(path, std::move(meta), m.net);
}

clf::ClassifierModel load_classifier(const std::string& path) {
    LoadedCheckpoint c = load_checkpoint(path);
    if (c.metadata.value("kind", "") != "classifier")
        throw std::runtime_error("checkpoint: " + path + " is not a classifier checkpoint");
    clf::ClassifierModel m;
    m.net = std::move(c.net);
    m.num_classes = c.metadata.at("num_classes").get<int>();
    m.feature_shape = c.metadata.at("feature_shape").get<std::vector<int64_t>>();
    m.frozen = c.metadata.at("frozen").get<bool>();
    if (!c.metadata.contains("fingerprint")) throw std::runtime_error("checkpoint: fingerprint absent in " + path);
    m.fingerprint = c.metadata.at("fingerprint").get<std::string>();
    const std::string actual = clf::param_fingerprint(m.net);
    if (actual != m.fingerprint)
        throw std::runtime_error("checkpoint: fingerprint mismatch in " + path + " (stored " + m.fingerprint +
                                 ", payload " + actual + ")");
    return m;
}

void save_generator(const std::string& path, const gan::GeneratorModel& m, const std::string& classifier_fingerprint,
                    const std::string& config_snapshot, json extra) {
    json meta{{"kind", "generator"},
              {"arch", arch_to_json(m.net.arch)},
              {"latent_dim", m.latent_dim},
              {"num_classes", m.num_classes},
              {"out_shape", m.out_shape},
              {"image_output", m.image_output},
              {"classifier_fingerprint", classifier_fingerprint},
              {"config", config_snapshot}};
    if (!extra.is_null() && !extra.empty()) meta["extra"] = std::move(extra);
    save_checkpoint(path, std::move(meta), m.net);
}

gan::GeneratorModel load_generator(const std::string& path, json* metadata_out) {
    LoadedCheckpoint c = load_checkpoint(path);
    if (c.metadata.value("kind", "") != "generator")
        throw std::runtime_error("checkpoint: " + path + " is not a generator checkpoint");
    if (!c.metadata.contains("classifier_fingerprint"))
        throw std::runtime_error("checkpoint: classifier fingerprint absent in " + path);
    gan::GeneratorModel m;
    m.net = std::move(c.net);
    m.latent_dim = c.metadata.at("latent_dim").get<int64_t>();
    m.num_classes = c.metadata.at("num_classes").get<int>();
    m.out_shape = c.metadata.at("out_shape").get<std::vector<int64_t>>();
    m.image_output = c.metadata.at("image_output").get<bool>();
    if (metadata_out) *metadata_out = std::move(c.metadata);
    return m;
}

void save_discriminator(const std::string& path, const gan::DiscriminatorModel& m,
                        const std::string& classifier_fingerprint, const std::string& config_snapshot, json extra) {
    json meta{{"kind", "discriminator"},
              {"arch", arch_to_json(m.net.arch)},
              {"num_classes", m.num_classes},
              {"image_input", m.image_input},
              {"classifier_fingerprint", classifier_fingerprint},
              {"config", config_snapshot}};
    if (!extra.is_null() && !extra.empty()) meta["extra"] = std::move(extra);
    save_checkpoint(path, std::move(meta), m.net);
}

gan::DiscriminatorModel load_discriminator(const std::string& path, json* metadata_out) {
    LoadedCheckpoint c = load_checkpoint(path);
    if (c.metadata.value("kind", "") != "discriminator")
        throw std::runtime_error("checkpoint: " + path + " is not a discriminator checkpoint");
    gan::DiscriminatorModel m;
    m.net = std::move(c.net);
    m.num_classes = c.metadata.at("num_classes").get<int>();
    m.image_input = c.metadata.at("image_input").get<bool>();
    if (metadata_out) *metadata_out = std::move(c.metadata);
    return m;
}

}  // namespace ucgan::io
