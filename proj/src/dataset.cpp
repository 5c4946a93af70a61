#include "ucgan/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace ucgan::data {

namespace {

void check_severity(int severity) {
    if (severity < 1 || severity > 5)
        throw std::invalid_argument("corruption: severity " + std::to_string(severity) + " outside 1..5");
}

uint32_t read_u32_be(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("idx: truncated header in " + path);
    return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) | uint32_t(b[3]);
}

void write_u32_be(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<char*>(b), 4);
}

// reflect-at-edge padding (a b c | c b a)
int64_t reflect_index(int64_t i, int64_t n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - i - 1;
    }
    return i;
}

std::vector<double> gaussian_kernel(double sigma) {
    const int64_t radius = static_cast<int64_t>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int64_t i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (static_cast<double>(i) * i) / (sigma * sigma));
        k[static_cast<size_t>(i + radius)] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

}  // namespace

LabeledDataset make_moons(int64_t n, double noise, uint64_t seed) {
    if (n < 2) throw std::invalid_argument("make_moons: need at least 2 samples");
    if (noise < 0) throw std::invalid_argument("make_moons: negative noise");

    const int64_t n0 = (n + 1) / 2, n1 = n / 2;
    std::vector<float> xs;
    std::vector<int> labels;
    xs.reserve(static_cast<size_t>(2 * n));
    labels.reserve(static_cast<size_t>(n));

    auto theta = [](int64_t i, int64_t m) {
        return m > 1 ? M_PI * static_cast<double>(i) / static_cast<double>(m - 1) : 0.0;
    };
    for (int64_t i = 0; i < n0; ++i) {
        const double t = theta(i, n0);
        xs.push_back(static_cast<float>(std::cos(t)));
        xs.push_back(static_cast<float>(std::sin(t)));
        labels.push_back(0);
    }
    for (int64_t i = 0; i < n1; ++i) {
        const double t = theta(i, n1);
        xs.push_back(static_cast<float>(1.0 - std::cos(t)));
        xs.push_back(static_cast<float>(1.0 - std::sin(t) - 0.5));
        labels.push_back(1);
    }

    if (noise > 0) {
        for (int64_t i = 0; i < n; ++i) {
            Rng item_rng(derive_seed(seed, "moons/noise/" + std::to_string(i)));
            xs[static_cast<size_t>(2 * i)] += static_cast<float>(item_rng.normal() * noise);
            xs[static_cast<size_t>(2 * i + 1)] += static_cast<float>(item_rng.normal() * noise);
        }
    }

    std::vector<int64_t> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(seed, "moons/shuffle"));
    shuffle_rng.shuffle(order);

    LabeledDataset ds;
    ds.feature_shape = {2};
    ds.num_classes = 2;
    ds.features.resize(static_cast<size_t>(2 * n));
    ds.labels.resize(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        const int64_t src = order[static_cast<size_t>(i)];
        ds.features[static_cast<size_t>(2 * i)] = xs[static_cast<size_t>(2 * src)];
        ds.features[static_cast<size_t>(2 * i + 1)] = xs[static_cast<size_t>(2 * src + 1)];
        ds.labels[static_cast<size_t>(i)] = labels[static_cast<size_t>(src)];
    }
    return ds;
}

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw std::runtime_error("idx: cannot open " + images_path);
    std::ifstream labs(labels_path, std::ios::binary);
    if (!labs) throw std::runtime_error("idx: cannot open " + labels_path);

    const uint32_t img_magic = read_u32_be(imgs, images_path);
    if (img_magic != 2051)
        throw std::runtime_error("idx: bad image magic " + std::to_string(img_magic) + " in " + images_path +
                                 " (expected 2051)");
    const uint32_t lab_magic = read_u32_be(labs, labels_path);
    if (lab_magic != 2049)
        throw std::runtime_error("idx: bad label magic " + std::to_string(lab_magic) + " in " + labels_path +
                                 " (expected 2049)");

    const uint32_t n_img = read_u32_be(imgs, images_path);
    const uint32_t rows = read_u32_be(imgs, images_path);
    const uint32_t cols = read_u32_be(imgs, images_path);
    const uint32_t n_lab = read_u32_be(labs, labels_path);
    if (n_img != n_lab)
        throw std::runtime_error("idx: image/label count mismatch (" + std::to_string(n_img) + " vs " +
                                 std::to_string(n_lab) + ")");

    const size_t pixels = static_cast<size_t>(n_img) * rows * cols;
    std::vector<unsigned char> raw(pixels);
    imgs.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(pixels));
    if (static_cast<size_t>(imgs.gcount()) != pixels) throw std::runtime_error("idx: truncated image payload in " + images_path);
    std::vector<unsigned char> rawlab(n_lab);
    labs.read(reinterpret_cast<char*>(rawlab.data()), static_cast<std::streamsize>(n_lab));
    if (static_cast<size_t>(labs.gcount()) != n_lab) throw std::runtime_error("idx: truncated label payload in " + labels_path);

    LabeledDataset ds;
    ds.feature_shape = {static_cast<int64_t>(rows), static_cast<int64_t>(cols)};
    ds.num_classes = 10;
    ds.clamp01 = true;
    ds.features.resize(pixels);
    for (size_t i = 0; i < pixels; ++i) ds.features[i] = static_cast<float>(raw[i]) / 255.0f;
    ds.labels.resize(n_lab);
    for (size_t i = 0; i < n_lab; ++i) {
        if (rawlab[i] > 9) throw std::runtime_error("idx: label value " + std::to_string(rawlab[i]) + " outside 0..9");
        ds.labels[i] = rawlab[i];
    }
    return ds;
}

void write_idx(const std::string& images_path, const std::string& labels_path, const LabeledDataset& ds) {
    if (ds.feature_shape.size() != 2) throw std::invalid_argument("idx: only HxW image datasets can be written");
    std::ofstream imgs(images_path, std::ios::binary);
    if (!imgs) throw std::runtime_error("idx: cannot write " + images_path);
    std::ofstream labs(labels_path, std::ios::binary);
    if (!labs) throw std::runtime_error("idx: cannot write " + labels_path);

    write_u32_be(imgs, 2051);
    write_u32_be(imgs, static_cast<uint32_t>(ds.size()));
    write_u32_be(imgs, static_cast<uint32_t>(ds.feature_shape[0]));
    write_u32_be(imgs, static_cast<uint32_t>(ds.feature_shape[1]));
    std::vector<unsigned char> raw(ds.features.size());
    for (size_t i = 0; i < ds.features.size(); ++i) {
        const float v = std::clamp(ds.features[i], 0.0f, 1.0f);
        raw[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
    }
    imgs.write(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));

    write_u32_be(labs, 2049);
    write_u32_be(labs, static_cast<uint32_t>(ds.size()));
    std::vector<unsigned char> rawlab(ds.size());
    for (size_t i = 0; i < ds.size(); ++i) rawlab[i] = static_cast<unsigned char>(ds.labels[i]);
    labs.write(reinterpret_cast<char*>(rawlab.data()), static_cast<std::streamsize>(rawlab.size()));
}

Tensor apply_gaussian_noise(const Tensor& image, int severity, uint64_t seed, const CorruptionTables& tables) {
    check_severity(severity);
    const double sigma = tables.noise_sigma[static_cast<size_t>(severity)];
    Rng rng(seed);
    Tensor out = image;
    for (double& v : out.values) {
        v += rng.normal() * sigma;
        v = std::clamp(v, 0.0, 1.0);
    }
    return out;
}

Tensor apply_gaussian_blur(const Tensor& image, int severity, const CorruptionTables& tables) {
    check_severity(severity);
    if (image.rank() != 2) throw std::invalid_argument("blur: expected HxW image, got " + image.shape_str());
    const double sigma = tables.blur_sigma[static_cast<size_t>(severity)];
    const std::vector<double> k = gaussian_kernel(sigma);
    const int64_t radius = static_cast<int64_t>(k.size() / 2);
    const int64_t h = image.shape[0], w = image.shape[1];

    // separable pass: rows then columns, reflect padding
    std::vector<double> tmp(static_cast<size_t>(h * w));
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int64_t d = -radius; d <= radius; ++d)
                acc += k[static_cast<size_t>(d + radius)] *
                       static_cast<double>(image.values[static_cast<size_t>(y * w + reflect_index(x + d, w))]);
            tmp[static_cast<size_t>(y * w + x)] = acc;
        }
    Tensor out = Tensor::zeros(image.shape);
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int64_t d = -radius; d <= radius; ++d)
                acc += k[static_cast<size_t>(d + radius)] * tmp[static_cast<size_t>(reflect_index(y + d, h) * w + x)];
            out.values[static_cast<size_t>(y * w + x)] = std::clamp(acc, 0.0, 1.0);
        }
    return out;
}

std::pair<LabeledDataset, std::vector<CorruptionAssignment>> corrupt_dataset(const LabeledDataset& ds,
                                                                             const std::vector<CorruptionKind>& kinds,
                                                                             double fraction, uint64_t seed,
                                                                             const CorruptionTables& tables) {
    if (fraction < 0.0 || fraction > 1.0) throw std::invalid_argument("corrupt_dataset: fraction outside [0,1]");
    if (kinds.empty() && fraction > 0.0) throw std::invalid_argument("corrupt_dataset: no corruption kinds given");

    const int64_t n = static_cast<int64_t>(ds.size());
    const int64_t n_corrupt = static_cast<int64_t>(std::llround(fraction * static_cast<double>(n)));

    std::vector<int64_t> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng select_rng(derive_seed(seed, "corrupt/select"));
    select_rng.shuffle(order);
    std::vector<char> selected(static_cast<size_t>(n), 0);
    for (int64_t i = 0; i < n_corrupt; ++i) selected[static_cast<size_t>(order[static_cast<size_t>(i)])] = 1;

    LabeledDataset out = ds;
    std::vector<CorruptionAssignment> manifest(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        if (!selected[static_cast<size_t>(i)]) continue;
        Rng item_rng(derive_seed(seed, "corrupt/item/" + std::to_string(i)));
        const CorruptionKind kind = kinds[static_cast<size_t>(item_rng.uniform_int(static_cast<int64_t>(kinds.size())))];
        const int severity = 1 + static_cast<int>(item_rng.uniform_int(5));

        Tensor img = ds.item_tensor(static_cast<size_t>(i));
        Tensor corrupted = kind == CorruptionKind::GaussianNoise
                               ? apply_gaussian_noise(img, severity, item_rng.next_u64(), tables)
                               : apply_gaussian_blur(img, severity, tables);
        auto dst = out.item_mut(static_cast<size_t>(i));
        for (size_t p = 0; p < dst.size(); ++p) dst[p] = static_cast<float>(corrupted.values[p]);
        manifest[static_cast<size_t>(i)] = {true, kind, severity};
    }
    return {std::move(out), std::move(manifest)};
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds, double val_fraction, uint64_t seed) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw std::invalid_argument("split: val_fraction outside (0,1)");
    const int64_t n = static_cast<int64_t>(ds.size());
    const int64_t val_total = static_cast<int64_t>(std::llround(val_fraction * static_cast<double>(n)));
    if (val_total == 0 || val_total == n)
        throw std::invalid_argument("split: degenerate sizes (" + std::to_string(n - val_total) + "/" +
                                    std::to_string(val_total) + ")");

    // per-class shuffled index lists
    std::vector<std::vector<int64_t>> by_class(static_cast<size_t>(ds.num_classes));
    for (int64_t i = 0; i < n; ++i) by_class[static_cast<size_t>(ds.labels[static_cast<size_t>(i)])].push_back(i);
    for (size_t c = 0; c < by_class.size(); ++c) {
        Rng rng(derive_seed(seed, "split/class/" + std::to_string(c)));
        rng.shuffle(by_class[c]);
    }

    // proportional val counts, remainders to the largest fractional parts
    std::vector<int64_t> val_count(by_class.size(), 0);
    std::vector<std::pair<double, size_t>> frac;
    int64_t assigned = 0;
    for (size_t c = 0; c < by_class.size(); ++c) {
        const double exact = val_fraction * static_cast<double>(by_class[c].size());
        val_count[c] = static_cast<int64_t>(std::floor(exact));
        assigned += val_count[c];
        frac.push_back({exact - std::floor(exact), c});
    }
    std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (size_t j = 0; assigned < val_total && j < frac.size(); ++j) {
        const size_t c = frac[j].second;
        if (val_count[c] < static_cast<int64_t>(by_class[c].size())) {
            ++val_count[c];
            ++assigned;
        }
    }
    if (assigned != val_total) throw std::invalid_argument("split: cannot satisfy requested fraction");

    auto build = [&ds](const std::vector<int64_t>& idx) {
        LabeledDataset out;
        out.feature_shape = ds.feature_shape;
        out.num_classes = ds.num_classes;
        out.clamp01 = ds.clamp01;
        out.features.reserve(idx.size() * static_cast<size_t>(ds.item_size()));
        out.labels.reserve(idx.size());
        for (int64_t i : idx) {
            auto v = ds.item(static_cast<size_t>(i));
            out.features.insert(out.features.end(), v.begin(), v.end());
            out.labels.push_back(ds.labels[static_cast<size_t>(i)]);
        }
        return out;
    };

    std::vector<int64_t> val_idx, train_idx;
    for (size_t c = 0; c < by_class.size(); ++c) {
        for (size_t j = 0; j < by_class[c].size(); ++j)
            (j < static_cast<size_t>(val_count[c]) ? val_idx : train_idx).push_back(by_class[c][j]);
    }
    std::sort(val_idx.begin(), val_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    return {build(train_idx), build(val_idx)};
}

void save_moons_csv(const std::string& path, const LabeledDataset& ds) {
    if (ds.feature_shape != std::vector<int64_t>{2}) throw std::invalid_argument("moons csv: dataset is not 2D");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("moons csv: cannot write " + path);
    out << "x0,x1,label\n";
    char buf[96];
    for (size_t i = 0; i < ds.size(); ++i) {
        auto v = ds.item(i);
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%d\n", static_cast<double>(v[0]), static_cast<double>(v[1]),
                      ds.labels[i]);
        out << buf;
    }
}

LabeledDataset load_moons_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("moons csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "x0,x1,label")
        throw std::runtime_error("moons csv: bad header in " + path);
    LabeledDataset ds;
    ds.feature_shape = {2};
    ds.num_classes = 2;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double x0, x1;
        int label;
        if (std::sscanf(line.c_str(), "%lf,%lf,%d", &x0, &x1, &label) != 3)
            throw std::runtime_error("moons csv: bad row '" + line + "'");
        ds.features.push_back(static_cast<float>(x0));
        ds.features.push_back(static_cast<float>(x1));
        ds.labels.push_back(label);
    }
    return ds;
}

}  // namespace ucgan::data
