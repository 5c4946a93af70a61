#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "ucgan/dataset.hpp"

using namespace ucgan;
using namespace ucgan::data;
namespace fs = std::filesystem;

namespace {

fs::path test_dir() {
    static fs::path dir = [] {
        fs::path p = fs::temp_directory_path() / "ucgan_dataset_tests";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

}  // namespace

TEST_CASE("moons formula at the parameter endpoints") {
    // noise 0: class 0 has a theta=0 point at (1,0); class 1 at (0,0.5)
    LabeledDataset ds = make_moons(8, 0.0, 1);
    bool found_c0_t0 = false, found_c1_t0 = false;
    for (size_t i = 0; i < ds.size(); ++i) {
        auto v = ds.item(i);
        if (ds.labels[i] == 0 && std::fabs(v[0] - 1.0) < 1e-12 && std::fabs(v[1]) < 1e-12) found_c0_t0 = true;
        if (ds.labels[i] == 1 && std::fabs(v[0]) < 1e-12 && std::fabs(v[1] - 0.5) < 1e-12) found_c1_t0 = true;
    }
    CHECK(found_c0_t0);
    CHECK(found_c1_t0);

    // theta = pi/2 appears for odd point counts per class: (0,1) for class 0
    LabeledDataset ds3 = make_moons(6, 0.0, 1);  // 3 per class, middle theta = pi/2
    bool found_mid = false;
    for (size_t i = 0; i < ds3.size(); ++i) {
        auto v = ds3.item(i);
        if (ds3.labels[i] == 0 && std::fabs(v[0]) < 1e-7 && std::fabs(v[1] - 1.0) < 1e-7) found_mid = true;
    }
    CHECK(found_mid);
}

TEST_CASE("moons class balance, determinism, rejection") {
    LabeledDataset a = make_moons(2000, 0.3, 42);
    LabeledDataset b = make_moons(2000, 0.3, 42);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);

    int c0 = 0;
    for (int l : a.labels) c0 += l == 0;
    CHECK(c0 == 1000);

    LabeledDataset odd = make_moons(2001, 0.0, 1);
    int c0o = 0;
    for (int l : odd.labels) c0o += l == 0;
    CHECK(std::abs(2 * c0o - 2001) <= 1);

    CHECK_THROWS_AS(make_moons(1, 0.1, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_moons(100, -0.1, 1), std::invalid_argument);

    LabeledDataset c = make_moons(2000, 0.3, 43);
    CHECK(a.features != c.features);
}

TEST_CASE("noiseless class-0 moon lies on the unit upper half-circle") {
    LabeledDataset ds = make_moons(501, 0.0, 7);
    for (size_t i = 0; i < ds.size(); ++i) {
        if (ds.labels[i] != 0) continue;
        auto v = ds.item(i);
        const double r = std::sqrt(static_cast<double>(v[0]) * v[0] + static_cast<double>(v[1]) * v[1]);
        CHECK(std::fabs(r - 1.0) < 1e-6);
        CHECK(v[1] >= -1e-7);
    }
}

TEST_CASE("moons csv round-trips bit-exactly") {
    LabeledDataset ds = make_moons(200, 0.3, 11);
    const std::string path = (test_dir() / "moons.csv").string();
    save_moons_csv(path, ds);
    LabeledDataset back = load_moons_csv(path);
    REQUIRE(back.size() == ds.size());
    CHECK(back.features == ds.features);  // 9 significant digits round-trip float32
    CHECK(back.labels == ds.labels);

    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "x0,x1,label");
}

TEST_CASE("idx loader accepts the canonical format and rejects corrupt files") {
    LabeledDataset imgs;
    imgs.feature_shape = {4, 5};
    imgs.num_classes = 10;
    imgs.clamp01 = true;
    for (int i = 0; i < 3; ++i) {
        for (int p = 0; p < 20; ++p) imgs.features.push_back(static_cast<float>((i * 20 + p) % 256) / 255.0f);
        imgs.labels.push_back(i);
    }
    const std::string ip = (test_dir() / "img.idx").string(), lp = (test_dir() / "lab.idx").string();
    write_idx(ip, lp, imgs);
    LabeledDataset back = load_idx(ip, lp);
    CHECK(back.size() == 3);
    CHECK(back.feature_shape == std::vector<int64_t>{4, 5});
    CHECK(back.labels == imgs.labels);
    CHECK(back.features == imgs.features);

    // scaling anchors: byte 255 -> 1.0, byte 0 -> 0.0
    LabeledDataset extremes;
    extremes.feature_shape = {1, 2};
    extremes.num_classes = 10;
    extremes.features = {1.0f, 0.0f};
    extremes.labels = {3};
    write_idx(ip, lp, extremes);
    back = load_idx(ip, lp);
    CHECK(back.features[0] == 1.0f);
    CHECK(back.features[1] == 0.0f);

    // bad image magic
    {
        std::fstream f(ip, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(3);
        f.put(static_cast<char>(0x04));
    }
    CHECK_THROWS_WITH_AS(load_idx(ip, lp), doctest::Contains("magic"), std::runtime_error);
    write_idx(ip, lp, extremes);
    {
        std::fstream f(lp, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(3);
        f.put(static_cast<char>(0x05));
    }
    CHECK_THROWS_WITH_AS(load_idx(ip, lp), doctest::Contains("magic"), std::runtime_error);

    // truncated payload
    write_idx(ip, lp, extremes);
    fs::resize_file(ip, fs::file_size(ip) - 1);
    CHECK_THROWS_WITH_AS(load_idx(ip, lp), doctest::Contains("truncated"), std::runtime_error);

    // count mismatch: 2-image file against 1-label file
    LabeledDataset two;
    two.feature_shape = {1, 2};
    two.num_classes = 10;
    two.features = {0.5f, 0.5f, 0.25f, 0.25f};
    two.labels = {1, 2};
    const std::string ip2 = (test_dir() / "img2.idx").string();
    write_idx(ip2, (test_dir() / "lab_scratch.idx").string(), two);
    write_idx((test_dir() / "img_scratch.idx").string(), lp, extremes);
    CHECK_THROWS_WITH_AS(load_idx(ip2, lp), doctest::Contains("mismatch"), std::runtime_error);
}

TEST_CASE("canonical mnist loads when present") {
    const char* dir = std::getenv("UCGAN_MNIST_DIR");
    const std::string base = dir ? dir : "/root/data/mnist";
    if (!fs::exists(base + "/train-images-idx3-ubyte")) {
        MESSAGE("canonical MNIST not present, skipping");
        return;
    }
    LabeledDataset train = load_idx(base + "/train-images-idx3-ubyte", base + "/train-labels-idx1-ubyte");
    CHECK(train.size() == 60000);
    CHECK(train.feature_shape == std::vector<int64_t>{28, 28});
    CHECK(train.num_classes == 10);
    for (float v : train.features)
        if (v < 0.0f || v > 1.0f) FAIL("pixel outside [0,1]");
}

TEST_CASE("gaussian noise severity table and sampling oracle") {
    CorruptionTables tables;
    CHECK(tables.noise_sigma[3] == doctest::Approx(0.18));
    CHECK(tables.noise_sigma[1] == doctest::Approx(0.08));
    CHECK(tables.blur_sigma[3] == doctest::Approx(1.0));

    // all-0.5 image: empirical std of the delta within 0.08 +- 0.01
    Tensor img = Tensor::full({100, 100}, 0.5);
    Tensor out = apply_gaussian_noise(img, 1, 99);
    double sum = 0, sum2 = 0;
    for (size_t i = 0; i < out.values.size(); ++i) {
        const double d = out.values[i] - 0.5;
        sum += d;
        sum2 += d * d;
    }
    const double n = static_cast<double>(out.values.size());
    const double std_dev = std::sqrt(sum2 / n - (sum / n) * (sum / n));
    CHECK(std::fabs(std_dev - 0.08) < 0.01);

    // determinism + clamping
    Tensor out2 = apply_gaussian_noise(img, 1, 99);
    CHECK(out.values == out2.values);
    Tensor bright = Tensor::full({10, 10}, 0.99);
    Tensor noisy = apply_gaussian_noise(bright, 5, 5);
    for (double v : noisy.values) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }

    CHECK_THROWS_AS(apply_gaussian_noise(img, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(apply_gaussian_noise(img, 6, 1), std::invalid_argument);
}

TEST_CASE("gaussian blur: constants, impulse weight, mass preservation") {
    Tensor uniform = Tensor::full({9, 9}, 0.37);
    Tensor blurred = apply_gaussian_blur(uniform, 3);
    for (double v : blurred.values) CHECK(v == doctest::Approx(0.37).epsilon(1e-6));

    // direct kernel-evaluation oracle for the center weight at sigma=1.0
    const double sigma = 1.0;
    const int radius = 3;  // ceil(3*sigma)
    double norm1d = 0.0;
    for (int i = -radius; i <= radius; ++i) norm1d += std::exp(-0.5 * i * i / (sigma * sigma));
    const double center2d = (1.0 / norm1d) * (1.0 / norm1d);

    Tensor impulse = Tensor::zeros({15, 15});
    impulse.values[7 * 15 + 7] = 1.0;
    Tensor out = apply_gaussian_blur(impulse, 3);  // severity 3 -> sigma 1.0
    CHECK(out.values[7 * 15 + 7] == doctest::Approx(center2d).epsilon(1e-9));

    double mass = 0;
    for (double v : out.values) mass += v;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));

    CHECK_THROWS_AS(apply_gaussian_blur(uniform, 0), std::invalid_argument);
    CHECK_THROWS_AS(apply_gaussian_blur(uniform, 9), std::invalid_argument);
}

TEST_CASE("corrupt_dataset: exact counts, untouched labels, uniform severities") {
    LabeledDataset ds;
    ds.feature_shape = {8, 8};
    ds.num_classes = 10;
    ds.clamp01 = true;
    Rng rng(3);
    const int64_t n = 10000;
    for (int64_t i = 0; i < n; ++i) {
        for (int p = 0; p < 64; ++p) ds.features.push_back(static_cast<float>(rng.uniform()));
        ds.labels.push_back(static_cast<int>(rng.uniform_int(10)));
    }

    auto [corrupted, manifest] =
        corrupt_dataset(ds, {CorruptionKind::GaussianNoise, CorruptionKind::GaussianBlur}, 0.5, 77);
    int64_t c = 0;
    std::vector<int64_t> sev_hist(6, 0);
    for (const auto& row : manifest)
        if (row.corrupted) {
            ++c;
            sev_hist[static_cast<size_t>(row.severity)] += 1;
        }
    CHECK(c == 5000);
    CHECK(corrupted.labels == ds.labels);
    CHECK(corrupted.feature_shape == ds.feature_shape);
    for (float v : corrupted.features) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }

    // chi-square over 5 severity levels, df=4: below 13.2767 means p > 0.01
    const double expect = static_cast<double>(c) / 5.0;
    double stat = 0;
    for (int s = 1; s <= 5; ++s)
        stat += (static_cast<double>(sev_hist[static_cast<size_t>(s)]) - expect) *
                (static_cast<double>(sev_hist[static_cast<size_t>(s)]) - expect) / expect;
    CHECK(stat < 13.2767);

    auto [same, manifest0] = corrupt_dataset(ds, {CorruptionKind::GaussianNoise}, 0.0, 77);
    CHECK(same.features == ds.features);

    auto [corrupted2, manifest2] =
        corrupt_dataset(ds, {CorruptionKind::GaussianNoise, CorruptionKind::GaussianBlur}, 0.5, 77);
    CHECK(corrupted2.features == corrupted.features);

    CHECK_THROWS_AS(corrupt_dataset(ds, {}, 0.5, 1), std::invalid_argument);
    CHECK_THROWS_AS(corrupt_dataset(ds, {CorruptionKind::GaussianNoise}, 1.5, 1), std::invalid_argument);
}

TEST_CASE("split: arithmetic, exhaustive union, stratification") {
    LabeledDataset ds = make_moons(2000, 0.3, 21);
    auto [train, val] = split(ds, 0.2, 5);
    CHECK(train.size() == 1600);
    CHECK(val.size() == 400);

    // union equals the original multiset of rows
    auto key = [](float a, float b, int l) {
        return std::to_string(a) + "/" + std::to_string(b) + "/" + std::to_string(l);
    };
    std::map<std::string, int> count;
    for (size_t i = 0; i < ds.size(); ++i) count[key(ds.item(i)[0], ds.item(i)[1], ds.labels[i])] += 1;
    for (size_t i = 0; i < train.size(); ++i) count[key(train.item(i)[0], train.item(i)[1], train.labels[i])] -= 1;
    for (size_t i = 0; i < val.size(); ++i) count[key(val.item(i)[0], val.item(i)[1], val.labels[i])] -= 1;
    for (const auto& [k, v] : count) CHECK(v == 0);

    // stratified: class ratio within one item of the global ratio
    int val_c0 = 0;
    for (int l : val.labels) val_c0 += l == 0;
    CHECK(std::abs(val_c0 - 200) <= 1);

    CHECK_THROWS_AS(split(ds, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(split(ds, 1.0, 1), std::invalid_argument);
    LabeledDataset tiny = make_moons(4, 0.0, 1);
    CHECK_THROWS_AS(split(tiny, 0.01, 1), std::invalid_argument);

    auto [train2, val2] = split(ds, 0.2, 5);
    CHECK(train2.features == train.features);
    CHECK(val2.labels == val.labels);
}
