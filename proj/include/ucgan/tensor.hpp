#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ucgan {

// Dense row-major tensor. The one data type every model, dataset and
// checkpoint in this project is built from. Math runs in double; parameters
// are kept at float32-representable values so checkpoint payloads (32-bit
// floats) round-trip bit-exactly.
struct Tensor {
    std::vector<int64_t> shape;
    std::vector<double> values;
    bool requires_grad = false;
    std::optional<std::vector<double>> grad;

    Tensor() = default;

    static int64_t numel_of(const std::vector<int64_t>& shape) {
        int64_t n = 1;
        for (int64_t d : shape) {
            if (d <= 0) throw std::invalid_argument("tensor: nonpositive dimension " + std::to_string(d));
            n *= d;
        }
        return n;
    }

    static Tensor zeros(std::vector<int64_t> shape) {
        Tensor t;
        int64_t n = numel_of(shape);
        t.shape = std::move(shape);
        t.values.assign(static_cast<size_t>(n), 0.0);
        return t;
    }

    static Tensor full(std::vector<int64_t> shape, double v) {
        Tensor t = zeros(std::move(shape));
        std::fill(t.values.begin(), t.values.end(), v);
        return t;
    }

    static Tensor from(std::vector<int64_t> shape, std::vector<double> values) {
        if (numel_of(shape) != static_cast<int64_t>(values.size()))
            throw std::invalid_argument("tensor: shape/value count mismatch (" + shape_str(shape) + " vs " +
                                        std::to_string(values.size()) + " values)");
        Tensor t;
        t.shape = std::move(shape);
        t.values = std::move(values);
        return t;
    }

    static Tensor scalar(double v) { return from({1}, {v}); }

    int64_t numel() const { return static_cast<int64_t>(values.size()); }
    int rank() const { return static_cast<int>(shape.size()); }

    bool is_scalar() const { return numel() == 1; }

    double& at2(int64_t i, int64_t j) { return values[static_cast<size_t>(i * shape[1] + j)]; }
    double at2(int64_t i, int64_t j) const { return values[static_cast<size_t>(i * shape[1] + j)]; }

    // flat offset of [n][c][h][w] for rank-4 tensors
    int64_t idx4(int64_t n, int64_t c, int64_t h, int64_t w) const {
        return ((n * shape[1] + c) * shape[2] + h) * shape[3] + w;
    }

    void ensure_grad() {
        if (!grad) grad.emplace(values.size(), 0.0f);
    }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }

    static std::string shape_str(const std::vector<int64_t>& s) {
        std::ostringstream os;
        os << '[';
        for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
        os << ']';
        return os.str();
    }
    std::string shape_str() const { return shape_str(shape); }
};

inline bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

}  // namespace ucgan
