#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ucgan/classifier.hpp"
#include "ucgan/dataset.hpp"
#include "ucgan/gan.hpp"
#include "ucgan/tensor.hpp"

namespace ucgan::eval {

// The evaluation stack runs against plain functions so it can be validated
// with synthetic oracles independently of any trained model.
using GenerateFn = std::function<Tensor(const Tensor& z, int label, double m)>;
using ClassifyFn = std::function<std::vector<double>(const Tensor& x)>;

GenerateFn wrap_generator(const gan::GeneratorModel& g);
ClassifyFn wrap_classifier(const clf::ClassifierModel& c);

struct SweepSample {
    int label;
    int pred;
    double m_out;
};

struct SweepRow {
    double m_in;
    std::vector<SweepSample> samples;
    double mean_out = 0.0, std_out = 0.0;
    int64_t n = 0;
};

struct SweepReport {
    std::vector<SweepRow> rows;
    double pearson_r = 0.0;
    uint64_t seed = 0;
    std::string generator_fingerprint;
};

double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

SweepReport msp_sweep(const GenerateFn& gen, const ClassifyFn& classify, int num_classes, int64_t latent_dim,
                      const std::vector<double>& m_grid, int64_t n_per_condition, uint64_t seed);

struct EditTrajectory {
    Tensor z;
    int label = 0;
    std::vector<double> m_in;
    std::vector<Tensor> outputs;
    std::vector<double> m_out;
    double monotonicity_score = 0.0;
};

// m_sequence must be strictly descending inside (1/K, 1]. The score is the
// fraction of adjacent pairs with m_out[i+1] <= m_out[i] + 0.02.
EditTrajectory edit_uncertainty(const GenerateFn& gen, const ClassifyFn& classify, int num_classes, const Tensor& z,
                                int label, const std::vector<double>& m_sequence);

struct GridSpec {
    double x0 = -1.5, x1 = 2.5, y0 = -1.25, y1 = 1.75;
    int64_t nx = 20, ny = 20;
};

// Cells holding >=5 real points whose mean classifier MSP is below tau form
// the uncertain region U; each score is the fraction of generated points in U.
std::pair<double, double> spatial_agreement(const data::LabeledDataset& real, const ClassifyFn& classify,
                                            const std::vector<std::pair<double, double>>& generated_low,
                                            const std::vector<std::pair<double, double>>& generated_high, double tau,
                                            const GridSpec& grid);

struct GridResult {
    double m = 0.0;
    std::vector<Tensor> samples;  // row-major: label-major, then repeat index
    std::vector<int> labels;
    std::vector<int> preds;
    std::vector<double> probs;  // predicted-class probability (the annotation)
    int64_t n_per_label = 0;
};

GridResult generate_grid(const GenerateFn& gen, const ClassifyFn& classify, int num_classes, int64_t latent_dim,
                         double m, const std::vector<int>& labels, int64_t n_per_label, uint64_t seed);

}  // namespace ucgan::eval
