#include "ucgan/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ucgan::eval {

namespace {

Tensor draw_latent(int64_t latent_dim, Rng& rng) {
    Tensor z = Tensor::zeros({latent_dim});
    for (double& v : z.values) v = rng.normal();
    return z;
}

struct Pred {
    int arg;
    double prob;  // probability of the argmax class (the MSP)
};

Pred classify_msp(const ClassifyFn& classify, const Tensor& x) {
    const std::vector<double> probs = classify(x);
    const double m = clf::msp(probs);
    int arg = 0;
    for (size_t k = 1; k < probs.size(); ++k)
        if (probs[k] > probs[static_cast<size_t>(arg)]) arg = static_cast<int>(k);
    return {arg, m};
}

}  // namespace

GenerateFn wrap_generator(const gan::GeneratorModel& g) {
    return [&g](const Tensor& z, int label, double m) {
        Tensor batch = gan::generate_batch(g, Tensor::from({1, z.shape[0]}, z.values), {label}, {static_cast<float>(m)});
        std::vector<int64_t> per_sample(batch.shape.begin() + 1, batch.shape.end());
        if (per_sample.size() == 3 && per_sample[0] == 1) per_sample.erase(per_sample.begin());
        return Tensor::from(per_sample, batch.values);
    };
}

ClassifyFn wrap_classifier(const clf::ClassifierModel& c) {
    return [&c](const Tensor& x) { return clf::predict_probs(c, x); };
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("pearson: length mismatch");
    if (xs.size() < 2) throw std::invalid_argument("pearson: need at least 2 pairs");
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("pearson: zero variance (degenerate sweep)");
    return sxy / std::sqrt(sxx * syy);
}

SweepReport msp_sweep(const GenerateFn& gen, const ClassifyFn& classify, int num_classes, int64_t latent_dim,
                      const std::vector<double>& m_grid, int64_t n_per_condition, uint64_t seed) {
    if (m_grid.empty()) throw std::invalid_argument("msp_sweep: empty condition grid");
    if (n_per_condition < 30) throw std::invalid_argument("msp_sweep: need at least 30 samples per condition");
    for (double m : m_grid) gan::validate_msp_condition(m, num_classes);

    SweepReport report;
    report.seed = seed;
    std::vector<double> all_in, all_out;
    for (size_t gi = 0; gi < m_grid.size(); ++gi) {
        SweepRow row;
        row.m_in = m_grid[gi];
        row.n = n_per_condition;
        double sum = 0, sum2 = 0;
        for (int64_t j = 0; j < n_per_condition; ++j) {
            // per-(condition, sample) stream: parallel and serial runs agree
            Rng rng(derive_seed(seed, "sweep/" + std::to_string(gi) + "/" + std::to_string(j)));
            const int label = static_cast<int>(rng.uniform_int(num_classes));
            const Tensor z = draw_latent(latent_dim, rng);
            const Tensor x = gen(z, label, row.m_in);
            const Pred p = classify_msp(classify, x);
            row.samples.push_back({label, p.arg, p.prob});
            sum += p.prob;
            sum2 += p.prob * p.prob;
            all_in.push_back(row.m_in);
            all_out.push_back(p.prob);
        }
        row.mean_out = sum / static_cast<double>(n_per_condition);
        row.std_out = std::sqrt(std::max(0.0, sum2 / static_cast<double>(n_per_condition) - row.mean_out * row.mean_out));
        report.rows.push_back(std::move(row));
    }
    report.pearson_r = pearson(all_in, all_out);
    return report;
}

EditTrajectory edit_uncertainty(const GenerateFn& gen, const ClassifyFn& classify, int num_classes, const Tensor& z,
                                int label, const std::vector<double>& m_sequence) {
    if (m_sequence.empty()) throw std::invalid_argument("edit_uncertainty: empty sequence");
    for (double m : m_sequence) gan::validate_msp_condition(m, num_classes);
    for (size_t i = 1; i < m_sequence.size(); ++i)
        if (!(m_sequence[i] < m_sequence[i - 1]))
            throw std::invalid_argument("edit_uncertainty: sequence must be strictly descending");

    EditTrajectory traj;
    traj.z = z;
    traj.label = label;
    traj.m_in = m_sequence;
    for (double m : m_sequence) {
        Tensor x = gen(z, label, m);
        traj.m_out.push_back(classify_msp(classify, x).prob);
        traj.outputs.push_back(std::move(x));
    }
    if (m_sequence.size() == 1) {
        traj.monotonicity_score = 1.0;
    } else {
        int64_t good = 0;
        for (size_t i = 0; i + 1 < traj.m_out.size(); ++i)
            if (traj.m_out[i + 1] <= traj.m_out[i] + 0.02) ++good;
        traj.monotonicity_score = static_cast<double>(good) / static_cast<double>(traj.m_out.size() - 1);
    }
    return traj;
}

std::pair<double, double> spatial_agreement(const data::LabeledDataset& real, const ClassifyFn& classify,
                                            const std::vector<std::pair<double, double>>& generated_low,
                                            const std::vector<std::pair<double, double>>& generated_high, double tau,
                                            const GridSpec& grid) {
    if (real.feature_shape != std::vector<int64_t>{2})
        throw std::invalid_argument("spatial_agreement: needs a 2D dataset");
    if (!(tau > 1.0 / static_cast<double>(real.num_classes) && tau < 1.0))
        throw std::invalid_argument("spatial_agreement: tau outside (1/K, 1)");

    const int64_t cells = grid.nx * grid.ny;
    std::vector<int64_t> count(static_cast<size_t>(cells), 0);
    std::vector<double> msp_sum(static_cast<size_t>(cells), 0.0);

    auto cell_of = [&grid](double x, double y) -> int64_t {
        if (x < grid.x0 || x >= grid.x1 || y < grid.y0 || y >= grid.y1) return -1;
        const int64_t cx = static_cast<int64_t>((x - grid.x0) / (grid.x1 - grid.x0) * static_cast<double>(grid.nx));
        const int64_t cy = static_cast<int64_t>((y - grid.y0) / (grid.y1 - grid.y0) * static_cast<double>(grid.ny));
        return std::min(cy, grid.ny - 1) * grid.nx + std::min(cx, grid.nx - 1);
    };

    for (size_t i = 0; i < real.size(); ++i) {
        auto v = real.item(i);
        const int64_t c = cell_of(v[0], v[1]);
        if (c < 0) continue;
        count[static_cast<size_t>(c)] += 1;
        msp_sum[static_cast<size_t>(c)] += classify_msp(classify, real.item_tensor(i)).prob;
    }

    std::vector<char> uncertain(static_cast<size_t>(cells), 0);
    int64_t u_cells = 0;
    for (int64_t c = 0; c < cells; ++c) {
        if (count[static_cast<size_t>(c)] >= 5 &&
            msp_sum[static_cast<size_t>(c)] / static_cast<double>(count[static_cast<size_t>(c)]) < tau) {
            uncertain[static_cast<size_t>(c)] = 1;
            ++u_cells;
        }
    }
    if (u_cells == 0) throw std::invalid_argument("spatial_agreement: no uncertain cells (tau too low)");

    auto score = [&](const std::vector<std::pair<double, double>>& pts) {
        if (pts.empty()) return 0.0;
        int64_t in = 0;
        for (const auto& p : pts) {
            const int64_t c = cell_of(p.first, p.second);
            if (c >= 0 && uncertain[static_cast<size_t>(c)]) ++in;
        }
        return static_cast<double>(in) / static_cast<double>(pts.size());
    };
    return {score(generated_low), score(generated_high)};
}

GridResult generate_grid(const GenerateFn& gen, const ClassifyFn& classify, int num_classes, int64_t latent_dim,
                         double m, const std::vector<int>& labels, int64_t n_per_label, uint64_t seed) {
    gan::validate_msp_condition(m, num_classes);
    if (labels.empty() || n_per_label < 1) throw std::invalid_argument("generate_grid: empty grid requested");
    GridResult out;
    out.m = m;
    out.n_per_label = n_per_label;
    for (size_t li = 0; li < labels.size(); ++li) {
        for (int64_t j = 0; j < n_per_label; ++j) {
            Rng rng(derive_seed(seed, "grid/" + std::to_string(li) + "/" + std::to_string(j)));
            Tensor x = gen(draw_latent(latent_dim, rng), labels[li], m);
            const Pred p = classify_msp(classify, x);
            out.samples.push_back(std::move(x));
            out.labels.push_back(labels[li]);
            out.preds.push_back(p.arg);
            out.probs.push_back(p.prob);
        }
    }
    return out;
}

}  // namespace ucgan::eval
