#include "ucgan/gan.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "ucgan/tape.hpp"

namespace ucgan::gan {

namespace {

using ad::Tape;
using ad::Var;

Tensor onehot_rows(const std::vector<int>& labels, int num_classes) {
    Tensor t = Tensor::zeros({static_cast<int64_t>(labels.size()), num_classes});
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes)
            throw std::invalid_argument("conditioning: label " + std::to_string(labels[i]) + " outside [0," +
                                        std::to_string(num_classes) + ")");
        t.at2(static_cast<int64_t>(i), labels[i]) = 1.0f;
    }
    return t;
}

// tape-side (data | one-hot | msp) assembly; the data stays a Var so R1 and
// generator gradients can flow through it while conditions stay constant
Var disc_input_var(Tape& t, Var x, const std::vector<int>& labels, const std::vector<float>& ms, int num_classes,
                   bool image_tier) {
    const int64_t n = t.val(x).shape[0];
    if (static_cast<int64_t>(labels.size()) != n || static_cast<int64_t>(ms.size()) != n)
        throw std::invalid_argument("conditioning: batch size mismatch");
    for (float m : ms) validate_msp_condition(m, num_classes);
    Tensor oh = onehot_rows(labels, num_classes);
    if (!image_tier) {
        Tensor mcol = Tensor::zeros({n, 1});
        for (int64_t i = 0; i < n; ++i) mcol.values[static_cast<size_t>(i)] = ms[static_cast<size_t>(i)];
        return t.concat({x, t.constant(std::move(oh)), t.constant(std::move(mcol))}, 1);
    }
    const Tensor& xv = t.val(x);
    if (xv.rank() != 4) throw std::invalid_argument("conditioning: image tier expects [N,C,H,W], got " + xv.shape_str());
    const int64_t h = xv.shape[2], w = xv.shape[3], hw = h * w;
    Tensor planes = Tensor::zeros({n, static_cast<int64_t>(num_classes) + 1, h, w});
    for (int64_t i = 0; i < n; ++i) {
        double* base = planes.values.data() + i * (num_classes + 1) * hw;
        for (int64_t p = 0; p < hw; ++p) base[labels[static_cast<size_t>(i)] * hw + p] = 1.0f;
        for (int64_t p = 0; p < hw; ++p) base[num_classes * hw + p] = ms[static_cast<size_t>(i)];
    }
    return t.concat({x, t.constant(std::move(planes))}, 1);
}

Tensor draw_latents(int64_t n, int64_t latent_dim, Rng& rng) {
    Tensor z = Tensor::zeros({n, latent_dim});
    for (double& v : z.values) v = rng.normal();
    return z;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

void validate_msp_condition(double m, int num_classes) {
    const double floor = 1.0 / static_cast<double>(num_classes);
    if (!(m > floor - 1e-9) || !(m <= 1.0 + 1e-9))
        throw std::invalid_argument("msp condition " + std::to_string(m) + " outside (1/" + std::to_string(num_classes) +
                                    ", 1]");
}

Tensor assemble_generator_input(const Tensor& z, int label, double m, int num_classes) {
    if (z.rank() != 1) throw std::invalid_argument("generator input: z must be rank 1, got " + z.shape_str());
    Tensor batch = assemble_generator_input_batch(Tensor::from({1, z.shape[0]}, z.values), {label},
                                                  {static_cast<float>(m)}, num_classes);
    return Tensor::from({batch.shape[1]}, batch.values);
}

Tensor assemble_generator_input_batch(const Tensor& z, const std::vector<int>& labels, const std::vector<float>& ms,
                                      int num_classes) {
    if (z.rank() != 2) throw std::invalid_argument("generator input: z batch must be rank 2, got " + z.shape_str());
    const int64_t n = z.shape[0], latent = z.shape[1];
    if (static_cast<int64_t>(labels.size()) != n || static_cast<int64_t>(ms.size()) != n)
        throw std::invalid_argument("generator input: batch size mismatch");
    for (float m : ms) validate_msp_condition(m, num_classes);
    Tensor oh = onehot_rows(labels, num_classes);
    Tensor out = Tensor::zeros({n, latent + num_classes + 1});
    for (int64_t i = 0; i < n; ++i) {
        double* row = out.values.data() + i * (latent + num_classes + 1);
        std::memcpy(row, z.values.data() + i * latent, sizeof(double) * static_cast<size_t>(latent));
        std::memcpy(row + latent, oh.values.data() + i * num_classes, sizeof(double) * static_cast<size_t>(num_classes));
        row[latent + num_classes] = ms[static_cast<size_t>(i)];
    }
    return out;
}

Tensor assemble_discriminator_input_batch(const Tensor& x, const std::vector<int>& labels, const std::vector<float>& ms,
                                          int num_classes) {
    Tape t;
    Var v = disc_input_var(t, t.constant(x), labels, ms, num_classes, x.rank() == 4);
    return t.val(v);
}

std::vector<clf::MspPool::Entry> sample_conditions(const clf::MspPool& pool, int64_t batch_size, Rng& rng) {
    if (pool.entries.empty()) throw std::invalid_argument("sample_conditions: empty pool");
    std::vector<clf::MspPool::Entry> out;
    out.reserve(static_cast<size_t>(batch_size));
    for (int64_t i = 0; i < batch_size; ++i)
        out.push_back(pool.entries[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(pool.entries.size())))]);
    return out;
}

GeneratorModel make_generator(const std::vector<int64_t>& feature_shape, int num_classes, int64_t latent_dim, Rng& rng) {
    using nn::Act;
    using nn::LayerSpec;
    GeneratorModel g;
    g.latent_dim = latent_dim;
    g.num_classes = num_classes;
    g.out_shape = feature_shape;
    const int64_t in = latent_dim + num_classes + 1;
    std::vector<LayerSpec> arch;
    if (feature_shape.size() == 1) {
        arch.push_back(LayerSpec::dense(in, 64, Act::Relu));
        arch.push_back(LayerSpec::dense(64, 64, Act::Relu));
        arch.push_back(LayerSpec::dense(64, 64, Act::Relu));
        arch.push_back(LayerSpec::dense(64, 64, Act::Relu));
        arch.push_back(LayerSpec::dense(64, feature_shape[0], Act::None));
        g.image_output = false;
    } else if (feature_shape.size() == 2 && feature_shape[0] % 4 == 0 && feature_shape[1] % 4 == 0) {
        const int64_t h0 = feature_shape[0] / 4, w0 = feature_shape[1] / 4;
        arch.push_back(LayerSpec::dense(in, 64 * h0 * w0, Act::Relu));
        arch.push_back(LayerSpec::reshape({64, h0, w0}));
        arch.push_back(LayerSpec::upsample2x());
        arch.push_back(LayerSpec::conv(64, 32, 3, 1, 1, Act::Relu));
        arch.push_back(LayerSpec::upsample2x());
        arch.push_back(LayerSpec::conv(32, 16, 3, 1, 1, Act::Relu));
        arch.push_back(LayerSpec::conv(16, 1, 3, 1, 1, Act::Sigmoid));
        g.image_output = true;
    } else {
        throw std::invalid_argument("make_generator: unsupported feature shape " + Tensor::shape_str(feature_shape));
    }
    g.net = nn::Network::build(std::move(arch), rng);
    return g;
}

DiscriminatorModel make_discriminator(const std::vector<int64_t>& feature_shape, int num_classes, Rng& rng) {
    using nn::Act;
    using nn::LayerSpec;
    DiscriminatorModel d;
    d.num_classes = num_classes;
    std::vector<LayerSpec> arch;
    if (feature_shape.size() == 1) {
        const int64_t in = feature_shape[0] + num_classes + 1;
        arch.push_back(LayerSpec::dense(in, 64, Act::LeakyRelu));
        arch.push_back(LayerSpec::dense(64, 64, Act::LeakyRelu));
        arch.push_back(LayerSpec::dense(64, 1, Act::None));
        d.image_input = false;
    } else if (feature_shape.size() == 2) {
        const int64_t in_ch = 1 + num_classes + 1;
        const int64_t h1 = (feature_shape[0] + 2 - 3) / 2 + 1, w1 = (feature_shape[1] + 2 - 3) / 2 + 1;
        const int64_t h2 = (h1 + 2 - 3) / 2 + 1, w2 = (w1 + 2 - 3) / 2 + 1;
        arch.push_back(LayerSpec::conv(in_ch, 16, 3, 2, 1, Act::LeakyRelu));
        arch.push_back(LayerSpec::conv(16, 32, 3, 2, 1, Act::LeakyRelu));
        arch.push_back(LayerSpec::reshape({32 * h2 * w2}));
        arch.push_back(LayerSpec::dense(32 * h2 * w2, 128, Act::LeakyRelu));
        arch.push_back(LayerSpec::dense(128, 1, Act::None));
        d.image_input = true;
    } else {
        throw std::invalid_argument("make_discriminator: unsupported feature shape");
    }
    d.net = nn::Network::build(std::move(arch), rng);
    return d;
}

Tensor generate_batch(const GeneratorModel& g, const Tensor& z, const std::vector<int>& labels,
                      const std::vector<float>& ms) {
    return g.net.infer(assemble_generator_input_batch(z, labels, ms, g.num_classes));
}

double r1_penalty(const DiscriminatorModel& d, const ConditionedBatch& real, double gamma) {
    if (real.provenance != ConditionedBatch::Provenance::Real)
        throw std::invalid_argument("r1_penalty: only defined on real batches");
    if (gamma == 0.0) return 0.0;
    const int64_t n = real.data.shape[0];
    Tape t;
    Var x = t.leaf(real.data, true);
    Var din = disc_input_var(t, x, real.labels, real.msp_conditions, d.num_classes, d.image_input);
    Var logits = d.net.forward(t, din, false);
    Var gx = t.grad_of(t.sum_all(logits), x);
    Var pen = t.affine(t.sum_all(t.mul(gx, gx)), static_cast<float>(gamma / 2.0 / static_cast<double>(n)), 0.0f);
    return static_cast<double>(t.val(pen).values[0]);
}

GanTrainResult train_gan(const data::LabeledDataset& dataset, const clf::ClassifierModel& classifier,
                         const clf::MspPool& pool, const GanConfig& cfg, const SnapshotFn& snapshot,
                         int64_t snapshot_interval, const TrainState* resume, const GeneratorModel* resume_g,
                         const DiscriminatorModel* resume_d) {
    if (!classifier.frozen) throw std::invalid_argument("train_gan: classifier must be frozen");
    if (pool.classifier_fingerprint != classifier.fingerprint)
        throw std::invalid_argument("train_gan: pool fingerprint " + pool.classifier_fingerprint +
                                    " does not match classifier " + classifier.fingerprint);
    if (pool.entries.size() != dataset.size())
        throw std::invalid_argument("train_gan: pool is not aligned with the dataset");
    const int64_t n = static_cast<int64_t>(dataset.size());
    if (n < cfg.batch) throw std::invalid_argument("train_gan: dataset smaller than one batch");
    if ((resume != nullptr) != (resume_g != nullptr) || (resume != nullptr) != (resume_d != nullptr))
        throw std::invalid_argument("train_gan: resume requires state and both snapshotted models");
    const std::string frozen_fp = clf::param_fingerprint(classifier.net);

    Rng init_rng(derive_seed(cfg.seed, "gan/init"));
    GeneratorModel g = make_generator(dataset.feature_shape, dataset.num_classes, cfg.latent_dim, init_rng);
    DiscriminatorModel d = make_discriminator(dataset.feature_shape, dataset.num_classes, init_rng);

    TrainState st;
    if (resume) {
        st = *resume;
        g = *resume_g;
        d = *resume_d;
    } else {
        st.adam_g = AdamState::make(g.net.param_count(), {cfg.lr_g, cfg.beta1, cfg.beta2, 1e-8f});
        st.adam_d = AdamState::make(d.net.param_count(), {cfg.lr_d, cfg.beta1, cfg.beta2, 1e-8f});
        st.rng_shuffle = Rng(derive_seed(cfg.seed, "gan/shuffle")).save_state();
        st.rng_z = Rng(derive_seed(cfg.seed, "gan/z")).save_state();
        st.rng_cond = Rng(derive_seed(cfg.seed, "gan/cond")).save_state();
        st.order.resize(static_cast<size_t>(n));
        std::iota(st.order.begin(), st.order.end(), 0);
        st.cursor = n;  // force initial shuffle
    }
    Rng rng_shuffle(0), rng_z(0), rng_cond(0);
    rng_shuffle.load_state(st.rng_shuffle);
    rng_z.load_state(st.rng_z);
    rng_cond.load_state(st.rng_cond);

    const int K = dataset.num_classes;
    GanTrainResult result;
    result.history.reserve(static_cast<size_t>(cfg.steps / std::max<int64_t>(1, cfg.log_interval) + 1));

    auto next_real_batch = [&](std::vector<int64_t>& idx) {
        if (st.cursor + cfg.batch > n) {
            rng_shuffle.shuffle(st.order);
            st.cursor = 0;
        }
        idx.assign(st.order.begin() + st.cursor, st.order.begin() + st.cursor + cfg.batch);
        st.cursor += cfg.batch;
    };

    std::vector<int64_t> idx;
    for (int64_t step = st.step; step < cfg.steps; ++step) {
        // ---- discriminator update ----
        next_real_batch(idx);
        ConditionedBatch real;
        real.provenance = ConditionedBatch::Provenance::Real;
        real.data = clf::gather_batch(dataset, idx);
        real.labels.resize(static_cast<size_t>(cfg.batch));
        real.msp_conditions.resize(static_cast<size_t>(cfg.batch));
        for (int64_t i = 0; i < cfg.batch; ++i) {
            const auto& e = pool.entries[static_cast<size_t>(idx[static_cast<size_t>(i)])];
            real.labels[static_cast<size_t>(i)] = e.label;
            real.msp_conditions[static_cast<size_t>(i)] = e.msp;
        }

        std::vector<clf::MspPool::Entry> fake_conds = sample_conditions(pool, cfg.batch, rng_cond);
        std::vector<int> fake_labels(static_cast<size_t>(cfg.batch));
        std::vector<float> fake_ms(static_cast<size_t>(cfg.batch));
        for (int64_t i = 0; i < cfg.batch; ++i) {
            fake_labels[static_cast<size_t>(i)] = fake_conds[static_cast<size_t>(i)].label;
            fake_ms[static_cast<size_t>(i)] = fake_conds[static_cast<size_t>(i)].msp;
        }
        Tensor z_d = draw_latents(cfg.batch, cfg.latent_dim, rng_z);
        Tensor g_in_d = assemble_generator_input_batch(z_d, fake_labels, fake_ms, K);

        const bool r1_now = cfg.r1_gamma > 0.0f && cfg.r1_interval > 0 && step % cfg.r1_interval == 0;
        double r1_value = 0.0;
        double d_loss_val, d_real_mean, d_fake_mean;
        {
            Tape t;
            Var x_fake = g.net.forward(t, t.constant(g_in_d), false);
            Var x_real = t.leaf(real.data, r1_now);
            std::vector<Var> dvars;
            Var din_real = disc_input_var(t, x_real, real.labels, real.msp_conditions, K, d.image_input);
            Var real_logits = d.net.forward(t, din_real, true, &dvars);
            Var din_fake = disc_input_var(t, x_fake, fake_labels, fake_ms, K, d.image_input);
            Var fake_logits = d.net.forward_with(t, din_fake, dvars);

            Var d_loss = t.add(t.mean_all(t.softplus(t.neg(real_logits))), t.mean_all(t.softplus(fake_logits)));
            Var total = d_loss;
            if (r1_now) {
                Var gx = t.grad_of(t.sum_all(real_logits), x_real);
                Var pen = t.affine(t.sum_all(t.mul(gx, gx)),
                                   cfg.r1_gamma / 2.0f / static_cast<float>(cfg.batch), 0.0f);
                r1_value = static_cast<double>(t.val(pen).values[0]);
                // lazy regularization: applied every r1_interval steps, scaled up to compensate
                total = t.add(d_loss, t.affine(pen, static_cast<float>(cfg.r1_interval), 0.0f));
            }
            d_loss_val = static_cast<double>(t.val(d_loss).values[0]);
            d_real_mean = mean_of(t.val(real_logits).values);
            d_fake_mean = mean_of(t.val(fake_logits).values);
            if (!std::isfinite(d_loss_val) || !std::isfinite(r1_value))
                throw std::runtime_error("train_gan: non-finite discriminator loss at step " + std::to_string(step));
            t.backward(total);
            std::vector<std::vector<double>> grads;
            grads.reserve(dvars.size());
            for (Var pv : dvars) grads.push_back(t.grad(pv));
            adam_step(d.net.params, grads, st.adam_d);
        }

        // ---- generator update ----
        std::vector<clf::MspPool::Entry> g_conds = sample_conditions(pool, cfg.batch, rng_cond);
        std::vector<int> g_labels(static_cast<size_t>(cfg.batch));
        std::vector<float> g_ms(static_cast<size_t>(cfg.batch));
        for (int64_t i = 0; i < cfg.batch; ++i) {
            g_labels[static_cast<size_t>(i)] = g_conds[static_cast<size_t>(i)].label;
            g_ms[static_cast<size_t>(i)] = g_conds[static_cast<size_t>(i)].msp;
        }
        Tensor z_g = draw_latents(cfg.batch, cfg.latent_dim, rng_z);
        Tensor g_in = assemble_generator_input_batch(z_g, g_labels, g_ms, K);

        double g_loss_val;
        {
            Tape t;
            std::vector<Var> gvars;
            Var x_fake = g.net.forward(t, t.constant(g_in), true, &gvars);
            Var din = disc_input_var(t, x_fake, g_labels, g_ms, K, d.image_input);
            Var fake_logits = d.net.forward(t, din, false);
            Var g_loss = t.mean_all(t.softplus(t.neg(fake_logits)));
            g_loss_val = static_cast<double>(t.val(g_loss).values[0]);
            if (!std::isfinite(g_loss_val))
                throw std::runtime_error("train_gan: non-finite generator loss at step " + std::to_string(step));
            t.backward(g_loss);
            std::vector<std::vector<double>> grads;
            grads.reserve(gvars.size());
            for (Var pv : gvars) grads.push_back(t.grad(pv));
            adam_step(g.net.params, grads, st.adam_g);
        }

        // ---- training-contract audit ----
        if (cfg.contract_interval > 0 && step % cfg.contract_interval == 0) {
            ++result.contract_checks;
            bool ok = clf::param_fingerprint(classifier.net) == frozen_fp;
            // fake-side passthrough: the m column inside the generator input
            // must be the conditioned value, bit for bit
            for (int64_t i = 0; ok && i < cfg.batch; ++i) {
                const float fed = static_cast<float>(g_in.at2(i, cfg.latent_dim + K));
                uint32_t a, b;
                std::memcpy(&a, &fed, 4);
                std::memcpy(&b, &g_ms[static_cast<size_t>(i)], 4);
                ok = a == b;
            }
            // real-side fidelity: the stored condition is what the frozen
            // classifier says about this exact data
            if (ok) {
                Tensor probs = clf::predict_probs_batch(classifier, real.data);
                for (int64_t i = 0; i < cfg.batch && ok; ++i) {
                    double mx = probs.at2(i, 0);
                    for (int64_t k = 1; k < probs.shape[1]; ++k) mx = std::max(mx, probs.at2(i, k));
                    ok = std::fabs(mx - static_cast<double>(real.msp_conditions[static_cast<size_t>(i)])) <= 1e-6;
                }
            }
            if (!ok) ++result.contract_violations;
        }

        if (cfg.log_interval > 0 && (step + 1) % cfg.log_interval == 0)
            result.history.push_back({step + 1, d_loss_val, g_loss_val, r1_value, d_real_mean, d_fake_mean});

        if (snapshot && snapshot_interval > 0 && (step + 1) % snapshot_interval == 0 && step + 1 < cfg.steps) {
            st.step = step + 1;
            st.rng_shuffle = rng_shuffle.save_state();
            st.rng_z = rng_z.save_state();
            st.rng_cond = rng_cond.save_state();
            snapshot(step + 1, g, d, st);
        }
    }

    result.g = std::move(g);
    result.d = std::move(d);
    return result;
}

}  // namespace ucgan::gan
