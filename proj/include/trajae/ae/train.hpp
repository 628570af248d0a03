#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <thread>
#include <vector>

#include "trajae/ae/loss.hpp"
#include "trajae/ae/lstm.hpp"
#include "trajae/ae/model.hpp"
#include "trajae/error.hpp"
#include "trajae/rng.hpp"
#include "trajae/trajectory.hpp"

namespace trajae::ae {

struct TrainConfig {
    std::size_t batch_size = 64;
    std::size_t epochs = 20;
    std::uint64_t seed = 1;
    LossKind loss_kind = LossKind::MSE;
    bool reverse_input = true;
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t threads = 1; // per-sample work within a mini-batch
    SpherePlanet planet{};

    void validate() const
    {
        if (batch_size < 1 || epochs < 1)
            fail(Errc::config, "batch_size and epochs must be at least 1");
        if (!(lr > 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) ||
            !(eps > 0.0))
            fail(Errc::config, "invalid Adam hyperparameters");
    }
};

/// Loss and parameter gradient for one sequence (not divided by batch size).
inline double sample_gradient(const ModelParams& m, const NormalizedTrajectory& sample,
                              LossKind kind, bool reverse, ModelParams& grad,
                              const SpherePlanet& planet = {})
{
    LstmTrace enc;
    LstmTrace dec;
    const std::vector<double> z = encode_latent(m, sample, reverse, &enc);
    const std::vector<Triple> pred = decode_sequence(m, z, &dec);
    std::vector<Triple> dy;
    const double value = sequence_loss(pred, sample.points, sample.params, kind, &dy, planet);

    // dense head, shared across steps
    const std::size_t T = m.seq_len;
    const std::size_t H = m.decoder.n_out;
    std::vector<double> dh(T * H, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        const auto h = dec.h_at(t);
        for (std::size_t d = 0; d < 3; ++d) {
            const double g = dy[t][d];
            grad.head.b[d] += g;
            double* gw = grad.head.W.data.data() + d * H;
            const double* w = m.head.W.data.data() + d * H;
            for (std::size_t k = 0; k < H; ++k) {
                gw[k] += g * h[k];
                dh[t * H + k] += w[k] * g;
            }
        }
    }

    // decoder; the latent vector feeds every step, so its gradient is the sum
    std::vector<double> dx;
    lstm_backward(m.decoder, dec, dh, grad.decoder, dx);
    const std::size_t L = m.latent_dim;
    std::vector<double> dz(L, 0.0);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t k = 0; k < L; ++k)
            dz[k] += dx[t * L + k];

    // encoder; only the final output is used
    std::vector<double> dh_enc(T * L, 0.0);
    std::copy(dz.begin(), dz.end(), dh_enc.begin() + static_cast<std::ptrdiff_t>((T - 1) * L));
    lstm_backward(m.encoder, enc, dh_enc, grad.encoder, dx);
    return value;
}

struct GradientResult {
    ModelParams grad;
    double loss = 0.0; // mean over the batch
};

/// Exact gradient of the mean batch loss. With threads > 1 the samples are
/// processed concurrently into private buffers and reduced in sample order,
/// so the result does not depend on the thread count.
inline GradientResult gradients(const ModelParams& m, std::span<const NormalizedTrajectory> batch,
                                LossKind kind, bool reverse = true, std::size_t threads = 1,
                                const SpherePlanet& planet = {})
{
    if (batch.empty())
        fail(Errc::empty_input, "gradient of an empty batch");
    GradientResult res{m.zeros_like(), 0.0};
    const std::size_t n = batch.size();
    threads = std::max<std::size_t>(1, std::min(threads, n));

    if (threads == 1) {
        // accumulate per sample so the summation order matches the threaded path
        ModelParams g = m.zeros_like();
        for (std::size_t s = 0; s < n; ++s) {
            g.set_zero();
            res.loss += sample_gradient(m, batch[s], kind, reverse, g, planet);
            res.grad.add(g);
        }
    } else {
        std::vector<ModelParams> per(n, m.zeros_like());
        std::vector<double> losses(n, 0.0);
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < threads; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t s = w; s < n; s += threads)
                    losses[s] = sample_gradient(m, batch[s], kind, reverse, per[s], planet);
            });
        for (auto& th : pool)
            th.join();
        for (std::size_t s = 0; s < n; ++s) {
            res.loss += losses[s];
            res.grad.add(per[s]);
        }
    }
    const double inv = 1.0 / static_cast<double>(n);
    res.grad.scale(inv);
    res.loss *= inv;
    return res;
}

/// Mean loss of a batch without gradients.
inline double batch_loss(const ModelParams& m, std::span<const NormalizedTrajectory> batch,
                         LossKind kind, bool reverse = true, const SpherePlanet& planet = {})
{
    double total = 0.0;
    for (const auto& s : batch) {
        const auto pred = decode_sequence(m, encode_latent(m, s, reverse));
        total += sequence_loss(pred, s.points, s.params, kind, nullptr, planet);
    }
    return total / static_cast<double>(batch.size());
}

struct AdamState {
    ModelParams m1; // first moment
    ModelParams m2; // second moment
    std::uint64_t t = 0;
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    AdamState() = default;
    explicit AdamState(const ModelParams& shape, double lr_ = 0.001, double b1 = 0.9,
                       double b2 = 0.999, double e = 1e-8)
        : m1(shape.zeros_like()), m2(shape.zeros_like()), lr(lr_), beta1(b1), beta2(b2), eps(e)
    {}
};

/// One bias-corrected Adam step, elementwise over every tensor.
inline void adam_update(AdamState& st, ModelParams& params, const ModelParams& grad)
{
    ++st.t;
    const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
    const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
    auto p = params.tensors();
    const auto g = grad.tensors();
    auto a = st.m1.tensors();
    auto b = st.m2.tensors();
    if (p.size() != g.size() || p.size() != a.size())
        fail(Errc::dimension_mismatch, "Adam state does not match the parameters");
    for (std::size_t k = 0; k < p.size(); ++k) {
        auto& pv = *p[k];
        const auto& gv = *g[k];
        auto& mv = *a[k];
        auto& vv = *b[k];
        if (pv.size() != gv.size())
            fail(Errc::dimension_mismatch, "gradient tensor has the wrong size");
        for (std::size_t i = 0; i < pv.size(); ++i) {
            mv[i] = st.beta1 * mv[i] + (1.0 - st.beta1) * gv[i];
            vv[i] = st.beta2 * vv[i] + (1.0 - st.beta2) * gv[i] * gv[i];
            const double mhat = mv[i] / c1;
            const double vhat = vv[i] / c2;
            pv[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
        }
    }
}

struct TrainResult {
    ModelParams params;
    std::vector<double> loss_history; // mean training loss per epoch
};

/// Seeded initialization, then per epoch a seeded shuffle into mini-batches
/// with one Adam step each. Each epoch's loss is the mean over its samples of
/// the loss seen in the forward pass.
inline TrainResult train(const std::vector<NormalizedTrajectory>& dataset, const TrainConfig& cfg,
                         const ArchSpec& arch)
{
    cfg.validate();
    if (dataset.empty())
        fail(Errc::empty_input, "training set is empty");
    for (const auto& s : dataset)
        if (s.size() != arch.seq_len)
            fail(Errc::dimension_mismatch, "training sequence length differs from the model's");
    if (cfg.loss_kind == LossKind::EquirectPlusTimeSq && arch.mode != Mode::GeoTemporal)
        fail(Errc::config, "equirectangular loss needs GeoTemporal data");

    Rng rng(cfg.seed);
    TrainResult res{init_params(arch, rng.next()), {}};
    AdamState adam(res.params, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<NormalizedTrajectory> batch;
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        rng.shuffle(order);
        double epoch_total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (std::size_t k = start; k < stop; ++k)
                batch.push_back(dataset[order[k]]);
            const auto g = gradients(res.params, batch, cfg.loss_kind, cfg.reverse_input,
                                     cfg.threads, cfg.planet);
            epoch_total += g.loss * static_cast<double>(batch.size());
            adam_update(adam, res.params, g.grad);
        }
        res.loss_history.push_back(epoch_total / static_cast<double>(dataset.size()));
    }
    return res;
}

} // namespace trajae::ae
