#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "trajae/ae/lstm.hpp"
#include "trajae/error.hpp"
#include "trajae/rng.hpp"
#include "trajae/trajectory.hpp"

namespace trajae::ae {

/// Linear output head shared by every decoder step: y = W h + b, 3 outputs.
struct DenseParams {
    Matrix W; // 3 x n_hidden
    std::vector<double> b = std::vector<double>(3, 0.0);

    DenseParams() = default;
    explicit DenseParams(std::size_t n_hidden) : W(3, n_hidden) {}

    template <typename F>
    void for_each_tensor(F&& f)
    {
        f(W.data);
        f(b);
    }
    template <typename F>
    void for_each_tensor(F&& f) const
    {
        f(W.data);
        f(b);
    }

    friend bool operator==(const DenseParams&, const DenseParams&) = default;
};

struct ArchSpec {
    std::size_t seq_len = 20;
    std::size_t latent_dim = 9;
    std::size_t decoder_hidden = 100;
    Mode mode = Mode::Spatial3D;
};

/// Encoder LSTM (3 -> L), repeat-vector decoder LSTM (L -> hidden) and the
/// shared dense head (hidden -> 3).
struct ModelParams {
    LstmParams encoder;
    LstmParams decoder;
    DenseParams head;
    std::size_t seq_len = 0;
    std::size_t latent_dim = 0;
    Mode mode = Mode::Spatial3D;

    ModelParams() = default;
    explicit ModelParams(const ArchSpec& a)
        : encoder(3, a.latent_dim), decoder(a.latent_dim, a.decoder_hidden),
          head(a.decoder_hidden), seq_len(a.seq_len), latent_dim(a.latent_dim), mode(a.mode)
    {
        if (a.seq_len < 2)
            fail(Errc::config, "sequence length must be at least 2");
    }

    ArchSpec arch() const { return {seq_len, latent_dim, decoder.n_out, mode}; }

    /// Same shapes, all zeros.
    ModelParams zeros_like() const { return ModelParams(arch()); }

    std::size_t param_count() const noexcept
    {
        return encoder.param_count() + decoder.param_count() + head.W.data.size() + head.b.size();
    }

    /// Fixed visiting order: encoder, decoder, head.
    template <typename F>
    void for_each_tensor(F&& f)
    {
        encoder.for_each_tensor(f);
        decoder.for_each_tensor(f);
        head.for_each_tensor(f);
    }
    template <typename F>
    void for_each_tensor(F&& f) const
    {
        encoder.for_each_tensor(f);
        decoder.for_each_tensor(f);
        head.for_each_tensor(f);
    }

    std::vector<std::vector<double>*> tensors()
    {
        std::vector<std::vector<double>*> out;
        for_each_tensor([&](std::vector<double>& v) { out.push_back(&v); });
        return out;
    }
    std::vector<const std::vector<double>*> tensors() const
    {
        std::vector<const std::vector<double>*> out;
        for_each_tensor([&](const std::vector<double>& v) { out.push_back(&v); });
        return out;
    }

    void scale(double s)
    {
        for_each_tensor([s](std::vector<double>& v) {
            for (auto& x : v)
                x *= s;
        });
    }

    void add(const ModelParams& other)
    {
        auto dst = tensors();
        const auto src = other.tensors();
        for (std::size_t k = 0; k < dst.size(); ++k)
            for (std::size_t i = 0; i < dst[k]->size(); ++i)
                (*dst[k])[i] += (*src[k])[i];
    }

    void set_zero()
    {
        for_each_tensor([](std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.0); });
    }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

inline ModelParams init_params(const ArchSpec& arch, std::uint64_t seed)
{
    ModelParams m(arch);
    Rng rng(seed);
    m.encoder.init_uniform(rng);
    m.decoder.init_uniform(rng);
    const double lim = std::sqrt(6.0 / static_cast<double>(arch.decoder_hidden + 3));
    for (auto& v : m.head.W.data)
        v = rng.uniform(-lim, lim);
    return m;
}

/// Latent width for a target ratio: |T| * 3 / ratio - 6, which must be a
/// positive integer.
inline std::size_t latent_dim_for_ratio(std::size_t seq_len, double ratio)
{
    if (!(ratio > 0.0))
        fail(Errc::infeasible_ratio, "compression ratio must be positive");
    const double values = static_cast<double>(seq_len) * 3.0 / ratio;
    const double rounded = std::round(values);
    if (std::abs(values - rounded) > 1e-9 * std::max(1.0, values))
        fail(Errc::infeasible_ratio, "ratio does not give a whole number of compressed values");
    if (rounded - 6.0 < 1.0)
        fail(Errc::infeasible_ratio, "compressed size must exceed the 6 rescale values");
    return static_cast<std::size_t>(rounded) - 6;
}

/// Compressed form of one trajectory: the encoder output plus the six
/// rescale values.
struct LatentCode {
    std::vector<double> z;
    NormParams params;
    std::size_t seq_len = 0;
    std::string id;

    std::size_t value_count() const noexcept { return z.size() + NormParams::value_count; }
};

/// Encoder input rows in the order they are fed (reversed when requested).
inline std::vector<double> encoder_inputs(const NormalizedTrajectory& nt, bool reverse)
{
    std::vector<double> xs;
    xs.reserve(nt.size() * 3);
    for (std::size_t k = 0; k < nt.size(); ++k) {
        const auto& p = nt.points[reverse ? nt.size() - 1 - k : k];
        xs.insert(xs.end(), p.begin(), p.end());
    }
    return xs;
}

/// Final hidden state of the encoder run over the sequence.
inline std::vector<double> encode_latent(const ModelParams& m, const NormalizedTrajectory& nt,
                                         bool reverse, LstmTrace* trace = nullptr)
{
    if (nt.size() != m.seq_len)
        fail(Errc::dimension_mismatch, "sequence length differs from the model's");
    LstmTrace local;
    LstmTrace& tr = trace ? *trace : local;
    lstm_forward(m.encoder, encoder_inputs(nt, reverse), nt.size(), tr);
    const auto last = tr.h_at(nt.size() - 1);
    return {last.begin(), last.end()};
}

inline LatentCode encode(const ModelParams& m, const NormalizedTrajectory& nt, bool reverse = true)
{
    LatentCode code;
    code.z = encode_latent(m, nt, reverse);
    code.params = nt.params;
    code.seq_len = nt.size();
    code.id = nt.id;
    return code;
}

/// Decoder over the repeated latent vector followed by the dense head.
/// Returns seq_len normalized triples (unclamped).
inline std::vector<Triple> decode_sequence(const ModelParams& m, const std::vector<double>& z,
                                           LstmTrace* trace = nullptr)
{
    if (z.size() != m.latent_dim)
        fail(Errc::dimension_mismatch, "latent vector has the wrong dimension");
    std::vector<double> xs;
    xs.reserve(m.seq_len * z.size());
    for (std::size_t t = 0; t < m.seq_len; ++t)
        xs.insert(xs.end(), z.begin(), z.end());
    LstmTrace local;
    LstmTrace& tr = trace ? *trace : local;
    lstm_forward(m.decoder, xs, m.seq_len, tr);

    const std::size_t hn = m.decoder.n_out;
    std::vector<Triple> out(m.seq_len);
    for (std::size_t t = 0; t < m.seq_len; ++t) {
        const auto h = tr.h_at(t);
        for (std::size_t d = 0; d < 3; ++d) {
            double y = m.head.b[d];
            const double* w = m.head.W.data.data() + d * hn;
            for (std::size_t k = 0; k < hn; ++k)
                y += w[k] * h[k];
            out[t][d] = y;
        }
    }
    return out;
}

inline NormalizedTrajectory decode(const ModelParams& m, const LatentCode& code)
{
    NormalizedTrajectory nt;
    nt.points = decode_sequence(m, code.z);
    nt.params = code.params;
    nt.mode = m.mode;
    nt.id = code.id;
    return nt;
}

inline LatentCode compress(const ModelParams& m, const Trajectory& t, bool reverse = true)
{
    if (t.size() != m.seq_len)
        fail(Errc::dimension_mismatch, "trajectory length " + std::to_string(t.size()) +
                                           " differs from the model's " + std::to_string(m.seq_len));
    return encode(m, normalize(t), reverse);
}

inline Trajectory reconstruct(const ModelParams& m, const LatentCode& code)
{
    return denormalize(decode(m, code));
}

} // namespace trajae::ae
