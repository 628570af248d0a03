#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "trajae/ae/loss.hpp"
#include "trajae/ae/model.hpp"
#include "trajae/error.hpp"

// Latent records: 16-byte header ("TAEL", version, seq_len, L as u32 LE)
// followed by L float32 latent values and 6 float32 rescale values
// (offset x3, scale x3), all little-endian.
namespace trajae::ae {

inline constexpr std::array<char, 4> latent_magic{'T', 'A', 'E', 'L'};
inline constexpr std::uint32_t latent_version = 1;

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v)
{
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_f32(std::ostream& os, double v)
{
    put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

inline bool get_u32(std::istream& is, std::uint32_t& v)
{
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        return false;
    v = std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 | std::uint32_t{b[2]} << 16 |
        std::uint32_t{b[3]} << 24;
    return true;
}

inline double get_f32(std::istream& is)
{
    std::uint32_t u = 0;
    if (!get_u32(is, u))
        fail(Errc::format, "truncated latent record");
    return static_cast<double>(std::bit_cast<float>(u));
}

} // namespace detail

inline void write_latent(std::ostream& os, const LatentCode& code)
{
    os.write(latent_magic.data(), 4);
    detail::put_u32(os, latent_version);
    detail::put_u32(os, static_cast<std::uint32_t>(code.seq_len));
    detail::put_u32(os, static_cast<std::uint32_t>(code.z.size()));
    for (double v : code.z)
        detail::put_f32(os, v);
    for (double v : code.params.offset)
        detail::put_f32(os, v);
    for (double v : code.params.scale)
        detail::put_f32(os, v);
}

/// Reads every record until end of stream. Ids are not stored; records are
/// numbered in file order.
inline std::vector<LatentCode> read_latents(std::istream& is)
{
    std::vector<LatentCode> out;
    for (;;) {
        std::array<char, 4> magic{};
        if (!is.read(magic.data(), 4)) {
            if (is.gcount() == 0)
                break;
            fail(Errc::format, "truncated latent header");
        }
        if (magic != latent_magic)
            fail(Errc::format, "bad latent record magic");
        std::uint32_t version = 0, seq_len = 0, dim = 0;
        if (!detail::get_u32(is, version) || !detail::get_u32(is, seq_len) ||
            !detail::get_u32(is, dim))
            fail(Errc::format, "truncated latent header");
        if (version != latent_version)
            fail(Errc::format, "unsupported latent version " + std::to_string(version));
        LatentCode code;
        code.seq_len = seq_len;
        code.id = std::to_string(out.size());
        code.z.resize(dim);
        for (auto& v : code.z)
            v = detail::get_f32(is);
        for (auto& v : code.params.offset)
            v = detail::get_f32(is);
        for (auto& v : code.params.scale)
            v = detail::get_f32(is);
        out.push_back(std::move(code));
    }
    return out;
}

inline void write_latents_file(const std::string& path, const std::vector<LatentCode>& codes)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        fail(Errc::io, "cannot write " + path);
    for (const auto& c : codes)
        write_latent(os, c);
    if (!os)
        fail(Errc::io, "write failed for " + path);
}

inline std::vector<LatentCode> read_latents_file(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        fail(Errc::io, "cannot read " + path);
    return read_latents(is);
}

// ---------------------------------------------------------------------------
// Model checkpoints (JSON, tensors as 64-bit doubles in visiting order)

struct CheckpointMeta {
    std::uint64_t seed = 0;
    LossKind loss_kind = LossKind::MSE;
    bool reverse_input = true;
};

inline nlohmann::json checkpoint_json(const ModelParams& m, const CheckpointMeta& meta)
{
    nlohmann::json j;
    j["format"] = "trajae-model";
    j["version"] = 1;
    j["mode"] = to_string(m.mode);
    j["seq_len"] = m.seq_len;
    j["latent_dim"] = m.latent_dim;
    j["decoder_hidden"] = m.decoder.n_out;
    j["seed"] = meta.seed;
    j["loss"] = to_string(meta.loss_kind);
    j["reverse_input"] = meta.reverse_input;
    auto tensors = nlohmann::json::array();
    m.for_each_tensor([&](const std::vector<double>& v) { tensors.push_back(v); });
    j["tensors"] = std::move(tensors);
    return j;
}

inline Mode mode_from_string(const std::string& s)
{
    if (s == "spatial3d")
        return Mode::Spatial3D;
    if (s == "geotemporal")
        return Mode::GeoTemporal;
    fail(Errc::config, "unknown dataset mode '" + s + "'");
}

inline ModelParams model_from_json(const nlohmann::json& j, CheckpointMeta* meta = nullptr)
{
    try {
        if (j.at("format") != "trajae-model" || j.at("version") != 1)
            fail(Errc::format, "not a version 1 model checkpoint");
        ArchSpec arch;
        arch.seq_len = j.at("seq_len").get<std::size_t>();
        arch.latent_dim = j.at("latent_dim").get<std::size_t>();
        arch.decoder_hidden = j.at("decoder_hidden").get<std::size_t>();
        arch.mode = mode_from_string(j.at("mode").get<std::string>());
        ModelParams m(arch);
        const auto& tensors = j.at("tensors");
        std::size_t k = 0;
        m.for_each_tensor([&](std::vector<double>& v) {
            if (k >= tensors.size() || tensors[k].size() != v.size())
                fail(Errc::format, "checkpoint tensor shapes do not match the architecture");
            v = tensors[k++].get<std::vector<double>>();
        });
        if (k != tensors.size())
            fail(Errc::format, "checkpoint has extra tensors");
        if (meta) {
            meta->seed = j.value("seed", std::uint64_t{0});
            meta->loss_kind = loss_kind_from_string(j.value("loss", std::string("mse")));
            meta->reverse_input = j.value("reverse_input", true);
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::format, std::string("malformed checkpoint: ") + e.what());
    }
}

inline void save_model(const std::string& path, const ModelParams& m, const CheckpointMeta& meta)
{
    std::ofstream os(path);
    if (!os)
        fail(Errc::io, "cannot write " + path);
    // max_digits10 keeps every double exact through the text round trip
    os << checkpoint_json(m, meta).dump() << '\n';
    if (!os)
        fail(Errc::io, "write failed for " + path);
}

inline ModelParams load_model(const std::string& path, CheckpointMeta* meta = nullptr)
{
    std::ifstream is(path);
    if (!is)
        fail(Errc::io, "cannot read " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::format, std::string("malformed checkpoint: ") + e.what());
    }
    return model_from_json(j, meta);
}

} // namespace trajae::ae
