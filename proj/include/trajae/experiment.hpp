#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <numbers>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "trajae/ae/codec.hpp"
#include "trajae/ae/model.hpp"
#include "trajae/ae/train.hpp"
#include "trajae/error.hpp"
#include "trajae/io.hpp"
#include "trajae/metrics.hpp"
#include "trajae/preprocess.hpp"
#include "trajae/rng.hpp"
#include "trajae/simplify.hpp"
#include "trajae/trajectory.hpp"

/// Scenario grid, synthetic corpora, the AE-vs-simplification comparison
/// and report emission.
namespace trajae::experiment {

struct Scenario {
    Mode mode = Mode::Spatial3D;
    std::size_t seq_len = 20;
    double ratio = 4.0;
    std::string ratio_label = "4";
    std::size_t latent_dim = 9;
    std::size_t dp_points = 5;
    std::size_t compressed_values = 15;

    std::string name() const
    {
        return std::string(to_string(mode)) + "_" + std::to_string(seq_len) + "_" + ratio_label;
    }
    /// Ratio the simplification baseline actually targets.
    double dp_ratio() const { return static_cast<double>(seq_len) / static_cast<double>(dp_points); }
};

namespace detail {

struct GridRow {
    std::size_t seq_len;
    double ratio;
    const char* label;
    std::size_t latent;
    std::size_t dp_points;
    std::size_t compressed;
};

// Published scenario tables. The last row keeps 3 kept points although
// 12 compressed values would correspond to 4.
inline constexpr GridRow grid_rows[] = {
    {20, 2.0, "2", 24, 10, 30},       {20, 4.0, "4", 9, 5, 15},   {20, 20.0 / 3.0, "20/3", 3, 3, 9},
    {40, 2.0, "2", 54, 20, 60},       {40, 4.0, "4", 24, 10, 30}, {40, 8.0, "8", 9, 5, 15},
    {40, 10.0, "10", 6, 3, 12},
};

inline Scenario from_row(Mode mode, const GridRow& r)
{
    return {mode, r.seq_len, r.ratio, r.label, r.latent, r.dp_points, r.compressed};
}

} // namespace detail

/// Seven scenarios per dataset mode, Spatial3D first.
inline std::vector<Scenario> scenario_grid()
{
    std::vector<Scenario> out;
    for (Mode mode : {Mode::Spatial3D, Mode::GeoTemporal})
        for (const auto& r : detail::grid_rows)
            out.push_back(detail::from_row(mode, r));
    return out;
}

/// Accepts "4", "2.5" or "20/3".
inline double parse_ratio(const std::string& s)
{
    double num = 0.0;
    double den = 1.0;
    const auto slash = s.find('/');
    const bool ok = slash == std::string::npos
                        ? io::parse_double(s, num)
                        : io::parse_double(s.substr(0, slash), num) &&
                              io::parse_double(s.substr(slash + 1), den);
    if (!ok || !(den > 0.0) || !(num > 0.0))
        fail(Errc::config, "bad compression ratio '" + s + "'");
    return num / den;
}

/// Grid row when (seq_len, ratio) is one, otherwise derived from the ratio.
inline Scenario make_scenario(Mode mode, std::size_t seq_len, double ratio)
{
    for (const auto& r : detail::grid_rows)
        if (r.seq_len == seq_len && std::abs(r.ratio - ratio) < 1e-6 * r.ratio)
            return detail::from_row(mode, r);
    const std::size_t latent = ae::latent_dim_for_ratio(seq_len, ratio);
    const std::size_t values = latent + NormParams::value_count;
    if (values % 3 != 0 || values / 3 < 2 || values / 3 > seq_len)
        fail(Errc::infeasible_ratio, "ratio gives no whole kept-point count");
    char label[32];
    std::snprintf(label, sizeof label, "%g", ratio);
    return {mode, seq_len, ratio, label, latent, values / 3, values};
}

/// "<seq_len>:<ratio>"
inline Scenario parse_scenario(Mode mode, const std::string& spec)
{
    const auto colon = spec.find(':');
    double len = 0.0;
    if (colon == std::string::npos || !io::parse_double(spec.substr(0, colon), len) || len < 2 ||
        len != std::floor(len))
        fail(Errc::config, "scenario must look like <seq_len>:<ratio>, got '" + spec + "'");
    return make_scenario(mode, static_cast<std::size_t>(len), parse_ratio(spec.substr(colon + 1)));
}

// ---------------------------------------------------------------------------
// Synthetic corpora

enum class CorpusKind { Smooth3D, TaxiLike };

inline CorpusKind corpus_kind_from_string(const std::string& s)
{
    if (s == "smooth3d")
        return CorpusKind::Smooth3D;
    if (s == "taxi-like")
        return CorpusKind::TaxiLike;
    fail(Errc::config, "unknown corpus kind '" + s + "'");
}

struct CorpusOptions {
    std::size_t min_len = 40;
    std::size_t max_len = 120;
    // taxi-like only: per-vehicle probabilities of each injected defect
    double p_idle = 0.3;
    double p_gap = 0.3;
    double p_spike = 0.3;
    double p_out_of_bbox = 0.2;
    double p_time_glitch = 0.2;
};

/// Smooth random 3-D curves: a point moving with slowly varying
/// acceleration, one sample per unit time step.
inline std::vector<Trajectory> smooth3d_corpus(std::size_t n, std::uint64_t seed,
                                               const CorpusOptions& opt = {})
{
    if (n < 1 || opt.min_len < 2 || opt.max_len < opt.min_len)
        fail(Errc::config, "invalid corpus size or length range");
    Rng rng(seed);
    std::vector<Trajectory> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t len = opt.min_len + rng.below(opt.max_len - opt.min_len + 1);
        std::array<double, 3> pos{}, vel{}, acc{};
        for (std::size_t d = 0; d < 3; ++d) {
            pos[d] = rng.uniform(-1000.0, 1000.0);
            vel[d] = rng.normal() * 6.0;
        }
        std::vector<TrajPoint> pts;
        pts.reserve(len);
        for (std::size_t i = 0; i < len; ++i) {
            pts.emplace_back(pos[0], pos[1], pos[2]);
            for (std::size_t d = 0; d < 3; ++d) {
                acc[d] = 0.85 * acc[d] + 0.6 * rng.normal();
                vel[d] = 0.98 * vel[d] + acc[d];
                pos[d] += vel[d];
            }
        }
        out.emplace_back(Mode::Spatial3D, std::move(pts), "s" + std::to_string(k));
    }
    return out;
}

/// Raw taxi-style fixes: random-waypoint drives around central Beijing with
/// metre-scale GPS jitter and irregular 5..60 s sampling. Vehicles randomly
/// receive an idle block (15 stationary fixes), a 3-hour gap, a position
/// spike of more than 60 m/s, a fix outside the bounding box and a repeated timestamp.
inline std::vector<preprocess::RawFix> synthetic_taxi_log(std::size_t vehicles, std::uint64_t seed,
                                                          const CorpusOptions& opt = {})
{
    if (vehicles < 1 || opt.min_len < 2 || opt.max_len < opt.min_len)
        fail(Errc::config, "invalid corpus size or length range");
    constexpr double m_per_deg_lat = 111194.93;
    Rng rng(seed);
    std::vector<preprocess::RawFix> out;
    for (std::size_t v = 0; v < vehicles; ++v) {
        const std::string id = "taxi" + std::to_string(v);
        const std::size_t len = opt.min_len + rng.below(opt.max_len - opt.min_len + 1);
        double lat = rng.uniform(39.80, 40.00);
        double lon = rng.uniform(116.25, 116.55);
        double t = 1201900000.0 + std::floor(rng.uniform(0.0, 86400.0));
        double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
        double speed = rng.uniform(6.0, 14.0);

        const bool idle = rng.uniform() < opt.p_idle;
        const bool gap = rng.uniform() < opt.p_gap;
        const bool spike = rng.uniform() < opt.p_spike;
        const bool outside = rng.uniform() < opt.p_out_of_bbox;
        const bool glitch = rng.uniform() < opt.p_time_glitch;
        const std::size_t idle_at = len / 4;
        const std::size_t gap_at = len / 2;
        const std::size_t spike_at = (3 * len) / 4;
        const std::size_t outside_at = len / 3;
        const std::size_t glitch_at = (2 * len) / 3;

        std::vector<preprocess::RawFix> fixes;
        auto emit = [&](double tt, double la, double lo) {
            const double jn = rng.normal() * 3.0;
            const double je = rng.normal() * 3.0;
            const double coslat = std::cos(la * std::numbers::pi / 180.0);
            fixes.push_back({id, tt, lo + je / (m_per_deg_lat * coslat), la + jn / m_per_deg_lat});
        };
        for (std::size_t i = 0; i < len; ++i) {
            if (idle && i == idle_at) {
                for (int k = 0; k < 15; ++k) {
                    t += 30.0;
                    const double coslat = std::cos(lat * std::numbers::pi / 180.0);
                    fixes.push_back({id, t, lon + rng.normal() * 1.0 / (m_per_deg_lat * coslat),
                                     lat + rng.normal() * 1.0 / m_per_deg_lat});
                }
            }
            if (gap && i == gap_at)
                t += 3.0 * 3600.0;
            const double dt = std::floor(rng.uniform(5.0, 60.0));
            t += dt;
            heading += rng.normal() * 0.3;
            speed = std::clamp(speed + rng.normal() * 1.0, 3.0, 20.0);
            const double coslat = std::cos(lat * std::numbers::pi / 180.0);
            lat += speed * dt * std::cos(heading) / m_per_deg_lat;
            lon += speed * dt * std::sin(heading) / (m_per_deg_lat * coslat);
            if (spike && i == spike_at) {
                // 5 km off the path: reaching it and leaving it both need
                // more than 60 m/s at the longest 60 s sampling interval
                const double off = 5000.0;
                fixes.push_back({id, t, lon, lat + off / m_per_deg_lat});
                continue;
            }
            if (outside && i == outside_at) {
                fixes.push_back({id, t, 118.5, 39.9});
                continue;
            }
            if (glitch && i == glitch_at && !fixes.empty()) {
                fixes.push_back({id, fixes.back().t, lon, lat});
                continue;
            }
            emit(t, lat, lon);
        }
        out.insert(out.end(), fixes.begin(), fixes.end());
    }
    return out;
}

/// smooth3d: Spatial3D curves. taxi-like: the synthetic taxi log after the
/// standard preprocessing pipeline, as GeoTemporal trajectories.
inline std::vector<Trajectory> synthetic_corpus(CorpusKind kind, std::size_t n, std::uint64_t seed,
                                                const CorpusOptions& opt = {},
                                                const preprocess::PreprocessConfig& pre = {})
{
    if (kind == CorpusKind::Smooth3D)
        return smooth3d_corpus(n, seed, opt);
    return preprocess::preprocess_log(synthetic_taxi_log(n, seed, opt), pre).trajectories;
}

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentConfig {
    std::uint64_t seed = 7;
    std::size_t corpus_size = 80;   // generated trajectories (vehicles for taxi-like)
    CorpusOptions corpus;
    double train_fraction = 0.8;
    std::size_t max_test = 0;       // 0 keeps every test chunk
    ae::TrainConfig train;          // seed is derived per scenario
    std::size_t decoder_hidden = 100;
    bool include_dtw_i = false;
    std::size_t threads = 1;
    double ratio_tolerance = 0.05;
    preprocess::PreprocessConfig preprocess;

    ExperimentConfig() { train.epochs = 20; }
};

inline nlohmann::json to_json(const ExperimentConfig& c)
{
    nlohmann::json j;
    j["seed"] = c.seed;
    j["corpus_size"] = c.corpus_size;
    j["corpus"] = {{"min_len", c.corpus.min_len},       {"max_len", c.corpus.max_len},
                   {"p_idle", c.corpus.p_idle},         {"p_gap", c.corpus.p_gap},
                   {"p_spike", c.corpus.p_spike},       {"p_out_of_bbox", c.corpus.p_out_of_bbox},
                   {"p_time_glitch", c.corpus.p_time_glitch}};
    j["train_fraction"] = c.train_fraction;
    j["max_test"] = c.max_test;
    j["train"] = {{"batch_size", c.train.batch_size}, {"epochs", c.train.epochs},
                  {"loss", ae::to_string(c.train.loss_kind)},
                  {"reverse_input", c.train.reverse_input}, {"lr", c.train.lr},
                  {"beta1", c.train.beta1}, {"beta2", c.train.beta2}, {"eps", c.train.eps}};
    j["decoder_hidden"] = c.decoder_hidden;
    j["include_dtw_i"] = c.include_dtw_i;
    j["threads"] = c.threads;
    j["ratio_tolerance"] = c.ratio_tolerance;
    const auto& p = c.preprocess;
    j["preprocess"] = {{"lat_min", p.bbox.lat_min},   {"lat_max", p.bbox.lat_max},
                       {"lon_min", p.bbox.lon_min},   {"lon_max", p.bbox.lon_max},
                       {"max_gap", p.max_gap},        {"idle_speed", p.idle_speed},
                       {"idle_run", p.idle_run},      {"max_speed", p.max_speed},
                       {"min_traj_len", p.min_traj_len}};
    return j;
}

/// Overlays the keys present in `j` onto `c`; unknown keys are errors.
inline void apply_json(ExperimentConfig& c, const nlohmann::json& j)
{
    auto check_keys = [](const nlohmann::json& obj, std::initializer_list<const char*> keys,
                         const std::string& where) {
        if (!obj.is_object())
            fail(Errc::config, where + " must be an object");
        for (const auto& [k, v] : obj.items())
            if (std::find_if(keys.begin(), keys.end(), [&](const char* s) { return k == s; }) ==
                keys.end())
                fail(Errc::config, "unknown config key '" + where + k + "'");
    };
    try {
        check_keys(j,
                   {"seed", "corpus_size", "corpus", "train_fraction", "max_test", "train",
                    "decoder_hidden", "include_dtw_i", "threads", "ratio_tolerance", "preprocess"},
                   "");
        auto get = [](const nlohmann::json& o, const char* k, auto& dst) {
            if (o.contains(k))
                dst = o.at(k).get<std::remove_reference_t<decltype(dst)>>();
        };
        get(j, "seed", c.seed);
        get(j, "corpus_size", c.corpus_size);
        get(j, "train_fraction", c.train_fraction);
        get(j, "max_test", c.max_test);
        get(j, "decoder_hidden", c.decoder_hidden);
        get(j, "include_dtw_i", c.include_dtw_i);
        get(j, "threads", c.threads);
        get(j, "ratio_tolerance", c.ratio_tolerance);
        if (j.contains("corpus")) {
            const auto& o = j["corpus"];
            check_keys(o, {"min_len", "max_len", "p_idle", "p_gap", "p_spike", "p_out_of_bbox",
                           "p_time_glitch"},
                       "corpus.");
            get(o, "min_len", c.corpus.min_len);
            get(o, "max_len", c.corpus.max_len);
            get(o, "p_idle", c.corpus.p_idle);
            get(o, "p_gap", c.corpus.p_gap);
            get(o, "p_spike", c.corpus.p_spike);
            get(o, "p_out_of_bbox", c.corpus.p_out_of_bbox);
            get(o, "p_time_glitch", c.corpus.p_time_glitch);
        }
        if (j.contains("train")) {
            const auto& o = j["train"];
            check_keys(o, {"batch_size", "epochs", "loss", "reverse_input", "lr", "beta1", "beta2",
                           "eps"},
                       "train.");
            get(o, "batch_size", c.train.batch_size);
            get(o, "epochs", c.train.epochs);
            get(o, "reverse_input", c.train.reverse_input);
            get(o, "lr", c.train.lr);
            get(o, "beta1", c.train.beta1);
            get(o, "beta2", c.train.beta2);
            get(o, "eps", c.train.eps);
            if (o.contains("loss"))
                c.train.loss_kind = ae::loss_kind_from_string(o["loss"].get<std::string>());
        }
        if (j.contains("preprocess")) {
            const auto& o = j["preprocess"];
            auto& p = c.preprocess;
            check_keys(o, {"lat_min", "lat_max", "lon_min", "lon_max", "max_gap", "idle_speed",
                           "idle_run", "max_speed", "min_traj_len"},
                       "preprocess.");
            get(o, "lat_min", p.bbox.lat_min);
            get(o, "lat_max", p.bbox.lat_max);
            get(o, "lon_min", p.bbox.lon_min);
            get(o, "lon_max", p.bbox.lon_max);
            get(o, "max_gap", p.max_gap);
            get(o, "idle_speed", p.idle_speed);
            get(o, "idle_run", p.idle_run);
            get(o, "max_speed", p.max_speed);
            get(o, "min_traj_len", p.min_traj_len);
        }
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::config, std::string("bad config value: ") + e.what());
    }
}

inline void validate(const ExperimentConfig& c)
{
    if (c.corpus_size < 1)
        fail(Errc::config, "corpus_size must be at least 1");
    if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0))
        fail(Errc::config, "train_fraction must lie in (0, 1)");
    if (c.decoder_hidden < 1)
        fail(Errc::config, "decoder_hidden must be at least 1");
    if (!(c.ratio_tolerance >= 0.0))
        fail(Errc::config, "ratio_tolerance must be non-negative");
    c.train.validate();
    c.preprocess.validate();
}

// ---------------------------------------------------------------------------
// Evaluation

inline constexpr const char* metric_mean_pointwise = "mean_pointwise";
inline constexpr const char* metric_frechet = "frechet";
inline constexpr const char* metric_dtw_d = "dtw_d";
inline constexpr const char* metric_dtw_i = "dtw_i";

inline std::vector<std::string> metric_names(bool include_dtw_i)
{
    std::vector<std::string> m{metric_mean_pointwise, metric_frechet, metric_dtw_d};
    if (include_dtw_i)
        m.push_back(metric_dtw_i);
    return m;
}

/// Rows of every scenario table. The simplification baseline is DP for
/// Spatial3D data and TD-TR for GeoTemporal data; "simplified" is the kept
/// subset itself, "interpolated" its re-expansion to full length.
inline std::vector<std::string> method_names()
{
    return {"AE", "simplified", "interpolated", "AE-synced", "simplified-synced",
            "interpolated-synced"};
}

/// Per (method, metric): one value per test trajectory, or nothing when the
/// combination does not apply.
struct Cell {
    std::string method;
    std::string metric;
    std::optional<std::vector<double>> values;

    std::optional<double> mean() const
    {
        if (!values || values->empty())
            return std::nullopt;
        double s = 0.0;
        for (double v : *values)
            s += v;
        return s / static_cast<double>(values->size());
    }
};

struct ScenarioResult {
    Scenario scenario;
    std::string baseline; // "DP" or "TDTR"
    std::vector<std::string> test_ids;
    std::vector<Cell> cells; // method-major, metric-minor
    std::size_t train_count = 0;
    std::size_t test_count = 0;
    double ae_ratio = 0.0;
    double achieved_dp_ratio = 0.0;
    double mean_epsilon = 0.0;
    bool dp_ratio_within_tolerance = false;
    std::size_t time_monotonic_fixes = 0; // AE reconstructions needing cumulative max
    std::vector<double> loss_history;
    bool ae_stubbed = false;

    const Cell& cell(const std::string& method, const std::string& metric) const
    {
        for (const auto& c : cells)
            if (c.method == method && c.metric == metric)
                return c;
        fail(Errc::contract_violation, "no cell " + method + "/" + metric);
    }
};

struct EvaluationReport {
    std::vector<std::string> methods = method_names();
    std::vector<std::string> metrics = metric_names(false);
    std::vector<ScenarioResult> scenarios;
    nlohmann::json config = nlohmann::json::object();
};

/// Maps an original test trajectory to its AE reconstruction.
using Reconstructor = std::function<Trajectory(const Trajectory&)>;

inline Reconstructor identity_reconstructor()
{
    return [](const Trajectory& t) { return t; };
}

template <typename F>
void parallel_for(std::size_t n, std::size_t threads, const F& f)
{
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i)
            f(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += threads)
                    f(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& th : pool)
        th.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

/// Timestamps made non-decreasing by a running maximum; returns true when
/// anything changed.
inline bool make_time_monotonic(std::vector<TrajPoint>& pts)
{
    bool changed = false;
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (pts[i].t() < pts[i - 1].t()) {
            pts[i][2] = pts[i - 1].t();
            changed = true;
        }
    return changed;
}

struct ScenarioData {
    std::vector<Trajectory> train;
    std::vector<Trajectory> test;
};

/// Chunks the corpus to seq_len and splits it by the seeded point-count
/// split; `max_test` trims the test side.
inline ScenarioData prepare_data(const std::vector<Trajectory>& corpus, const Scenario& s,
                                 const ExperimentConfig& cfg, std::uint64_t seed)
{
    std::vector<Trajectory> chunks;
    for (const auto& t : corpus) {
        if (t.mode() != s.mode)
            fail(Errc::mode_mismatch, "corpus mode differs from the scenario's");
        for (auto& c : chunk(t, s.seq_len))
            chunks.push_back(std::move(c));
    }
    if (chunks.size() < 2)
        fail(Errc::too_short, "corpus yields fewer than 2 chunks of length " +
                                  std::to_string(s.seq_len));
    auto split = split_train_test(chunks, cfg.train_fraction, seed);
    if (cfg.max_test > 0 && split.test.size() > cfg.max_test)
        split.test.resize(cfg.max_test);
    return {std::move(split.train), std::move(split.test)};
}

/// Trains the scenario's autoencoder and returns a reconstructor bound to it.
inline Reconstructor train_reconstructor(const Scenario& s, const std::vector<Trajectory>& train,
                                         const ExperimentConfig& cfg, std::uint64_t seed,
                                         std::vector<double>* loss_history = nullptr,
                                         ae::ModelParams* model_out = nullptr)
{
    std::vector<NormalizedTrajectory> data;
    data.reserve(train.size());
    for (const auto& t : train)
        data.push_back(normalize(t));
    ae::TrainConfig tc = cfg.train;
    tc.seed = seed;
    tc.threads = cfg.threads;
    tc.planet = cfg.preprocess.planet;
    if (tc.loss_kind == ae::LossKind::EquirectPlusTimeSq && s.mode != Mode::GeoTemporal)
        tc.loss_kind = ae::LossKind::RescaledEuclidean;
    const ae::ArchSpec arch{s.seq_len, s.latent_dim, cfg.decoder_hidden, s.mode};
    auto res = ae::train(data, tc, arch);
    if (loss_history)
        *loss_history = res.loss_history;
    if (model_out)
        *model_out = res.params;
    const bool reverse = tc.reverse_input;
    return [model = std::move(res.params), reverse](const Trajectory& t) {
        return ae::reconstruct(model, ae::compress(model, t, reverse));
    };
}

/// Evaluates one scenario on prepared data. With `recon` empty a fresh
/// autoencoder is trained on `data.train`.
inline ScenarioResult run_scenario(const Scenario& s, const ScenarioData& data,
                                   const ExperimentConfig& cfg, std::uint64_t seed,
                                   Reconstructor recon = {})
{
    validate(cfg);
    if (s.dp_points < 2 || s.dp_points > s.seq_len || s.latent_dim < 1)
        fail(Errc::config, "infeasible scenario " + s.name());
    if (data.test.empty())
        fail(Errc::empty_input, "no test trajectories");

    ScenarioResult r;
    r.scenario = s;
    const bool geo = s.mode == Mode::GeoTemporal;
    const SimplifyAlgo algo = geo ? SimplifyAlgo::TDTR : SimplifyAlgo::DP;
    r.baseline = to_string(algo);
    r.train_count = data.train.size();
    r.test_count = data.test.size();
    r.ae_ratio = static_cast<double>(s.seq_len * 3) /
                 static_cast<double>(s.latent_dim + NormParams::value_count);

    if (!recon) {
        if (data.train.empty())
            fail(Errc::empty_input, "no training trajectories");
        recon = train_reconstructor(s, data.train, cfg, seed, &r.loss_history);
    } else {
        r.ae_stubbed = true;
    }

    MetricConfig mc;
    mc.base = geo ? BaseMetric::Haversine : BaseMetric::Euclidean3D;
    mc.planet = cfg.preprocess.planet;
    const auto metrics = metric_names(cfg.include_dtw_i);
    const auto methods = method_names();
    const std::size_t n = data.test.size();

    // values[method][metric][traj]
    std::vector<std::vector<std::vector<double>>> values(
        methods.size(), std::vector<std::vector<double>>(metrics.size(), std::vector<double>(n)));
    std::vector<double> eps(n), ratio(n);
    std::vector<char> fixed(n, 0);

    auto measure = [&](std::size_t method, std::size_t i, const Trajectory& a, const Trajectory& b) {
        for (std::size_t k = 0; k < metrics.size(); ++k) {
            const auto& m = metrics[k];
            double v = 0.0;
            if (m == metric_mean_pointwise)
                v = a.size() == b.size() ? mean_pointwise(a, b, mc)
                                         : std::numeric_limits<double>::quiet_NaN();
            else if (m == metric_frechet)
                v = discrete_frechet(a, b, mc);
            else if (m == metric_dtw_d)
                v = dtw_dependent(a, b, mc);
            else
                v = dtw_independent(a, b, mc);
            values[method][k][i] = v;
        }
    };

    parallel_for(n, cfg.threads, [&](std::size_t i) {
        const Trajectory& orig = data.test[i];
        const auto search = find_epsilon_for_target(orig, s.dp_points, algo, cfg.preprocess.planet);
        eps[i] = search.epsilon;
        ratio[i] = static_cast<double>(orig.size()) / static_cast<double>(search.achieved_points);
        const Trajectory subset = Trajectory::unchecked(s.mode, search.simplified.points, orig.id());
        const Trajectory interp = interpolate_to_full_length(orig, search.simplified);
        const Trajectory rec = recon(orig);
        if (rec.size() != orig.size())
            fail(Errc::contract_violation, "reconstruction changed the trajectory length");

        measure(0, i, orig, rec);
        measure(1, i, orig, subset);
        measure(2, i, orig, interp);
        if (geo) {
            auto pts = rec.points();
            fixed[i] = make_time_monotonic(pts) ? 1 : 0;
            const Trajectory rec_mono = Trajectory::unchecked(s.mode, std::move(pts), rec.id());
            measure(3, i, orig, time_synchronize(orig, rec_mono));
            measure(4, i, orig, time_synchronize(orig, subset));
            measure(5, i, orig, time_synchronize(orig, interp));
        }
    });

    for (std::size_t a = 0; a < methods.size(); ++a)
        for (std::size_t k = 0; k < metrics.size(); ++k) {
            Cell c{methods[a], metrics[k], std::nullopt};
            const bool synced = a >= 3;
            // the kept subset has fewer points than the original
            const bool pointwise_on_subset = a == 1 && metrics[k] == metric_mean_pointwise;
            if (!(synced && !geo) && !pointwise_on_subset)
                c.values = std::move(values[a][k]);
            r.cells.push_back(std::move(c));
        }
    for (const auto& t : data.test)
        r.test_ids.push_back(t.id());
    double sum_eps = 0.0, sum_ratio = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum_eps += eps[i];
        sum_ratio += ratio[i];
        r.time_monotonic_fixes += static_cast<std::size_t>(fixed[i]);
    }
    r.mean_epsilon = sum_eps / static_cast<double>(n);
    r.achieved_dp_ratio = sum_ratio / static_cast<double>(n);
    r.dp_ratio_within_tolerance =
        std::abs(r.achieved_dp_ratio - s.dp_ratio()) <= cfg.ratio_tolerance * s.dp_ratio();
    return r;
}

/// Corpus for a dataset mode: smooth3d for Spatial3D, preprocessed taxi-like
/// data for GeoTemporal.
inline std::vector<Trajectory> corpus_for(Mode mode, const ExperimentConfig& cfg, std::uint64_t seed)
{
    return synthetic_corpus(mode == Mode::Spatial3D ? CorpusKind::Smooth3D : CorpusKind::TaxiLike,
                            cfg.corpus_size, seed, cfg.corpus, cfg.preprocess);
}

/// Runs the given scenarios in order. Every seed derives from cfg.seed: one
/// corpus per dataset mode, then per scenario a split seed and a training
/// seed.
inline EvaluationReport run_grid(const std::vector<Scenario>& scenarios, const ExperimentConfig& cfg,
                                 const std::function<void(const ScenarioResult&)>& progress = {},
                                 Reconstructor stub = {})
{
    validate(cfg);
    EvaluationReport rep;
    rep.metrics = metric_names(cfg.include_dtw_i);
    rep.config = to_json(cfg);
    Rng root(cfg.seed);
    const std::uint64_t corpus_seed[2] = {root.next(), root.next()};
    std::vector<Trajectory> corpora[2];
    for (const auto& s : scenarios) {
        const std::size_t m = s.mode == Mode::Spatial3D ? 0 : 1;
        if (corpora[m].empty())
            corpora[m] = corpus_for(s.mode, cfg, corpus_seed[m]);
        // seeds depend only on the scenario, not on which others run
        Rng srng(cfg.seed ^ (0x9e3779b97f4a7c15ULL * (m + 1)) ^
                 (std::uint64_t{s.seq_len} << 32) ^
                 static_cast<std::uint64_t>(std::llround(s.ratio * 1000.0)));
        const std::uint64_t split_seed = srng.next();
        const std::uint64_t train_seed = srng.next();
        const auto data = prepare_data(corpora[m], s, cfg, split_seed);
        rep.scenarios.push_back(run_scenario(s, data, cfg, train_seed, stub));
        if (progress)
            progress(rep.scenarios.back());
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Report emission

enum class ReportFormat { Csv, Json, All };

inline ReportFormat report_format_from_string(const std::string& s)
{
    if (s == "csv")
        return ReportFormat::Csv;
    if (s == "json")
        return ReportFormat::Json;
    if (s == "all")
        return ReportFormat::All;
    fail(Errc::config, "unknown report format '" + s + "'");
}

namespace detail {

inline std::string cell_text(const std::optional<double>& v)
{
    return v && std::isfinite(*v) ? io::format_double(*v) : "NA";
}

inline nlohmann::json cell_json(const std::optional<double>& v)
{
    return v && std::isfinite(*v) ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

} // namespace detail

/// Summary: one row per (scenario, method), one column per metric.
inline void write_summary_csv(std::ostream& os, const EvaluationReport& rep)
{
    os << "scenario,dataset_mode,seq_len,ratio,baseline,method";
    for (const auto& m : rep.metrics)
        os << ',' << m;
    os << '\n';
    for (const auto& r : rep.scenarios)
        for (const auto& method : rep.methods) {
            const auto& s = r.scenario;
            os << s.name() << ',' << to_string(s.mode) << ',' << s.seq_len << ',' << s.ratio_label
               << ',' << r.baseline << ',' << method;
            for (const auto& m : rep.metrics)
                os << ',' << detail::cell_text(r.cell(method, m).mean());
            os << '\n';
        }
}

/// Long form: one row per (scenario, trajectory, metric, method).
inline void write_long_csv(std::ostream& os, const EvaluationReport& rep)
{
    os << "scenario,traj_id,metric,method,value\n";
    for (const auto& r : rep.scenarios)
        for (const auto& c : r.cells) {
            if (!c.values)
                continue;
            for (std::size_t i = 0; i < c.values->size(); ++i)
                os << r.scenario.name() << ',' << r.test_ids[i] << ',' << c.metric << ','
                   << c.method << ',' << detail::cell_text((*c.values)[i]) << '\n';
        }
}

inline nlohmann::json report_json(const EvaluationReport& rep)
{
    nlohmann::json j;
    j["config"] = rep.config;
    j["methods"] = rep.methods;
    j["metrics"] = rep.metrics;
    j["scenarios"] = nlohmann::json::array();
    for (const auto& r : rep.scenarios) {
        const auto& s = r.scenario;
        nlohmann::json o;
        o["name"] = s.name();
        o["dataset_mode"] = to_string(s.mode);
        o["seq_len"] = s.seq_len;
        o["ratio"] = s.ratio_label;
        o["target_ratio"] = s.ratio;
        o["latent_dim"] = s.latent_dim;
        o["dp_points"] = s.dp_points;
        o["compressed_values"] = s.compressed_values;
        o["baseline"] = r.baseline;
        o["train_count"] = r.train_count;
        o["test_count"] = r.test_count;
        o["ae_ratio"] = r.ae_ratio;
        o["baseline_target_ratio"] = s.dp_ratio();
        o["achieved_baseline_ratio"] = r.achieved_dp_ratio;
        o["baseline_ratio_within_tolerance"] = r.dp_ratio_within_tolerance;
        o["mean_epsilon"] = r.mean_epsilon;
        o["time_monotonic_fixes"] = r.time_monotonic_fixes;
        o["ae_stubbed"] = r.ae_stubbed;
        o["loss_history"] = r.loss_history;
        nlohmann::json summary = nlohmann::json::object();
        for (const auto& method : rep.methods)
            for (const auto& m : rep.metrics)
                summary[method][m] = detail::cell_json(r.cell(method, m).mean());
        o["summary"] = std::move(summary);
        j["scenarios"].push_back(std::move(o));
    }
    return j;
}

/// Writes report_summary.csv and report_long.csv (Csv), report.json (Json),
/// or all three into `dir`.
inline void emit_report(const EvaluationReport& rep, const std::filesystem::path& dir,
                        ReportFormat format = ReportFormat::All)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    auto open = [&](const char* name) {
        std::ofstream os(dir / name);
        if (!os)
            fail(Errc::io, "cannot write " + (dir / name).string());
        return os;
    };
    if (format != ReportFormat::Json) {
        auto s = open("report_summary.csv");
        write_summary_csv(s, rep);
        auto l = open("report_long.csv");
        write_long_csv(l, rep);
        if (!s || !l)
            fail(Errc::io, "write failed in " + dir.string());
    }
    if (format != ReportFormat::Csv) {
        auto js = open("report.json");
        js << report_json(rep).dump(2) << '\n';
        if (!js)
            fail(Errc::io, "write failed in " + dir.string());
    }
}

} // namespace trajae::experiment
