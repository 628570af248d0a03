#pragma once

#include <chrono>
#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "trajae/error.hpp"
#include "trajae/geo.hpp"
#include "trajae/io.hpp"
#include "trajae/trajectory.hpp"

/// Cleaning of raw taxi GPS logs: bounding box, monotonic time, gap, idle
/// and speed-outlier rules, applied per vehicle in that fixed order.
namespace trajae::preprocess {

struct RawFix {
    std::string entity_id;
    double t = 0.0; // unix seconds
    double lon = 0.0;
    double lat = 0.0;

    friend bool operator==(const RawFix&, const RawFix&) = default;
};

using FixRun = std::vector<RawFix>;

struct BBox {
    double lat_min = 39.4;
    double lat_max = 41.1;
    double lon_min = 115.4;
    double lon_max = 117.6;

    bool contains(double lat, double lon) const noexcept
    {
        return lat >= lat_min && lat <= lat_max && lon >= lon_min && lon <= lon_max;
    }
};

struct PreprocessConfig {
    BBox bbox;                     // defaults cover metropolitan Beijing
    double max_gap = 7200.0;       // seconds
    double idle_speed = 1.0;       // m/s
    std::size_t idle_run = 10;     // idle iff strictly more than this many slow points
    double max_speed = 55.0;       // m/s
    std::size_t min_traj_len = 2;
    SpherePlanet planet{};

    void validate() const
    {
        if (!(max_gap > 0 && idle_speed > 0 && idle_run > 0 && max_speed > 0 && min_traj_len >= 2))
            fail(Errc::config, "preprocess thresholds must be positive (min_traj_len >= 2)");
        if (!(bbox.lat_min <= bbox.lat_max && bbox.lon_min <= bbox.lon_max))
            fail(Errc::config, "bounding box is not well ordered");
    }
};

/// Event counters per rule. Summed over entities for the JSON summary.
struct PreprocessStats {
    std::size_t input_fixes = 0;
    std::size_t bbox_dropped = 0;
    std::size_t non_monotonic_dropped = 0;
    std::size_t gap_splits = 0;
    std::size_t idle_blocks_removed = 0;
    std::size_t idle_points_removed = 0;
    std::size_t speed_splits = 0;
    std::size_t short_runs_discarded = 0;
    std::size_t short_run_points_discarded = 0;
    std::size_t trajectories_out = 0;
    std::size_t points_out = 0;

    PreprocessStats& operator+=(const PreprocessStats& o)
    {
        input_fixes += o.input_fixes;
        bbox_dropped += o.bbox_dropped;
        non_monotonic_dropped += o.non_monotonic_dropped;
        gap_splits += o.gap_splits;
        idle_blocks_removed += o.idle_blocks_removed;
        idle_points_removed += o.idle_points_removed;
        speed_splits += o.speed_splits;
        short_runs_discarded += o.short_runs_discarded;
        short_run_points_discarded += o.short_run_points_discarded;
        trajectories_out += o.trajectories_out;
        points_out += o.points_out;
        return *this;
    }

    friend bool operator==(const PreprocessStats&, const PreprocessStats&) = default;
};

inline void to_json(nlohmann::json& j, const PreprocessStats& s)
{
    j = nlohmann::json{{"input_fixes", s.input_fixes},
                       {"bbox_dropped", s.bbox_dropped},
                       {"non_monotonic_dropped", s.non_monotonic_dropped},
                       {"gap_splits", s.gap_splits},
                       {"idle_blocks_removed", s.idle_blocks_removed},
                       {"idle_points_removed", s.idle_points_removed},
                       {"speed_splits", s.speed_splits},
                       {"short_runs_discarded", s.short_runs_discarded},
                       {"short_run_points_discarded", s.short_run_points_discarded},
                       {"trajectories_out", s.trajectories_out},
                       {"points_out", s.points_out}};
}

// ---------------------------------------------------------------------------
// Parsing

/// "YYYY-MM-DD HH:MM:SS", read as UTC.
inline bool parse_timestamp(std::string_view s, double& out)
{
    s = io::trim(s);
    if (s.size() != 19 || s[4] != '-' || s[7] != '-' || s[10] != ' ' || s[13] != ':' ||
        s[16] != ':')
        return false;
    auto num = [&](std::size_t pos, std::size_t len, int& v) {
        v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (s[i] < '0' || s[i] > '9')
                return false;
            v = v * 10 + (s[i] - '0');
        }
        return true;
    };
    int Y, M, D, h, m, sec;
    if (!num(0, 4, Y) || !num(5, 2, M) || !num(8, 2, D) || !num(11, 2, h) || !num(14, 2, m) ||
        !num(17, 2, sec))
        return false;
    using namespace std::chrono;
    const year_month_day ymd{year{Y}, month{static_cast<unsigned>(M)}, day{static_cast<unsigned>(D)}};
    if (!ymd.ok() || h > 23 || m > 59 || sec > 60)
        return false;
    const auto days = sys_days{ymd}.time_since_epoch().count();
    out = static_cast<double>(static_cast<std::int64_t>(days) * 86400 + h * 3600 + m * 60 + sec);
    return true;
}

struct ParseResult {
    std::vector<RawFix> fixes;
    std::size_t malformed = 0;
};

/// Reads `id,YYYY-MM-DD HH:MM:SS,lon,lat` lines. Malformed lines are skipped
/// and counted; more than half malformed is a format error.
inline ParseResult parse_taxi_log(std::istream& is)
{
    if (!is)
        fail(Errc::io, "taxi log stream is not readable");
    ParseResult res;
    std::size_t nonempty = 0;
    std::string line;
    while (std::getline(is, line)) {
        const auto trimmed = io::trim(line);
        if (trimmed.empty())
            continue;
        ++nonempty;
        const auto f = io::split_fields(trimmed);
        RawFix fix;
        if (f.size() != 4 || io::trim(f[0]).empty() || !parse_timestamp(f[1], fix.t) ||
            !io::parse_double(f[2], fix.lon) || !io::parse_double(f[3], fix.lat)) {
            ++res.malformed;
            continue;
        }
        fix.entity_id = std::string(io::trim(f[0]));
        res.fixes.push_back(std::move(fix));
    }
    if (is.bad())
        fail(Errc::io, "error while reading taxi log");
    if (nonempty > 0 && 2 * res.malformed > nonempty)
        fail(Errc::format, std::to_string(res.malformed) + " of " + std::to_string(nonempty) +
                               " lines are malformed");
    return res;
}

// ---------------------------------------------------------------------------
// Rules

inline double speed_between(const RawFix& a, const RawFix& b, const SpherePlanet& planet = {})
{
    if (!(b.t > a.t))
        fail(Errc::contract_violation, "speed_between needs strictly increasing time");
    const double d = haversine_distance(GeoCoord{deg_to_rad(a.lat), deg_to_rad(a.lon)},
                                        GeoCoord{deg_to_rad(b.lat), deg_to_rad(b.lon)}, planet);
    return d / (b.t - a.t);
}

inline FixRun filter_bbox(const FixRun& fixes, const PreprocessConfig& cfg,
                          PreprocessStats* stats = nullptr)
{
    FixRun out;
    out.reserve(fixes.size());
    for (const auto& f : fixes)
        if (cfg.bbox.contains(f.lat, f.lon))
            out.push_back(f);
    if (stats)
        stats->bbox_dropped += fixes.size() - out.size();
    return out;
}

inline FixRun enforce_monotonic_time(const FixRun& fixes, PreprocessStats* stats = nullptr)
{
    FixRun out;
    out.reserve(fixes.size());
    for (const auto& f : fixes)
        if (out.empty() || f.t > out.back().t)
            out.push_back(f);
    if (stats)
        stats->non_monotonic_dropped += fixes.size() - out.size();
    return out;
}

namespace detail {

inline void keep_if_long(std::vector<FixRun>& runs, FixRun&& run, const PreprocessConfig& cfg,
                         PreprocessStats* stats)
{
    if (run.empty())
        return;
    if (run.size() >= cfg.min_traj_len) {
        runs.push_back(std::move(run));
    } else if (stats) {
        ++stats->short_runs_discarded;
        stats->short_run_points_discarded += run.size();
    }
}

} // namespace detail

inline std::vector<FixRun> split_on_gaps(const FixRun& fixes, const PreprocessConfig& cfg,
                                         PreprocessStats* stats = nullptr)
{
    std::vector<FixRun> runs;
    FixRun cur;
    for (const auto& f : fixes) {
        if (!cur.empty() && f.t - cur.back().t > cfg.max_gap) {
            if (stats)
                ++stats->gap_splits;
            detail::keep_if_long(runs, std::move(cur), cfg, stats);
            cur.clear();
        }
        cur.push_back(f);
    }
    detail::keep_if_long(runs, std::move(cur), cfg, stats);
    return runs;
}

/// Deletes every maximal block of more than `idle_run` consecutive points
/// whose incoming speed is below `idle_speed`, splitting the run there.
inline std::vector<FixRun> remove_idle_and_split(const FixRun& fixes, const PreprocessConfig& cfg,
                                                 PreprocessStats* stats = nullptr)
{
    const std::size_t n = fixes.size();
    std::vector<bool> slow(n, false);
    for (std::size_t i = 1; i < n; ++i)
        slow[i] = speed_between(fixes[i - 1], fixes[i], cfg.planet) < cfg.idle_speed;

    std::vector<bool> drop(n, false);
    for (std::size_t i = 1; i < n;) {
        if (!slow[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && slow[j])
            ++j;
        if (j - i > cfg.idle_run) {
            for (std::size_t k = i; k < j; ++k)
                drop[k] = true;
            if (stats) {
                ++stats->idle_blocks_removed;
                stats->idle_points_removed += j - i;
            }
        }
        i = j;
    }

    std::vector<FixRun> runs;
    FixRun cur;
    for (std::size_t i = 0; i < n; ++i) {
        if (drop[i]) {
            detail::keep_if_long(runs, std::move(cur), cfg, stats);
            cur.clear();
            continue;
        }
        cur.push_back(fixes[i]);
    }
    detail::keep_if_long(runs, std::move(cur), cfg, stats);
    return runs;
}

inline std::vector<FixRun> split_on_speed_outliers(const FixRun& fixes,
                                                   const PreprocessConfig& cfg,
                                                   PreprocessStats* stats = nullptr)
{
    std::vector<FixRun> runs;
    FixRun cur;
    for (const auto& f : fixes) {
        if (!cur.empty() && speed_between(cur.back(), f, cfg.planet) > cfg.max_speed) {
            if (stats)
                ++stats->speed_splits;
            detail::keep_if_long(runs, std::move(cur), cfg, stats);
            cur.clear();
        }
        cur.push_back(f);
    }
    detail::keep_if_long(runs, std::move(cur), cfg, stats);
    return runs;
}

inline Trajectory to_trajectory(const FixRun& run, std::string id)
{
    std::vector<TrajPoint> pts;
    pts.reserve(run.size());
    for (const auto& f : run)
        pts.emplace_back(f.lon, f.lat, f.t);
    return Trajectory(Mode::GeoTemporal, std::move(pts), std::move(id));
}

/// Full pipeline for the fixes of one vehicle, in file order.
inline std::vector<Trajectory> preprocess_entity(const FixRun& fixes, const PreprocessConfig& cfg,
                                                 PreprocessStats* stats = nullptr)
{
    cfg.validate();
    if (stats)
        stats->input_fixes += fixes.size();
    const FixRun inside = filter_bbox(fixes, cfg, stats);
    const FixRun ordered = enforce_monotonic_time(inside, stats);

    std::vector<Trajectory> out;
    const std::string base = fixes.empty() ? std::string{} : fixes.front().entity_id;
    for (const auto& gap_run : split_on_gaps(ordered, cfg, stats))
        for (const auto& active : remove_idle_and_split(gap_run, cfg, stats))
            for (const auto& run : split_on_speed_outliers(active, cfg, stats)) {
                out.push_back(to_trajectory(run, base + "_" + std::to_string(out.size())));
                if (stats) {
                    ++stats->trajectories_out;
                    stats->points_out += run.size();
                }
            }
    return out;
}

struct PreprocessResult {
    std::vector<Trajectory> trajectories;
    PreprocessStats stats;
};

/// Groups fixes by entity (stable within an entity) and runs the pipeline
/// on each; output is ordered by entity id.
inline PreprocessResult preprocess_log(const std::vector<RawFix>& fixes, const PreprocessConfig& cfg)
{
    std::map<std::string, FixRun> by_entity;
    for (const auto& f : fixes)
        by_entity[f.entity_id].push_back(f);
    PreprocessResult res;
    for (const auto& [id, run] : by_entity) {
        auto ts = preprocess_entity(run, cfg, &res.stats);
        for (auto& t : ts)
            res.trajectories.push_back(std::move(t));
    }
    return res;
}

inline void write_taxi_log(std::ostream& os, const std::vector<RawFix>& fixes)
{
    for (const auto& f : fixes) {
        using namespace std::chrono;
        const sys_seconds tp{seconds{static_cast<std::int64_t>(f.t)}};
        const auto day = floor<days>(tp);
        const year_month_day ymd{day};
        const hh_mm_ss hms{tp - day};
        char buf[64];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02ld:%02ld:%02ld", int(ymd.year()),
                      unsigned(ymd.month()), unsigned(ymd.day()), long(hms.hours().count()),
                      long(hms.minutes().count()), long(hms.seconds().count()));
        os << f.entity_id << ',' << buf << ',' << io::format_double(f.lon) << ','
           << io::format_double(f.lat) << '\n';
    }
}

} // namespace trajae::preprocess
