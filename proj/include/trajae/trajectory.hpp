#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "trajae/error.hpp"
#include "trajae/point.hpp"
#include "trajae/rng.hpp"

namespace trajae {

/// Ordered sequence of samples. Construction validates length >= 2, finite
/// components and, in GeoTemporal mode, strictly increasing timestamps.
class Trajectory {
public:
    Trajectory() = default;

    Trajectory(Mode mode, std::vector<TrajPoint> points, std::string id = {})
        : mode_(mode), points_(std::move(points)), id_(std::move(id))
    {
        validate();
    }

    /// Skips validation. Model reconstructions carry whatever timestamps the
    /// decoder produced, which need not be monotonic.
    static Trajectory unchecked(Mode mode, std::vector<TrajPoint> points, std::string id = {})
    {
        Trajectory t;
        t.mode_ = mode;
        t.points_ = std::move(points);
        t.id_ = std::move(id);
        return t;
    }

    Mode mode() const noexcept { return mode_; }
    const std::string& id() const noexcept { return id_; }
    void set_id(std::string id) { id_ = std::move(id); }

    std::size_t size() const noexcept { return points_.size(); }
    bool empty() const noexcept { return points_.empty(); }
    const TrajPoint& operator[](std::size_t i) const { return points_[i]; }
    const TrajPoint& front() const { return points_.front(); }
    const TrajPoint& back() const { return points_.back(); }
    const std::vector<TrajPoint>& points() const noexcept { return points_; }
    auto begin() const noexcept { return points_.begin(); }
    auto end() const noexcept { return points_.end(); }

    /// Points [first, first + count) as a new trajectory with the given id.
    Trajectory slice(std::size_t first, std::size_t count, std::string id) const
    {
        std::vector<TrajPoint> pts(points_.begin() + static_cast<std::ptrdiff_t>(first),
                                   points_.begin() + static_cast<std::ptrdiff_t>(first + count));
        return Trajectory::unchecked(mode_, std::move(pts), std::move(id));
    }

    friend bool operator==(const Trajectory& a, const Trajectory& b)
    {
        return a.mode_ == b.mode_ && a.points_ == b.points_;
    }

private:
    void validate() const
    {
        if (points_.size() < 2)
            fail(Errc::too_short, "trajectory needs at least 2 points");
        for (const auto& p : points_)
            if (!p.finite())
                fail(Errc::format, "trajectory component is not finite");
        if (mode_ == Mode::GeoTemporal)
            for (std::size_t i = 1; i < points_.size(); ++i)
                if (!(points_[i].t() > points_[i - 1].t()))
                    fail(Errc::contract_violation, "timestamps must be strictly increasing");
    }

    Mode mode_ = Mode::Spatial3D;
    std::vector<TrajPoint> points_;
    std::string id_;
};

/// Per-dimension min-max rescale values. Together with a latent code these
/// six numbers form the compressed representation.
struct NormParams {
    std::array<double, 3> offset{};
    std::array<double, 3> scale{};

    static constexpr std::size_t value_count = 6;

    friend bool operator==(const NormParams&, const NormParams&) = default;
};

using Triple = std::array<double, 3>;

struct NormalizedTrajectory {
    std::vector<Triple> points;
    NormParams params;
    Mode mode = Mode::Spatial3D;
    std::string id;

    std::size_t size() const noexcept { return points.size(); }
};

/// Rescales each dimension into [0, 1]. A constant dimension has scale 0 and
/// normalizes to 0.
inline NormalizedTrajectory normalize(const Trajectory& t)
{
    if (t.size() < 2)
        fail(Errc::too_short, "normalize needs at least 2 points");
    NormalizedTrajectory out;
    out.mode = t.mode();
    out.id = t.id();
    for (std::size_t d = 0; d < 3; ++d) {
        double lo = t[0][d];
        double hi = t[0][d];
        for (const auto& p : t) {
            lo = std::min(lo, p[d]);
            hi = std::max(hi, p[d]);
        }
        out.params.offset[d] = lo;
        out.params.scale[d] = hi - lo;
    }
    out.points.reserve(t.size());
    for (const auto& p : t) {
        Triple q{};
        for (std::size_t d = 0; d < 3; ++d) {
            const double s = out.params.scale[d];
            q[d] = s == 0.0 ? 0.0 : (p[d] - out.params.offset[d]) / s;
        }
        out.points.push_back(q);
    }
    return out;
}

inline TrajPoint denormalize_point(const Triple& q, const NormParams& params) noexcept
{
    TrajPoint p;
    for (std::size_t d = 0; d < 3; ++d)
        p[d] = q[d] * params.scale[d] + params.offset[d];
    return p;
}

/// Inverse of normalize. Not validated: decoder output may leave [0, 1] and
/// produce non-monotonic timestamps.
inline Trajectory denormalize(const NormalizedTrajectory& nt)
{
    std::vector<TrajPoint> pts;
    pts.reserve(nt.points.size());
    for (const auto& q : nt.points)
        pts.push_back(denormalize_point(q, nt.params));
    return Trajectory::unchecked(nt.mode, std::move(pts), nt.id);
}

inline std::vector<Trajectory> chunk(const Trajectory& t, std::size_t len)
{
    if (len < 2)
        fail(Errc::config, "chunk length must be at least 2");
    std::vector<Trajectory> out;
    for (std::size_t i = 0; i + len <= t.size(); i += len)
        out.push_back(t.slice(i, len, t.id() + "#" + std::to_string(i / len)));
    return out;
}

inline std::vector<Trajectory> sliding_windows(const Trajectory& t, std::size_t len)
{
    if (len < 2)
        fail(Errc::config, "window length must be at least 2");
    std::vector<Trajectory> out;
    for (std::size_t i = 0; i + len <= t.size(); ++i)
        out.push_back(t.slice(i, len, t.id() + "@" + std::to_string(i)));
    return out;
}

struct TrainTestSplit {
    std::vector<Trajectory> train;
    std::vector<Trajectory> test;
};

/// Seeded split at whole-trajectory granularity aiming for `train_fraction`
/// of the total point count on the train side. Both sides keep input order.
inline TrainTestSplit split_train_test(const std::vector<Trajectory>& ts, double train_fraction,
                                       std::uint64_t seed)
{
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        fail(Errc::config, "train fraction must lie in (0, 1)");
    if (ts.size() < 2)
        fail(Errc::cannot_split, "need at least 2 trajectories to split");

    std::size_t total = 0;
    for (const auto& t : ts)
        total += t.size();
    const double target = train_fraction * static_cast<double>(total);

    std::vector<std::size_t> order(ts.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);

    std::vector<bool> in_train(ts.size(), false);
    double train_points = 0.0;
    std::size_t n_train = 0;
    for (std::size_t idx : order) {
        const double with = train_points + static_cast<double>(ts[idx].size());
        if (std::abs(with - target) < std::abs(train_points - target) || n_train == 0) {
            in_train[idx] = true;
            train_points = with;
            ++n_train;
        }
    }
    // keep the test side non-empty
    if (n_train == ts.size())
        in_train[order.back()] = false;

    TrainTestSplit split;
    for (std::size_t i = 0; i < ts.size(); ++i)
        (in_train[i] ? split.train : split.test).push_back(ts[i]);
    return split;
}

} // namespace trajae
