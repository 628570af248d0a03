#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trajae/error.hpp"
#include "trajae/geo.hpp"
#include "trajae/io.hpp"
#include "trajae/trajectory.hpp"

/// Top-down line simplification (Douglas-Peucker and the time-aware TD-TR
/// variant), tolerance search for a target point count, and re-expansion of
/// a simplified trajectory to its original length.
namespace trajae {

enum class SimplifyAlgo { DP, TDTR };

inline const char* to_string(SimplifyAlgo a) noexcept { return a == SimplifyAlgo::DP ? "DP" : "TDTR"; }

struct Simplified {
    Mode mode = Mode::Spatial3D;
    std::vector<std::size_t> kept_indices;
    std::vector<TrajPoint> points;

    std::size_t size() const noexcept { return kept_indices.size(); }

    Trajectory to_trajectory(std::string id = {}) const
    {
        return Trajectory(mode, points, std::move(id));
    }
};

struct EpsilonSearch {
    std::size_t target_points = 0;
    double epsilon = 0.0;
    std::size_t achieved_points = 0;
    Simplified simplified;
};

/// Distance from p to the infinite line through a and b, or to a when a == b.
inline double perpendicular_distance(std::span<const double> p, std::span<const double> a,
                                     std::span<const double> b)
{
    if (p.size() != a.size() || p.size() != b.size())
        fail(Errc::dimension_mismatch, "perpendicular_distance on points of different dimension");
    const std::size_t n = p.size();
    double ab2 = 0.0;
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ab = b[i] - a[i];
        ab2 += ab * ab;
        dot += (p[i] - a[i]) * ab;
    }
    const double r = ab2 > 0.0 ? dot / ab2 : 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = p[i] - a[i] - r * (b[i] - a[i]);
        sum += d * d;
    }
    return std::sqrt(sum);
}

/// Synchronized distance: `base` between p and the position on a->b at p's
/// timestamp. Component 2 is time.
template <typename BaseDistance>
double sed_distance(const TrajPoint& p, const TrajPoint& a, const TrajPoint& b, BaseDistance&& base)
{
    if (!(a.t() < b.t()))
        fail(Errc::degenerate_segment, "sed_distance needs a.t < b.t");
    if (p.t() < a.t() || p.t() > b.t())
        fail(Errc::out_of_range, "sed_distance: point time outside the segment");
    return base(p, interpolate_time_ratio(a, b, p.t()));
}

inline double haversine_points(const TrajPoint& p, const TrajPoint& q, const SpherePlanet& planet = {})
{
    return haversine_distance(to_geo(p), to_geo(q), planet);
}

/// Deviation of point k from the chord (i, j) used by the split rule.
/// DP:   perpendicular distance. Spatial3D uses all three components;
///       GeoTemporal projects (lon, lat) to meters in an equirectangular
///       frame at the trajectory's mean latitude.
/// TDTR: SED with the haversine base (GeoTemporal only).
class Deviation {
public:
    Deviation(const Trajectory& t, SimplifyAlgo algo, SpherePlanet planet = {})
        : t_(&t), algo_(algo), planet_(planet)
    {
        if (algo == SimplifyAlgo::TDTR && t.mode() != Mode::GeoTemporal)
            fail(Errc::mode_mismatch, "TD-TR needs a GeoTemporal trajectory");
        if (algo == SimplifyAlgo::DP && t.mode() == Mode::GeoTemporal) {
            double mean_lat = 0.0;
            for (const auto& p : t)
                mean_lat += p.lat();
            mean_lat /= static_cast<double>(t.size());
            const double kx = planet.radius * std::cos(deg_to_rad(mean_lat));
            local_.reserve(t.size());
            for (const auto& p : t)
                local_.push_back({kx * deg_to_rad(p.lon()), planet.radius * deg_to_rad(p.lat())});
        }
    }

    double operator()(std::size_t k, std::size_t i, std::size_t j) const
    {
        const auto& t = *t_;
        if (algo_ == SimplifyAlgo::TDTR)
            return sed_distance(t[k], t[i], t[j], [this](const TrajPoint& a, const TrajPoint& b) {
                return haversine_points(a, b, planet_);
            });
        if (t.mode() == Mode::GeoTemporal)
            return perpendicular_distance(local_[k], local_[i], local_[j]);
        return perpendicular_distance(t[k].c, t[i].c, t[j].c);
    }

private:
    const Trajectory* t_;
    SimplifyAlgo algo_;
    SpherePlanet planet_;
    std::vector<std::array<double, 2>> local_;
};

namespace detail {

/// First index of the maximum deviation strictly inside (i, j).
template <typename Dev>
std::pair<std::size_t, double> farthest(const Dev& dev, std::size_t i, std::size_t j)
{
    std::size_t best = i + 1;
    double dmax = -1.0;
    for (std::size_t k = i + 1; k < j; ++k) {
        const double d = dev(k, i, j);
        if (d > dmax) {
            dmax = d;
            best = k;
        }
    }
    return {best, dmax};
}

inline Simplified make_simplified(const Trajectory& t, const std::vector<bool>& keep)
{
    Simplified s;
    s.mode = t.mode();
    for (std::size_t k = 0; k < t.size(); ++k)
        if (keep[k]) {
            s.kept_indices.push_back(k);
            s.points.push_back(t[k]);
        }
    return s;
}

} // namespace detail

/// Generic top-down simplification: split at the farthest point while its
/// deviation is strictly greater than epsilon.
template <typename Dev>
Simplified simplify_top_down(const Trajectory& t, double epsilon, const Dev& dev)
{
    if (t.size() < 2)
        fail(Errc::too_short, "simplification needs at least 2 points");
    if (!(epsilon >= 0.0))
        fail(Errc::config, "epsilon must be non-negative");
    std::vector<bool> keep(t.size(), false);
    keep.front() = keep.back() = true;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, t.size() - 1}};
    while (!stack.empty()) {
        const auto [i, j] = stack.back();
        stack.pop_back();
        if (j - i < 2)
            continue;
        const auto [k, d] = detail::farthest(dev, i, j);
        if (d > epsilon) {
            keep[k] = true;
            stack.push_back({k, j});
            stack.push_back({i, k});
        }
    }
    return detail::make_simplified(t, keep);
}

inline Simplified douglas_peucker(const Trajectory& t, double epsilon, SpherePlanet planet = {})
{
    return simplify_top_down(t, epsilon, Deviation(t, SimplifyAlgo::DP, planet));
}

inline Simplified td_tr(const Trajectory& t, double epsilon, SpherePlanet planet = {})
{
    return simplify_top_down(t, epsilon, Deviation(t, SimplifyAlgo::TDTR, planet));
}

inline Simplified simplify(const Trajectory& t, double epsilon, SimplifyAlgo algo,
                           SpherePlanet planet = {})
{
    return algo == SimplifyAlgo::DP ? douglas_peucker(t, epsilon, planet) : td_tr(t, epsilon, planet);
}

/// Tolerance below which each point is kept. Interior point k is kept for
/// epsilon iff threshold[k] > epsilon: the minimum split deviation along its
/// path in the full recursion tree. Endpoints get +inf.
template <typename Dev>
std::vector<double> split_thresholds(const Trajectory& t, const Dev& dev)
{
    std::vector<double> thr(t.size(), std::numeric_limits<double>::infinity());
    struct Frame {
        std::size_t i, j;
        double bound;
    };
    std::vector<Frame> stack{{0, t.size() - 1, std::numeric_limits<double>::infinity()}};
    while (!stack.empty()) {
        const Frame f = stack.back();
        stack.pop_back();
        if (f.j - f.i < 2)
            continue;
        const auto [k, d] = detail::farthest(dev, f.i, f.j);
        thr[k] = std::min(f.bound, d);
        stack.push_back({k, f.j, thr[k]});
        stack.push_back({f.i, k, thr[k]});
    }
    return thr;
}

/// Picks epsilon so the kept-point count is as close to `target_points` as
/// the trajectory allows; ties go to fewer points. The count is a step
/// function of epsilon, so the candidates are exactly 0 and the realized
/// split thresholds. The returned epsilon lies inside the chosen step.
inline EpsilonSearch find_epsilon_for_target(const Trajectory& t, std::size_t target_points,
                                             SimplifyAlgo algo, SpherePlanet planet = {})
{
    if (target_points < 2 || target_points > t.size())
        fail(Errc::config, "target point count must lie in [2, |T|]");
    const Deviation dev(t, algo, planet);
    const auto thr = split_thresholds(t, dev);

    std::vector<double> interior;
    for (std::size_t k = 1; k + 1 < t.size(); ++k)
        interior.push_back(thr[k]);
    std::sort(interior.begin(), interior.end());

    std::vector<double> cands{0.0};
    for (double v : interior)
        if (v > cands.back())
            cands.push_back(v);

    auto count_at = [&](double eps) {
        const auto above = interior.end() - std::upper_bound(interior.begin(), interior.end(), eps);
        return std::size_t{2} + static_cast<std::size_t>(above);
    };

    std::size_t best_idx = 0;
    std::size_t best_count = count_at(cands[0]);
    auto gap = [&](std::size_t c) {
        return c > target_points ? c - target_points : target_points - c;
    };
    for (std::size_t c = 1; c < cands.size(); ++c) {
        const std::size_t n = count_at(cands[c]);
        if (gap(n) < gap(best_count) || (gap(n) == gap(best_count) && n < best_count)) {
            best_count = n;
            best_idx = c;
        }
    }
    // lowest candidate reaching that count
    while (best_idx > 0 && count_at(cands[best_idx - 1]) == best_count)
        --best_idx;

    const double lo = cands[best_idx];
    double eps = lo;
    if (best_idx + 1 < cands.size()) {
        const double mid = lo + (cands[best_idx + 1] - lo) / 2;
        if (mid < cands[best_idx + 1])
            eps = mid;
    }

    EpsilonSearch res;
    res.target_points = target_points;
    res.epsilon = eps;
    res.simplified = simplify_top_down(t, eps, dev);
    res.achieved_points = res.simplified.size();
    return res;
}

namespace detail {

inline void check_simplified(const Trajectory& original, const Simplified& s)
{
    const auto& idx = s.kept_indices;
    if (idx.size() < 2 || idx.size() != s.points.size() || idx.front() != 0 ||
        idx.back() != original.size() - 1)
        fail(Errc::contract_violation, "simplified trajectory must keep both endpoints");
    for (std::size_t m = 0; m < idx.size(); ++m) {
        if (m > 0 && idx[m] <= idx[m - 1])
            fail(Errc::contract_violation, "kept indices must be strictly increasing");
        if (!(s.points[m] == original[idx[m]]))
            fail(Errc::contract_violation, "kept point differs from the original");
    }
}

} // namespace detail

/// Places every removed point back on its covering kept segment: by time
/// ratio for GeoTemporal data, by index ratio for Spatial3D data.
inline Trajectory interpolate_to_full_length(const Trajectory& original, const Simplified& s)
{
    detail::check_simplified(original, s);
    std::vector<TrajPoint> out(original.size());
    const auto& idx = s.kept_indices;
    for (std::size_t m = 0; m + 1 < idx.size(); ++m) {
        const std::size_t i = idx[m];
        const std::size_t j = idx[m + 1];
        out[i] = original[i];
        for (std::size_t k = i + 1; k < j; ++k) {
            if (original.mode() == Mode::GeoTemporal) {
                out[k] = interpolate_time_ratio(original[i], original[j], original[k].t());
            } else {
                const double r = static_cast<double>(k - i) / static_cast<double>(j - i);
                for (std::size_t d = 0; d < 3; ++d)
                    out[k][d] = original[i][d] + r * (original[j][d] - original[i][d]);
            }
        }
    }
    out.back() = original.back();
    return Trajectory::unchecked(original.mode(), std::move(out), original.id());
}

/// Samples `other` at each timestamp of `reference` by linear interpolation
/// in time, clamping outside other's time span. `other` must have
/// non-decreasing timestamps.
inline Trajectory time_synchronize(const Trajectory& reference, const Trajectory& other)
{
    if (reference.mode() != Mode::GeoTemporal || other.mode() != Mode::GeoTemporal)
        fail(Errc::mode_mismatch, "time_synchronize needs GeoTemporal trajectories");
    if (other.size() < 2)
        fail(Errc::too_short, "time_synchronize needs at least 2 points to interpolate on");
    std::vector<TrajPoint> out;
    out.reserve(reference.size());
    const auto& pts = other.points();
    for (const auto& r : reference) {
        const double t = r.t();
        TrajPoint p;
        if (t <= pts.front().t()) {
            p = pts.front();
        } else if (t >= pts.back().t()) {
            p = pts.back();
        } else {
            const auto it = std::upper_bound(pts.begin(), pts.end(), t,
                                             [](double v, const TrajPoint& q) { return v < q.t(); });
            const auto& b = *it;
            const auto& a = *(it - 1);
            p = a.t() == t ? a : interpolate_time_ratio(a, b, t);
        }
        p[2] = t;
        out.push_back(p);
    }
    return Trajectory::unchecked(Mode::GeoTemporal, std::move(out), other.id());
}

/// `id,index,<coordinate columns>` rows for each kept point.
inline void write_simplified(std::ostream& os, const std::vector<std::pair<std::string, Simplified>>& items,
                             Mode mode)
{
    os << "id,index," << io::column_names(mode) << '\n';
    for (const auto& [id, s] : items)
        for (std::size_t m = 0; m < s.size(); ++m)
            os << id << ',' << s.kept_indices[m] << ',' << io::format_double(s.points[m][0]) << ','
               << io::format_double(s.points[m][1]) << ',' << io::format_double(s.points[m][2])
               << '\n';
}

} // namespace trajae
