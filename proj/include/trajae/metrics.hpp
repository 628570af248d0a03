#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "trajae/error.hpp"
#include "trajae/geo.hpp"
#include "trajae/trajectory.hpp"

/// Trajectory similarity: mean point-to-point distance, discrete Frechet
/// distance and dynamic time warping (dependent and independent).
namespace trajae {

enum class BaseMetric { Euclidean2D, Euclidean3D, Haversine };

struct MetricConfig {
    BaseMetric base = BaseMetric::Euclidean3D;
    bool spatial_only = true; // drop the t component of GeoTemporal points
    SpherePlanet planet{};
};

/// Point distance selected by `cfg` for trajectories of the given mode.
class PointDistance {
public:
    PointDistance(const MetricConfig& cfg, Mode mode) : cfg_(cfg)
    {
        if (cfg.base == BaseMetric::Haversine && mode != Mode::GeoTemporal)
            fail(Errc::mode_mismatch, "haversine base needs GeoTemporal trajectories");
        dims_ = cfg.base == BaseMetric::Euclidean2D ? 2
                : (mode == Mode::GeoTemporal && cfg.spatial_only) ? 2
                                                                   : 3;
    }

    std::size_t dims() const noexcept { return dims_; }

    double operator()(const TrajPoint& p, const TrajPoint& q) const
    {
        if (cfg_.base == BaseMetric::Haversine)
            return haversine_distance(to_geo(p), to_geo(q), cfg_.planet);
        double sum = 0.0;
        for (std::size_t d = 0; d < dims_; ++d) {
            const double v = q[d] - p[d];
            sum += v * v;
        }
        return std::sqrt(sum);
    }

private:
    MetricConfig cfg_;
    std::size_t dims_ = 3;
};

namespace detail {

/// Rolling-row evaluation of c(i,j) = combine(cost(i,j), best predecessor)
/// over an n x m grid.
template <typename Cost, typename Combine>
double grid_dp_rows(std::size_t n, std::size_t m, const Cost& cost, const Combine& combine)
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(m, inf);
    std::vector<double> cur(m, inf);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double c = cost(i, j);
            if (i == 0 && j == 0) {
                cur[j] = c;
                continue;
            }
            double best = inf;
            if (i > 0)
                best = std::min(best, prev[j]);
            if (j > 0)
                best = std::min(best, cur[j - 1]);
            if (i > 0 && j > 0)
                best = std::min(best, prev[j - 1]);
            cur[j] = combine(c, best);
        }
        std::swap(prev, cur);
    }
    return prev[m - 1];
}

/// The shorter side becomes the row, keeping memory at O(min(n, m)).
template <typename Cost, typename Combine>
double grid_dp(std::size_t n, std::size_t m, const Cost& cost, const Combine& combine)
{
    if (n < m)
        return grid_dp_rows(m, n, [&](std::size_t i, std::size_t j) { return cost(j, i); }, combine);
    return grid_dp_rows(n, m, cost, combine);
}

inline double frechet_combine(double c, double best) { return std::max(c, best); }
inline double dtw_combine(double c, double best) { return c + best; }

} // namespace detail

/// Discrete Frechet distance between two point sequences under `dist`.
template <typename SeqA, typename SeqB, typename Dist>
double discrete_frechet(const SeqA& a, const SeqB& b, const Dist& dist)
{
    if (a.empty() || b.empty())
        fail(Errc::empty_input, "discrete_frechet on an empty sequence");
    return detail::grid_dp(a.size(), b.size(),
                           [&](std::size_t i, std::size_t j) { return dist(a[i], b[j]); },
                           detail::frechet_combine);
}

/// DTW with an arbitrary (possibly multi-dimensional) point distance.
template <typename SeqA, typename SeqB, typename Dist>
double dtw(const SeqA& a, const SeqB& b, const Dist& dist)
{
    if (a.empty() || b.empty())
        fail(Errc::empty_input, "dtw on an empty sequence");
    return detail::grid_dp(a.size(), b.size(),
                           [&](std::size_t i, std::size_t j) { return dist(a[i], b[j]); },
                           detail::dtw_combine);
}

struct WarpingPath {
    double value = 0.0;
    std::vector<std::pair<std::size_t, std::size_t>> links;
};

/// DTW with the full cost matrix kept so one optimal path can be recovered.
/// Ties prefer the diagonal, then i-1, then j-1.
template <typename SeqA, typename SeqB, typename Dist>
WarpingPath dtw_with_path(const SeqA& a, const SeqB& b, const Dist& dist)
{
    if (a.empty() || b.empty())
        fail(Errc::empty_input, "dtw on an empty sequence");
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> c(n * m, inf);
    auto at = [&](std::size_t i, std::size_t j) -> double& { return c[i * m + j]; };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double d = dist(a[i], b[j]);
            if (i == 0 && j == 0) {
                at(i, j) = d;
                continue;
            }
            double best = inf;
            if (i > 0)
                best = std::min(best, at(i - 1, j));
            if (j > 0)
                best = std::min(best, at(i, j - 1));
            if (i > 0 && j > 0)
                best = std::min(best, at(i - 1, j - 1));
            at(i, j) = d + best;
        }
    WarpingPath path;
    path.value = at(n - 1, m - 1);
    std::size_t i = n - 1;
    std::size_t j = m - 1;
    path.links.emplace_back(i, j);
    while (i > 0 || j > 0) {
        if (i > 0 && j > 0 && at(i - 1, j - 1) <= std::min(at(i - 1, j), at(i, j - 1))) {
            --i;
            --j;
        } else if (i > 0 && (j == 0 || at(i - 1, j) <= at(i, j - 1))) {
            --i;
        } else {
            --j;
        }
        path.links.emplace_back(i, j);
    }
    std::reverse(path.links.begin(), path.links.end());
    return path;
}

// ---------------------------------------------------------------------------
// Trajectory-level metrics

inline double mean_pointwise(const Trajectory& a, const Trajectory& b, const MetricConfig& cfg)
{
    if (a.size() != b.size())
        fail(Errc::dimension_mismatch, "mean_pointwise needs trajectories of equal length");
    if (a.empty())
        fail(Errc::empty_input, "mean_pointwise on empty trajectories");
    const PointDistance dist(cfg, a.mode());
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        sum += dist(a[i], b[i]);
    return sum / static_cast<double>(a.size());
}

inline double discrete_frechet(const Trajectory& a, const Trajectory& b, const MetricConfig& cfg)
{
    return discrete_frechet(a.points(), b.points(), PointDistance(cfg, a.mode()));
}

inline double dtw_dependent(const Trajectory& a, const Trajectory& b, const MetricConfig& cfg)
{
    return dtw(a.points(), b.points(), PointDistance(cfg, a.mode()));
}

/// Sum over dimensions of one-dimensional DTW with absolute difference.
/// The dimension count follows the config (t dropped when spatial_only).
inline double dtw_independent(const Trajectory& a, const Trajectory& b, const MetricConfig& cfg)
{
    if (a.empty() || b.empty())
        fail(Errc::empty_input, "dtw on an empty sequence");
    const std::size_t dims = PointDistance(cfg, a.mode()).dims();
    double total = 0.0;
    for (std::size_t d = 0; d < dims; ++d) {
        total += dtw(a.points(), b.points(),
                     [d](const TrajPoint& p, const TrajPoint& q) { return std::abs(p[d] - q[d]); });
    }
    return total;
}

/// DTW_I over explicit per-dimension series (each inner vector is one
/// dimension).
inline double dtw_independent(const std::vector<std::vector<double>>& a,
                              const std::vector<std::vector<double>>& b)
{
    if (a.size() != b.size())
        fail(Errc::dimension_mismatch, "dtw_independent needs equal dimensionality");
    double total = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d)
        total += dtw(a[d], b[d], [](double x, double y) { return std::abs(x - y); });
    return total;
}

} // namespace trajae
