#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>

#include "trajae/error.hpp"
#include "trajae/point.hpp"

namespace trajae {

inline constexpr double deg_to_rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad_to_deg(double rad) noexcept { return rad * 180.0 / std::numbers::pi; }

/// Latitude/longitude in radians.
struct GeoCoord {
    double lat = 0.0;
    double lon = 0.0;

    static GeoCoord from_degrees(double lat_deg, double lon_deg)
    {
        GeoCoord g{deg_to_rad(lat_deg), deg_to_rad(lon_deg)};
        if (!g.valid())
            fail(Errc::out_of_range, "coordinate outside [-90,90]x[-180,180] degrees");
        return g;
    }

    bool valid() const noexcept
    {
        constexpr double half_pi = std::numbers::pi / 2;
        return lat >= -half_pi && lat <= half_pi && lon >= -std::numbers::pi &&
               lon <= std::numbers::pi;
    }
};

struct SpherePlanet {
    double radius = 6371000.0; // mean earth radius, meters
};

/// Reference latitude used to shrink longitude differences.
enum class EquirectVariant { MeanLatitude, FirstLatitude };

/// (lon, lat) degrees of a GeoTemporal point to radians. No range check; this
/// runs in hot loops on data that was validated at ingest.
inline GeoCoord to_geo(const TrajPoint& p) noexcept
{
    return GeoCoord{deg_to_rad(p.lat()), deg_to_rad(p.lon())};
}

inline double euclidean_distance(std::span<const double> p, std::span<const double> q)
{
    if (p.size() != q.size())
        fail(Errc::dimension_mismatch, "euclidean_distance on sequences of different length");
    if (p.empty())
        fail(Errc::dimension_mismatch, "euclidean_distance needs at least one component");
    double sum = 0.0;
    for (std::size_t m = 0; m < p.size(); ++m) {
        const double d = q[m] - p[m];
        sum += d * d;
    }
    return std::sqrt(sum);
}

inline double haversine_distance(const GeoCoord& p, const GeoCoord& q,
                                 const SpherePlanet& planet = {}) noexcept
{
    const double sdlat = std::sin((q.lat - p.lat) / 2);
    const double sdlon = std::sin((q.lon - p.lon) / 2);
    double h = sdlat * sdlat + std::cos(p.lat) * std::cos(q.lat) * sdlon * sdlon;
    h = std::clamp(h, 0.0, 1.0);
    return 2.0 * planet.radius * std::asin(std::sqrt(h));
}

inline double equirectangular_distance(const GeoCoord& p, const GeoCoord& q,
                                       const SpherePlanet& planet = {},
                                       EquirectVariant variant = EquirectVariant::MeanLatitude) noexcept
{
    const double ref = variant == EquirectVariant::MeanLatitude ? (p.lat + q.lat) / 2 : p.lat;
    const double x = (q.lon - p.lon) * std::cos(ref);
    const double y = q.lat - p.lat;
    return planet.radius * std::sqrt(x * x + y * y);
}

/// Position at time `t` on the segment a->b, placed by time ratio. Components
/// 0 and 1 are interpolated; component 2 of the result is `t` itself.
inline TrajPoint interpolate_time_ratio(const TrajPoint& a, const TrajPoint& b, double t)
{
    if (!(a.t() < b.t()))
        fail(Errc::degenerate_segment, "interpolate_time_ratio needs a.t < b.t");
    if (t < a.t() || t > b.t())
        fail(Errc::out_of_range, "interpolation time outside the segment");
    const double r = (t - a.t()) / (b.t() - a.t());
    return TrajPoint{a[0] + r * (b[0] - a[0]), a[1] + r * (b[1] - a[1]), t};
}

} // namespace trajae
