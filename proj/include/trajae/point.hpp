#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace trajae {

/// How the three components of a TrajPoint are interpreted.
///
/// Spatial3D   (x, y, z), sampled at a fixed rate so time is implicit.
/// GeoTemporal (lon, lat, t) with lon/lat in degrees and t in unix seconds.
enum class Mode { Spatial3D, GeoTemporal };

inline const char* to_string(Mode m) noexcept
{
    return m == Mode::Spatial3D ? "spatial3d" : "geotemporal";
}

struct TrajPoint {
    std::array<double, 3> c{};

    constexpr TrajPoint() = default;
    constexpr TrajPoint(double c0, double c1, double c2) : c{c0, c1, c2} {}

    constexpr double& operator[](std::size_t i) { return c[i]; }
    constexpr double operator[](std::size_t i) const { return c[i]; }

    // GeoTemporal accessors
    constexpr double lon() const { return c[0]; }
    constexpr double lat() const { return c[1]; }
    constexpr double t() const { return c[2]; }

    bool finite() const
    {
        return std::isfinite(c[0]) && std::isfinite(c[1]) && std::isfinite(c[2]);
    }

    friend constexpr bool operator==(const TrajPoint&, const TrajPoint&) = default;
};

} // namespace trajae
