#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "support/oracles.hpp"
#include "trajae/geo.hpp"

using namespace trajae;

namespace {

// extended-precision haversine values computed with mpmath (50 digits)
constexpr double beijing_0p1_lon = 8530.4868325417182668598884537363868133384211616952;
constexpr double beijing_diag = 1401.4339446832304137960952702827769030957387923203;
constexpr double equator_0p01 = 1111.9492664455873734580833886040951597344536801899;

GeoCoord deg(double lat, double lon) { return GeoCoord::from_degrees(lat, lon); }

} // namespace

TEST(Euclidean, Examples)
{
    const std::vector<double> o{0, 0, 0}, a{3, 4, 0}, p{1, 2, 3}, q{4, 6, 3};
    EXPECT_EQ(euclidean_distance(o, o), 0.0);
    EXPECT_EQ(euclidean_distance(o, a), 5.0);
    EXPECT_EQ(euclidean_distance(p, q), 5.0);
}

TEST(Euclidean, LengthMismatchThrows)
{
    const std::vector<double> a{1, 2}, b{1, 2, 3};
    try {
        euclidean_distance(a, b);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::dimension_mismatch);
    }
}

TEST(Haversine, Identity) { EXPECT_EQ(haversine_distance(deg(0, 0), deg(0, 0)), 0.0); }

TEST(Haversine, QuarterEquator)
{
    EXPECT_NEAR(haversine_distance(deg(0, 0), deg(0, 90)), 10007543.398010286, 0.1);
}

TEST(Haversine, MatchesExtendedPrecisionOracle)
{
    EXPECT_NEAR(haversine_distance(deg(39.9, 116.3), deg(39.9, 116.4)), beijing_0p1_lon, 1e-7);
    EXPECT_NEAR(haversine_distance(deg(39.9, 116.3), deg(39.91, 116.31)), beijing_diag, 1e-8);
    // the long double oracle used by other tests agrees with the mpmath value
    EXPECT_NEAR(double(oracle::haversine_l(39.9, 116.3, 39.9, 116.4)), beijing_0p1_lon, 1e-7);
}

TEST(Haversine, AntipodalIsClampedAndBounded)
{
    const double d = haversine_distance(deg(0, 0), deg(0, 180));
    EXPECT_TRUE(std::isfinite(d));
    EXPECT_LE(d, std::numbers::pi * 6371000.0 + 1e-6);
}

TEST(Haversine, RadiusIsConfigurable)
{
    EXPECT_NEAR(haversine_distance(deg(0, 0), deg(0, 90), SpherePlanet{1.0}), std::numbers::pi / 2, 1e-15);
}

TEST(Equirect, Examples)
{
    EXPECT_EQ(equirectangular_distance(deg(39.9, 116.3), deg(39.9, 116.3)), 0.0);
    const double eq = equirectangular_distance(deg(0, 0), deg(0, 0.01));
    EXPECT_NEAR(eq / equator_0p01, 1.0, 1e-6);
    const double bj = equirectangular_distance(deg(39.9, 116.3), deg(39.91, 116.31));
    EXPECT_NEAR(bj / beijing_diag, 1.0, 1e-3);
}

TEST(Equirect, FirstLatitudeVariant)
{
    const auto p = deg(39.9, 116.3), q = deg(40.0, 116.4);
    const double first = equirectangular_distance(p, q, {}, EquirectVariant::FirstLatitude);
    const double x = (q.lon - p.lon) * std::cos(p.lat);
    const double y = q.lat - p.lat;
    EXPECT_DOUBLE_EQ(first, 6371000.0 * std::sqrt(x * x + y * y));
}

TEST(GeoProperties, SymmetryIdentityAndAgreement)
{
    Rng rng(17);
    for (int n = 0; n < 2000; ++n) {
        const auto p = deg(rng.uniform(39.75, 40.25), rng.uniform(116.15, 116.65));
        const auto q = deg(rng.uniform(39.75, 40.25), rng.uniform(116.15, 116.65));
        const double h = haversine_distance(p, q);
        const double e = equirectangular_distance(p, q);
        EXPECT_EQ(h, haversine_distance(q, p));
        EXPECT_EQ(e, equirectangular_distance(q, p));
        EXPECT_EQ(haversine_distance(p, p), 0.0);
        EXPECT_EQ(equirectangular_distance(p, p), 0.0);
        if (h > 1.0) {
            EXPECT_LT(std::abs(e - h) / h, 0.005);
        }
        const std::vector<double> a{rng.normal(), rng.normal(), rng.normal()};
        const std::vector<double> b{rng.normal(), rng.normal(), rng.normal()};
        EXPECT_EQ(euclidean_distance(a, b), euclidean_distance(b, a));
        EXPECT_EQ(euclidean_distance(a, a), 0.0);
    }
}

TEST(GeoCoord, RangeValidation)
{
    EXPECT_THROW(GeoCoord::from_degrees(91, 0), Error);
    EXPECT_THROW(GeoCoord::from_degrees(0, 181), Error);
    EXPECT_NO_THROW(GeoCoord::from_degrees(-90, -180));
}

TEST(InterpolateTimeRatio, Examples)
{
    const TrajPoint a{0, 0, 0}, b{2, 4, 10};
    const auto at_a = interpolate_time_ratio(a, b, 0);
    EXPECT_EQ(at_a[0], 0.0);
    EXPECT_EQ(at_a[1], 0.0);
    const auto mid = interpolate_time_ratio(a, b, 5);
    EXPECT_EQ(mid[0], 1.0);
    EXPECT_EQ(mid[1], 2.0);
    const auto q = interpolate_time_ratio(TrajPoint{0, 0, 0}, TrajPoint{10, 0, 4}, 1);
    EXPECT_EQ(q[0], 2.5);
    EXPECT_EQ(q[1], 0.0);
}

TEST(InterpolateTimeRatio, Errors)
{
    const TrajPoint a{0, 0, 0}, b{2, 4, 10};
    try {
        interpolate_time_ratio(a, b, 11);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::out_of_range);
    }
    try {
        interpolate_time_ratio(a, TrajPoint{1, 1, 0}, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::degenerate_segment);
    }
}

TEST(InterpolateTimeRatio, ConvexCombination)
{
    Rng rng(3);
    for (int n = 0; n < 1000; ++n) {
        const TrajPoint a{rng.normal(), rng.normal(), rng.uniform(0, 10)};
        const TrajPoint b{rng.normal(), rng.normal(), a.t() + rng.uniform(0.1, 10)};
        const double t = rng.uniform(a.t(), b.t());
        const auto p = interpolate_time_ratio(a, b, t);
        for (int d = 0; d < 2; ++d) {
            EXPECT_GE(p[d], std::min(a[d], b[d]) - 1e-12);
            EXPECT_LE(p[d], std::max(a[d], b[d]) + 1e-12);
        }
    }
}
