#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "support/oracles.hpp"
#include "trajae/io.hpp"
#include "trajae/trajectory.hpp"

using namespace trajae;

namespace {

Trajectory line3(std::vector<double> xs)
{
    std::vector<TrajPoint> pts;
    for (double x : xs)
        pts.emplace_back(x, 2 * x, -x);
    return Trajectory(Mode::Spatial3D, pts);
}

Trajectory indexed(std::size_t n, std::string id = "t")
{
    std::vector<TrajPoint> pts;
    for (std::size_t i = 0; i < n; ++i)
        pts.emplace_back(double(i), 0.0, 0.0);
    return Trajectory(Mode::Spatial3D, pts, id);
}

} // namespace

TEST(Trajectory, Validation)
{
    EXPECT_THROW(Trajectory(Mode::Spatial3D, {TrajPoint{0, 0, 0}}), Error);
    EXPECT_THROW(Trajectory(Mode::Spatial3D, {TrajPoint{0, 0, 0}, TrajPoint{NAN, 0, 0}}), Error);
    EXPECT_THROW(Trajectory(Mode::GeoTemporal, {TrajPoint{116, 39, 5}, TrajPoint{116, 39, 5}}), Error);
    EXPECT_NO_THROW(Trajectory(Mode::GeoTemporal, {TrajPoint{116, 39, 5}, TrajPoint{116, 39, 6}}));
    // Spatial3D places no ordering requirement on the third component
    EXPECT_NO_THROW(Trajectory(Mode::Spatial3D, {TrajPoint{0, 0, 5}, TrajPoint{0, 0, 1}}));
}

TEST(Normalize, Examples)
{
    const auto nt = normalize(line3({2, 3, 4}));
    EXPECT_EQ(nt.points[0][0], 0.0);
    EXPECT_EQ(nt.points[1][0], 0.5);
    EXPECT_EQ(nt.points[2][0], 1.0);
    EXPECT_EQ(nt.params.offset[0], 2.0);
    EXPECT_EQ(nt.params.scale[0], 2.0);

    const auto c = normalize(Trajectory(Mode::Spatial3D, {TrajPoint{5, 0, 0}, TrajPoint{5, 1, 0},
                                                          TrajPoint{5, 2, 0}}));
    for (const auto& q : c.points)
        EXPECT_EQ(q[0], 0.0);
    EXPECT_EQ(c.params.offset[0], 5.0);
    EXPECT_EQ(c.params.scale[0], 0.0);

    const auto u = normalize(Trajectory(Mode::Spatial3D, {TrajPoint{0, 0, 0}, TrajPoint{1, 1, 1}}));
    EXPECT_EQ(u.points[0], (Triple{0, 0, 0}));
    EXPECT_EQ(u.points[1], (Triple{1, 1, 1}));
    EXPECT_EQ(u.params.offset, (std::array<double, 3>{0, 0, 0}));
    EXPECT_EQ(u.params.scale, (std::array<double, 3>{1, 1, 1}));
    EXPECT_EQ(NormParams::value_count, 6u);
}

TEST(Normalize, TooShort)
{
    const auto one = Trajectory::unchecked(Mode::Spatial3D, {TrajPoint{1, 2, 3}});
    try {
        normalize(one);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::too_short);
    }
}

TEST(Denormalize, Examples)
{
    NormalizedTrajectory nt;
    nt.points = {{0, 0, 0}, {0.5, 0, 0}, {1, 0, 0}};
    nt.params.offset = {2, 5, 5};
    nt.params.scale = {2, 0, 0};
    const auto t = denormalize(nt);
    EXPECT_EQ(t[0][0], 2.0);
    EXPECT_EQ(t[1][0], 3.0);
    EXPECT_EQ(t[2][0], 4.0);
    for (const auto& p : t) {
        EXPECT_EQ(p[1], 5.0);
        EXPECT_EQ(p[2], 5.0);
    }
}

TEST(Normalize, RoundTripAndRangeProperty)
{
    Rng rng(99);
    for (int n = 0; n < 300; ++n) {
        const bool geo = n % 2 == 1;
        const auto t = geo ? oracle::random_geo(rng, 2 + rng.below(40))
                           : oracle::random_spatial(rng, 2 + rng.below(40), 1e3);
        const auto nt = normalize(t);
        for (const auto& q : nt.points)
            for (double v : q) {
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0);
            }
        for (double s : nt.params.scale)
            EXPECT_GE(s, 0.0);
        const auto back = denormalize(nt);
        ASSERT_EQ(back.size(), t.size());
        for (std::size_t i = 0; i < t.size(); ++i)
            for (std::size_t d = 0; d < 3; ++d)
                EXPECT_LE(std::abs(back[i][d] - t[i][d]), 1e-9 * std::max(1.0, std::abs(t[i][d])));
        // normalize after denormalize reproduces the normalized values
        const auto again = normalize(back);
        for (std::size_t i = 0; i < t.size(); ++i)
            for (std::size_t d = 0; d < 3; ++d)
                EXPECT_NEAR(again.points[i][d], nt.points[i][d], 1e-9);
    }
}

TEST(Chunk, Examples)
{
    EXPECT_EQ(chunk(indexed(45), 20).size(), 2u);
    EXPECT_EQ(chunk(indexed(40), 40).size(), 1u);
    EXPECT_EQ(chunk(indexed(19), 20).size(), 0u);
    const auto cs = chunk(indexed(45), 20);
    EXPECT_EQ(cs[1][0][0], 20.0);
    EXPECT_EQ(cs[1].back()[0], 39.0);
    EXPECT_THROW(chunk(indexed(5), 1), Error);
}

TEST(SlidingWindows, ExamplesAndOverlap)
{
    EXPECT_EQ(sliding_windows(indexed(22), 20).size(), 3u);
    const auto one = sliding_windows(indexed(20), 20);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_TRUE(one[0] == indexed(20));
    EXPECT_TRUE(sliding_windows(indexed(19), 20).empty());
    for (std::size_t n = 2; n < 30; ++n)
        for (std::size_t len = 2; len < 12; ++len) {
            const auto w = sliding_windows(indexed(n), len);
            EXPECT_EQ(w.size(), n >= len ? n - len + 1 : 0u);
            for (std::size_t i = 1; i < w.size(); ++i)
                for (std::size_t k = 0; k + 1 < len; ++k)
                    EXPECT_EQ(w[i][k], w[i - 1][k + 1]);
        }
}

TEST(Split, EqualLengths)
{
    std::vector<Trajectory> ts;
    for (int i = 0; i < 10; ++i)
        ts.push_back(indexed(20, "t" + std::to_string(i)));
    const auto s = split_train_test(ts, 0.9, 5);
    EXPECT_EQ(s.train.size(), 9u);
    EXPECT_EQ(s.test.size(), 1u);
}

TEST(Split, DeterministicPartition)
{
    Rng rng(4);
    std::vector<Trajectory> ts;
    for (int i = 0; i < 200; ++i)
        ts.push_back(indexed(5 + rng.below(60), "t" + std::to_string(i)));
    const auto a = split_train_test(ts, 0.9, 11);
    const auto b = split_train_test(ts, 0.9, 11);
    ASSERT_EQ(a.train.size(), b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i)
        EXPECT_EQ(a.train[i].id(), b.train[i].id());

    std::multiset<std::string> all, parts;
    std::size_t total = 0, train_pts = 0;
    for (const auto& t : ts) {
        all.insert(t.id());
        total += t.size();
    }
    for (const auto& t : a.train) {
        parts.insert(t.id());
        train_pts += t.size();
    }
    for (const auto& t : a.test)
        parts.insert(t.id());
    EXPECT_EQ(all, parts);
    const double share = double(train_pts) / double(total);
    EXPECT_GE(share, 0.88);
    EXPECT_LE(share, 0.92);
}

TEST(Split, Errors)
{
    try {
        split_train_test({indexed(3)}, 0.5, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::cannot_split);
    }
    EXPECT_THROW(split_train_test({indexed(3), indexed(3)}, 1.0, 1), Error);
}

TEST(Rng, DeterministicStreams)
{
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i)
        EXPECT_EQ(a.next(), b.next());
    Rng c(5);
    for (int i = 0; i < 10000; ++i) {
        const double u = c.uniform();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
        EXPECT_LT(c.below(7), 7u);
    }
    std::vector<int> v{1, 2, 3, 4, 5, 6}, w = v;
    Rng s1(8), s2(8);
    s1.shuffle(v);
    s2.shuffle(w);
    EXPECT_EQ(v, w);
    std::sort(v.begin(), v.end());
    EXPECT_EQ(v, (std::vector<int>{1, 2, 3, 4, 5, 6}));
}

TEST(Io, CsvRoundTripBothModes)
{
    Rng rng(21);
    for (Mode mode : {Mode::Spatial3D, Mode::GeoTemporal}) {
        std::vector<Trajectory> ts;
        for (int k = 0; k < 3; ++k) {
            auto t = mode == Mode::Spatial3D ? oracle::random_spatial(rng, 7) : oracle::random_geo(rng, 7);
            t.set_id("tr" + std::to_string(k));
            ts.push_back(t);
        }
        std::stringstream ss;
        io::write_trajectories(ss, ts, mode);
        const auto f = io::read_trajectories(ss);
        EXPECT_EQ(f.mode, mode);
        ASSERT_EQ(f.trajectories.size(), 3u);
        for (int k = 0; k < 3; ++k) {
            EXPECT_TRUE(f.trajectories[k] == ts[k]); // shortest round-trip formatting is exact
            EXPECT_EQ(f.trajectories[k].id(), ts[k].id());
        }
    }
}

TEST(Io, HeaderWithoutIdAndErrors)
{
    std::stringstream ok("lon,lat,t\n116.1,39.9,1\n116.2,39.9,2\n");
    const auto f = io::read_trajectories(ok);
    EXPECT_EQ(f.mode, Mode::GeoTemporal);
    ASSERT_EQ(f.trajectories.size(), 1u);
    EXPECT_EQ(f.trajectories[0].size(), 2u);

    std::stringstream bad_header("x,y,z\n1,2,3\n");
    EXPECT_THROW(io::read_trajectories(bad_header), Error);
    std::stringstream bad_num("c0,c1,c2\n1,2,abc\n");
    EXPECT_THROW(io::read_trajectories(bad_num), Error);
    EXPECT_THROW(io::read_trajectories_file("/nonexistent/dir/file.csv"), Error);
}
