#include <gtest/gtest.h>

#include <sstream>
#include <vector>

#include "support/taxi_fixture.hpp"
#include "trajae/experiment.hpp"
#include "trajae/preprocess.hpp"

using namespace trajae;
using namespace trajae::preprocess;

namespace {

FixRun times(std::vector<double> ts)
{
    FixRun out;
    double lon = 116.3;
    for (double t : ts) {
        out.push_back({"x", t, lon, 39.9});
        lon += 0.0001;
    }
    return out;
}

std::vector<double> ts_of(const FixRun& r)
{
    std::vector<double> out;
    for (const auto& f : r)
        out.push_back(f.t);
    return out;
}

/// Drive east at about 10 m/s with 30 s spacing, with `slow` stationary
/// fixes inserted after the 5th point.
FixRun drive_with_stop(std::size_t slow)
{
    FixRun out;
    double t = 0, lon = 116.3;
    for (int k = 0; k < 5; ++k, t += 30, lon += 0.0035)
        out.push_back({"v", t, lon, 39.9});
    const double stop = out.back().lon;
    for (std::size_t k = 0; k < slow; ++k, t += 30)
        out.push_back({"v", t, stop, 39.9});
    for (int k = 0; k < 5; ++k, t += 30, lon += 0.0035)
        out.push_back({"v", t, lon, 39.9});
    return out;
}

} // namespace

TEST(ParseTaxiLog, ExampleLine)
{
    std::istringstream in("1,2008-02-02 15:36:08,116.51172,39.92123\n");
    const auto r = parse_taxi_log(in);
    ASSERT_EQ(r.fixes.size(), 1u);
    EXPECT_EQ(r.fixes[0].entity_id, "1");
    EXPECT_EQ(r.fixes[0].t, 1201966568.0); // python calendar.timegm
    EXPECT_EQ(r.fixes[0].lon, 116.51172);
    EXPECT_EQ(r.fixes[0].lat, 39.92123);
    EXPECT_EQ(r.malformed, 0u);
}

TEST(ParseTaxiLog, EmptyAndMalformed)
{
    std::istringstream empty("");
    EXPECT_TRUE(parse_taxi_log(empty).fixes.empty());

    std::istringstream some("1,2008-02-02 15:36:08,116.5,39.9\n"
                            "1,2008-02-02 15:36:18,116.5,abc\n"
                            "1,2008-02-02 15:36:28,116.5,39.9\n");
    const auto r = parse_taxi_log(some);
    EXPECT_EQ(r.fixes.size(), 2u);
    EXPECT_EQ(r.malformed, 1u);

    std::istringstream mostly_bad("x\ny\n1,2008-02-02 15:36:08,116.5,39.9\n");
    try {
        parse_taxi_log(mostly_bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::format);
    }
}

TEST(ParseTaxiLog, TimestampValidation)
{
    double t = 0;
    EXPECT_TRUE(parse_timestamp("1970-01-01 00:00:00", t));
    EXPECT_EQ(t, 0.0);
    EXPECT_TRUE(parse_timestamp("2000-02-29 12:00:00", t));
    EXPECT_EQ(t, 951825600.0);
    EXPECT_FALSE(parse_timestamp("2001-02-29 12:00:00", t));
    EXPECT_FALSE(parse_timestamp("2008-02-02T15:36:08", t));
    EXPECT_FALSE(parse_timestamp("2008-02-02 25:36:08", t));
}

TEST(MonotonicTime, Examples)
{
    EXPECT_EQ(ts_of(enforce_monotonic_time(times({0, 10, 10, 20}))), (std::vector<double>{0, 10, 20}));
    EXPECT_EQ(ts_of(enforce_monotonic_time(times({0, 5, 3, 8}))), (std::vector<double>{0, 5, 8}));
    EXPECT_EQ(ts_of(enforce_monotonic_time(times({1, 2, 3}))), (std::vector<double>{1, 2, 3}));
}

TEST(BBox, Examples)
{
    const PreprocessConfig cfg;
    const FixRun in{{"a", 0, 0.0, 0.0}, {"a", 1, 116.4, 39.9}, {"a", 2, 115.4, 41.1}};
    PreprocessStats st;
    const auto out = filter_bbox(in, cfg, &st);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].lat, 39.9);
    EXPECT_EQ(out[1].lat, 41.1); // closed interval
    EXPECT_EQ(st.bbox_dropped, 1u);
}

TEST(Speed, Examples)
{
    const RawFix a{"a", 0, 0, 0}, same{"a", 10, 0, 0}, east{"a", 10, 0.001, 0};
    EXPECT_EQ(speed_between(a, same), 0.0);
    // 111.19492664455873734 m by the extended-precision haversine oracle
    EXPECT_NEAR(speed_between(a, east), 11.119492664455873734, 1e-9);
    try {
        speed_between(a, RawFix{"a", 0, 1, 1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::contract_violation);
    }
}

TEST(Gaps, Examples)
{
    const PreprocessConfig cfg;
    EXPECT_EQ(split_on_gaps(times({0, 10, 7211, 7221}), cfg).size(), 2u);
    EXPECT_EQ(split_on_gaps(times({0, 7200, 7210}), cfg).size(), 1u);
    PreprocessStats st;
    const auto runs = split_on_gaps(times({0, 10, 20, 8000}), cfg, &st);
    ASSERT_EQ(runs.size(), 1u);
    EXPECT_EQ(runs[0].size(), 3u);
    EXPECT_EQ(st.short_runs_discarded, 1u);
}

TEST(Idle, Examples)
{
    const PreprocessConfig cfg;
    PreprocessStats st;
    const auto runs = remove_idle_and_split(drive_with_stop(12), cfg, &st);
    ASSERT_EQ(runs.size(), 2u);
    EXPECT_EQ(runs[0].size(), 5u);
    EXPECT_EQ(runs[1].size(), 5u);
    EXPECT_EQ(st.idle_points_removed, 12u);

    EXPECT_EQ(remove_idle_and_split(drive_with_stop(5), cfg).size(), 1u);
    // exactly idle_run slow points is still allowed
    EXPECT_EQ(remove_idle_and_split(drive_with_stop(10), cfg).size(), 1u);
    EXPECT_EQ(remove_idle_and_split(drive_with_stop(11), cfg).size(), 2u);

    FixRun parked;
    for (int k = 0; k < 20; ++k)
        parked.push_back({"p", 30.0 * k, 116.3, 39.9});
    // the first fix has no incoming segment and is left as a 1-point run
    EXPECT_TRUE(remove_idle_and_split(parked, cfg).empty());
}

TEST(SpeedOutliers, Examples)
{
    const PreprocessConfig cfg;
    FixRun hop;
    for (int k = 0; k < 4; ++k)
        hop.push_back({"h", 10.0 * k, 116.3 + 0.001 * k, 39.9});
    // 600 m north in 10 s = 60 m/s
    for (int k = 0; k < 4; ++k)
        hop.push_back({"h", 40.0 + 10.0 * k, 116.3 + 0.001 * (4 + k), 39.9 + 600.0 / 111194.93});
    EXPECT_EQ(split_on_speed_outliers(hop, cfg).size(), 2u);

    FixRun calm;
    for (int k = 0; k < 6; ++k)
        calm.push_back({"c", 10.0 * k, 116.3 + 0.001 * k, 39.9});
    EXPECT_EQ(split_on_speed_outliers(calm, cfg).size(), 1u);

    FixRun zig;
    for (int k = 0; k < 30; ++k)
        zig.push_back({"z", 10.0 * k, 116.3 + 0.0005 * k + (k % 3 == 0 ? 0.01 : 0.0), 39.9});
    for (const auto& run : split_on_speed_outliers(zig, cfg))
        for (std::size_t i = 1; i < run.size(); ++i)
            EXPECT_LE(speed_between(run[i - 1], run[i]), cfg.max_speed);
}

TEST(Pipeline, HandBuiltFixture)
{
    const auto fx = fixture::taxi_log();
    PreprocessStats st;
    const auto out = preprocess_entity(fx.fixes, PreprocessConfig{}, &st);
    ASSERT_EQ(out.size(), fx.expected.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        ASSERT_EQ(out[k].size(), fx.expected[k].size()) << "trajectory " << k;
        for (std::size_t i = 0; i < out[k].size(); ++i) {
            EXPECT_EQ(out[k][i].lon(), fx.expected[k][i].lon);
            EXPECT_EQ(out[k][i].lat(), fx.expected[k][i].lat);
            EXPECT_EQ(out[k][i].t(), fx.expected[k][i].t);
        }
    }
    EXPECT_EQ(st.input_fixes, 42u);
    EXPECT_EQ(st.bbox_dropped, 1u);
    EXPECT_EQ(st.non_monotonic_dropped, 1u);
    EXPECT_EQ(st.gap_splits, 1u);
    EXPECT_EQ(st.idle_blocks_removed, 1u);
    EXPECT_EQ(st.idle_points_removed, 12u);
    EXPECT_EQ(st.speed_splits, 2u);
    EXPECT_EQ(st.short_runs_discarded, 1u);
    EXPECT_EQ(st.short_run_points_discarded, 1u);
    EXPECT_EQ(st.trajectories_out, 4u);
    EXPECT_EQ(st.points_out, 27u);
}

TEST(Pipeline, TextRoundTrip)
{
    const auto fx = fixture::taxi_log();
    std::stringstream ss;
    write_taxi_log(ss, fx.fixes);
    const auto parsed = parse_taxi_log(ss);
    EXPECT_EQ(parsed.malformed, 0u);
    ASSERT_EQ(parsed.fixes.size(), fx.fixes.size());
    EXPECT_EQ(preprocess_log(parsed.fixes, {}).trajectories.size(), 4u);
}

TEST(Pipeline, EdgeCases)
{
    EXPECT_TRUE(preprocess_entity({{"o", 0, 0, 0}, {"o", 10, 0.001, 0}}, {}).empty());
    FixRun clean;
    for (int k = 0; k < 50; ++k)
        clean.push_back({"c", 30.0 * k, 116.3 + 0.003 * k, 39.9});
    EXPECT_EQ(preprocess_entity(clean, {}).size(), 1u);
}

TEST(Pipeline, InvariantsIdempotenceAndDeterminism)
{
    experiment::CorpusOptions opt;
    opt.p_idle = opt.p_gap = opt.p_spike = 0.5;
    const auto log = experiment::synthetic_taxi_log(60, 77, opt);
    const PreprocessConfig cfg;
    const auto a = preprocess_log(log, cfg);
    const auto b = preprocess_log(log, cfg);
    ASSERT_EQ(a.trajectories.size(), b.trajectories.size());
    EXPECT_TRUE(a.stats == b.stats);
    ASSERT_FALSE(a.trajectories.empty());
    for (std::size_t k = 0; k < a.trajectories.size(); ++k) {
        const auto& t = a.trajectories[k];
        EXPECT_TRUE(t == b.trajectories[k]);
        FixRun run;
        for (std::size_t i = 0; i < t.size(); ++i) {
            run.push_back({"e", t[i].t(), t[i].lon(), t[i].lat()});
            if (i == 0)
                continue;
            EXPECT_GT(t[i].t(), t[i - 1].t());
            EXPECT_LE(t[i].t() - t[i - 1].t(), cfg.max_gap);
            EXPECT_LE(speed_between(run[i - 1], run[i]), cfg.max_speed);
        }
        // no slow block longer than idle_run survives
        std::size_t slow = 0;
        for (std::size_t i = 1; i < run.size(); ++i) {
            slow = speed_between(run[i - 1], run[i]) < cfg.idle_speed ? slow + 1 : 0;
            EXPECT_LE(slow, cfg.idle_run);
        }
        // each output trajectory is a fixed point of the pipeline
        const auto again = preprocess_entity(run, cfg);
        ASSERT_EQ(again.size(), 1u);
        EXPECT_TRUE(again[0] == t);
    }
}

TEST(Pipeline, SyntheticSpikeIsSplit)
{
    experiment::CorpusOptions opt;
    opt.p_idle = opt.p_gap = opt.p_out_of_bbox = opt.p_time_glitch = 0.0;
    opt.p_spike = 1.0;
    const auto res = preprocess_log(experiment::synthetic_taxi_log(5, 3, opt), {});
    EXPECT_EQ(res.stats.speed_splits, 10u); // into and out of each spike
    EXPECT_EQ(res.trajectories.size(), 10u);
}
