#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "auscultrl/auscultrl.hpp"
#include "../support/oracles.hpp"

using namespace auscultrl;

namespace {

ProbabilityRaster one_breath(std::size_t frames) {
    auto r = ProbabilityRaster::zeros(frames);
    return r;
}

} // namespace

TEST(FeatureLayout, IndexOrder) {
    EXPECT_EQ(feature_index(Phenomenon::Wheeze, BreathPhase::Inspiration, EventStatistic::MaxProbability), 0u);
    EXPECT_EQ(feature_index(Phenomenon::Wheeze, BreathPhase::Expiration, EventStatistic::MaxProbability), 1u);
    EXPECT_EQ(feature_index(Phenomenon::Wheeze, BreathPhase::Inspiration, EventStatistic::RelativeDuration), 2u);
    EXPECT_EQ(feature_index(Phenomenon::Wheeze, BreathPhase::Expiration, EventStatistic::RelativeDuration), 3u);
    EXPECT_EQ(feature_index(Phenomenon::Crackle, BreathPhase::Inspiration, EventStatistic::MaxProbability), 4u);
    EXPECT_EQ(feature_index(Phenomenon::Crackle, BreathPhase::Expiration, EventStatistic::RelativeDuration), 7u);
}

TEST(Segmentation, FindsMaximalRuns) {
    std::vector<double> row{0.1, 0.6, 0.7, 0.2, 0.5, 0.4, 0.9};
    auto ev = segment_events(row, 0.5);
    ASSERT_EQ(ev.size(), 3u);
    EXPECT_EQ(ev[0].start, 1u);
    EXPECT_EQ(ev[0].end, 2u);
    EXPECT_EQ(ev[1].start, 4u);
    EXPECT_EQ(ev[1].end, 4u);
    EXPECT_EQ(ev[2].start, 6u);
    EXPECT_EQ(ev[2].end, 6u);
}

TEST(Segmentation, AllBelowThresholdHasNoEvents) {
    std::vector<double> row(10, 0.49);
    EXPECT_TRUE(segment_events(row, 0.5).empty());
}

TEST(Segmentation, EmptyRowRejected) {
    std::vector<double> row;
    EXPECT_THROW(segment_events(row, 0.5), PreconditionError);
}

TEST(ExtractFeatures, SingleWheezeEvent) {
    // one inspiration of 10 frames, wheeze >= 0.5 on 4 of them with peak 0.9
    auto r = one_breath(12);
    for (std::size_t t = 1; t <= 10; ++t) r.row(RasterClass::Inspiration)[t] = 0.8;
    r.row(RasterClass::Wheeze)[3] = 0.6;
    r.row(RasterClass::Wheeze)[4] = 0.9;
    r.row(RasterClass::Wheeze)[5] = 0.7;
    r.row(RasterClass::Wheeze)[6] = 0.5;
    r.row(RasterClass::Wheeze)[11] = 1.0; // outside any event
    const auto f = extract_features(r);
    EXPECT_DOUBLE_EQ(f.at(Phenomenon::Wheeze, BreathPhase::Inspiration, EventStatistic::MaxProbability), 0.9);
    EXPECT_DOUBLE_EQ(f.at(Phenomenon::Wheeze, BreathPhase::Inspiration, EventStatistic::RelativeDuration), 0.4);
    EXPECT_DOUBLE_EQ(f.at(Phenomenon::Crackle, BreathPhase::Inspiration, EventStatistic::MaxProbability), 0.0);
    for (std::size_t i : {1u, 3u, 5u, 7u}) EXPECT_EQ(f[i], 0.0) << "expiration feature " << i;
}

TEST(ExtractFeatures, UnweightedAverageOverEvents) {
    // two expirations of different lengths: durations 1/2 and 1/4 average to 3/8
    auto r = one_breath(10);
    for (std::size_t t : {0u, 1u}) r.row(RasterClass::Expiration)[t] = 1.0;
    for (std::size_t t : {4u, 5u, 6u, 7u}) r.row(RasterClass::Expiration)[t] = 1.0;
    r.row(RasterClass::Crackle)[0] = 0.8;
    r.row(RasterClass::Crackle)[4] = 0.6;
    const auto f = extract_features(r);
    EXPECT_DOUBLE_EQ(f.at(Phenomenon::Crackle, BreathPhase::Expiration, EventStatistic::RelativeDuration), 0.375);
    EXPECT_DOUBLE_EQ(f.at(Phenomenon::Crackle, BreathPhase::Expiration, EventStatistic::MaxProbability), 0.7);
}

TEST(ExtractFeatures, NoEventsGivesZeros) {
    auto r = one_breath(20);
    for (auto& v : r.row(RasterClass::Wheeze)) v = 1.0;
    const auto f = extract_features(r);
    for (double v : f.values) EXPECT_EQ(v, 0.0);
}

TEST(ExtractFeatures, NoiseRowIgnored) {
    Rng rng(4);
    auto r = oracle::random_raster(rng, 40);
    const auto before = extract_features(r);
    for (auto& v : r.row(RasterClass::Noise)) v = uniform(rng, 0.0, 1.0);
    EXPECT_EQ(extract_features(r), before);
}

TEST(ExtractFeatures, ThresholdIsInclusive) {
    auto r = one_breath(4);
    r.row(RasterClass::Inspiration)[1] = 0.5;
    r.row(RasterClass::Wheeze)[1] = 0.5;
    const auto f = extract_features(r);
    EXPECT_EQ(f[0], 0.5);
    EXPECT_EQ(f[2], 1.0);
}

TEST(ExtractFeatures, MatchesBruteForceOracle) {
    Rng rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const auto frames = static_cast<std::size_t>(uniform_int(rng, 1, 50));
        const double thr = trial % 3 == 0 ? uniform(rng, 0.05, 0.95) : 0.5;
        const auto r = oracle::random_raster(rng, frames, thr);
        const auto got = extract_features(r, FeatureConfig{thr, thr});
        const auto want = oracle::features(r, thr, thr);
        for (std::size_t i = 0; i < kFeatureCount; ++i) ASSERT_NEAR(got[i], want[i], 1e-9) << "trial " << trial;
        EXPECT_TRUE(got.in_unit_range());
    }
}

TEST(RasterValidation, RejectsRaggedAndOutOfRange) {
    auto r = ProbabilityRaster::zeros(5);
    r.rows[3].pop_back();
    EXPECT_THROW(extract_features(r), StructureError);
    auto s = ProbabilityRaster::zeros(5);
    s.rows[2][1] = 1.5;
    EXPECT_THROW(extract_features(s), RangeError);
    auto e = ProbabilityRaster::zeros(0);
    EXPECT_THROW(extract_features(e), Error);
}

TEST(FeatureConfig, RejectsBadThreshold) {
    auto r = ProbabilityRaster::zeros(5);
    EXPECT_THROW(extract_features(r, FeatureConfig{1.5, 0.5}), ConfigError);
}

TEST(RasterJson, RoundTrip) {
    Rng rng(2);
    const auto r = oracle::random_raster(rng, 17);
    const auto back = raster_from_json(raster_to_json(r));
    EXPECT_EQ(back.rows, r.rows);
    const auto path = std::filesystem::temp_directory_path() / "auscultrl_raster_rt.json";
    save_raster(r, path);
    EXPECT_EQ(load_raster(path).rows, r.rows);
    std::filesystem::remove(path);
}

TEST(RasterJson, MalformedInputs) {
    EXPECT_THROW(parse_raster("{not json"), FormatError);
    EXPECT_THROW(parse_raster(R"({"frame_count":2,"frame_duration_s":0.01,"rows":[[0,0],[0,0]]})"), StructureError);
    EXPECT_THROW(parse_raster(R"({"frame_count":3,"frame_duration_s":0.01,"rows":[[0,0],[0,0],[0,0],[0,0],[0,0]]})"),
                 StructureError);
    EXPECT_THROW(parse_raster(R"({"frame_count":1,"frame_duration_s":0.01,"rows":[[2],[0],[0],[0],[0]]})"), RangeError);
    EXPECT_THROW(load_raster("/nonexistent/raster.json"), Error);
}

TEST(RenderRaster, ReproducesLatentProfile) {
    CohortConfig cfg;
    cfg.noise_sigma = 0.0;
    cfg.seed = 21;
    const auto exams = generate_cohort(60, cfg);
    Rng rng(5);
    for (const auto& e : exams) {
        for (int p = 1; p <= kPointCount; ++p) {
            const auto f = extract_features(render_raster(e, p, rng));
            for (std::size_t i = 0; i < kFeatureCount; ++i)
                ASSERT_NEAR(f[i], e.profile(p)[i], 0.05) << e.id << " point " << p << " feature " << i;
        }
    }
}

TEST(RenderRaster, ZeroLatentHasBreathingButNoPathology) {
    Examination e;
    e.noise_sigma = 0.0;
    Rng rng(1);
    const auto r = render_raster(e, 3, rng);
    EXPECT_FALSE(segment_events(r.row(RasterClass::Inspiration), 0.5).empty());
    EXPECT_FALSE(segment_events(r.row(RasterClass::Expiration), 0.5).empty());
    for (double v : extract_features(r).values) EXPECT_EQ(v, 0.0);
}

TEST(RenderRaster, SpecificLatentRecovered) {
    Examination e;
    e.noise_sigma = 0.0;
    e.profiles[0][0] = 0.9;
    e.profiles[0][2] = 1.0;
    Rng rng(8);
    const auto f = extract_features(render_raster(e, 1, rng));
    EXPECT_NEAR(f[0], 0.9, 0.05);
    EXPECT_NEAR(f[2], 1.0, 0.05);
}
