#include "plax/core.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <random>

namespace plax {
namespace {

// 15 sorted keys with 28 at 0-based rank 7 (1-based index 8), the setup of
// the worked single-segment example.
const std::vector<Key> kFifteen = {2,  5,  9,  13, 17, 21, 23, 28,
                                   31, 35, 39, 44, 47, 52, 55};

TEST(Predict, WorkedExample) {
    // One segment (s = 23, alpha = 0.46, beta = 6.54) queried at 28 predicts
    // 0.46 * 5 + 6.54 = 8.84, floored to 8 (1-based values).
    PlaModel model{{{23, 0.46, 6.54}}, 1, 15};
    double p = predict(model, 28);
    EXPECT_NEAR(p, 8.84, 1e-12);
    EXPECT_EQ(std::floor(p), 8.0);
}

TEST(Predict, IdentityLineAtStartKey) {
    PlaModel model{{{0, 1.0, 0.0}}, 1, 1};
    EXPECT_EQ(predict(model, 0), 0.0);
}

TEST(Predict, SecondSegmentGoverns) {
    PlaModel model{{{0, 1.0, 0.0}, {100, 2.0, 100.0}}, 1, 201};
    EXPECT_EQ(predict(model, 150), 200.0);
    EXPECT_EQ(predict(model, 100), 100.0);  // boundary belongs to segment 2
    EXPECT_EQ(predict(model, 99), 99.0);
}

TEST(Predict, KeysBelowFirstSegmentUseIt) {
    PlaModel model{{{10, 1.0, 5.0}}, 1, 10};
    EXPECT_EQ(predict(model, 8), 3.0);
}

TEST(Predict, EmptyModelThrows) {
    PlaModel model{{}, 1, 0};
    EXPECT_THROW(predict(model, 1), std::invalid_argument);
}

TEST(Predict, Deterministic) {
    PlaModel model{{{3, 0.371, 12.25}, {900, 1.5, 40.0}}, 2, 100};
    for (Key q : {Key{0}, Key{3}, Key{899}, Key{900}, Key{100000}}) {
        double a = predict(model, q);
        double b = predict(model, q);
        EXPECT_EQ(a, b);
    }
}

TEST(GoverningSegment, MatchesExhaustiveScan) {
    std::mt19937_64 rng(7);
    std::vector<Segment> segs;
    Key s = 0;
    for (int i = 0; i < 9; ++i) {
        s += 1 + rng() % 50;
        segs.push_back({s, 1.0, static_cast<double>(i)});
    }
    PlaModel model{segs, 1, 100};
    for (Key q = 0; q < s + 20; ++q) {
        std::size_t expected = 0;
        for (std::size_t j = 0; j < segs.size(); ++j)
            if (segs[j].s <= q)
                expected = j;
        EXPECT_EQ(governing_segment(model, q), expected) << "q=" << q;
    }
}

TEST(LastMile, FindsKeyInsideWindow) {
    // center = floored prediction 8 converted to 0-based = 7; the window
    // under eps = 1 spans 0-based ranks [6, 8] (1-based [7, 9]).
    auto r = last_mile_search(kFifteen, 28, 7, 1);
    EXPECT_TRUE(r.found);
    EXPECT_EQ(r.rank, 7u);
}

TEST(LastMile, Singleton) {
    std::vector<Key> keys = {10};
    auto r = last_mile_search(keys, 10, 0, 1);
    EXPECT_TRUE(r.found);
    EXPECT_EQ(r.rank, 0u);
}

TEST(LastMile, AbsentKeyInsertionRank) {
    std::vector<Key> keys;
    for (Key k = 0; k < 200; k += 2)
        keys.push_back(k);
    auto r = last_mile_search(keys, 5, 2, 2);
    EXPECT_FALSE(r.found);
    EXPECT_EQ(r.rank, 3u);  // 5 would insert before 6
}

TEST(LastMile, WindowClampsAtBoundaries) {
    std::vector<Key> keys = {10, 20, 30};
    auto lo = last_mile_search(keys, 1, 0, 4);
    EXPECT_FALSE(lo.found);
    EXPECT_EQ(lo.rank, 0u);
    auto hi = last_mile_search(keys, 99, 2, 4);
    EXPECT_FALSE(hi.found);
    EXPECT_EQ(hi.rank, 3u);
}

TEST(Verify, FlatLineFails) {
    std::vector<Key> keys;
    for (Key k = 0; k < 10; ++k)
        keys.push_back(k);
    PlaModel model{{{0, 0.0, 0.0}}, 4, 10};
    auto report = verify_epsilon(keys, model);
    EXPECT_FALSE(report.ok);
    EXPECT_EQ(report.max_abs_residual, 9.0);
    EXPECT_EQ(report.worst_rank, 9u);
    EXPECT_EQ(report.segment_count, 1u);
}

TEST(Verify, CollinearExactFit) {
    std::vector<Key> keys;
    for (Key i = 0; i < 50; ++i)
        keys.push_back(2 * i);
    PlaModel model{{{0, 0.5, 0.0}}, 1, 50};
    auto report = verify_epsilon(keys, model);
    EXPECT_TRUE(report.ok);
    EXPECT_EQ(report.max_abs_residual, 0.0);
}

TEST(Verify, FlooredConvention) {
    // Raw prediction 1.75 at rank 1 has residual 0.75; floored it is exact.
    std::vector<Key> keys = {0, 7};
    PlaModel model{{{0, 0.25, 0.0}}, 0, 2};
    model.epsilon = 1;
    EXPECT_NEAR(verify_epsilon(keys, model).max_abs_residual, 0.75, 1e-12);
    EXPECT_EQ(verify_epsilon(keys, model, Rounding::floor).max_abs_residual, 0.0);
}

TEST(Verify, EmptyKeysThrows) {
    PlaModel model{{{0, 1.0, 0.0}}, 1, 0};
    EXPECT_THROW(verify_epsilon({}, model), std::invalid_argument);
}

TEST(ClampRank, Edges) {
    EXPECT_EQ(clamp_rank(-3.7, 10), 0u);
    EXPECT_EQ(clamp_rank(0.2, 10), 0u);
    EXPECT_EQ(clamp_rank(9.999, 10), 9u);
    EXPECT_EQ(clamp_rank(10.0, 10), 9u);
    EXPECT_EQ(clamp_rank(1e30, 10), 9u);
    EXPECT_EQ(clamp_rank(std::nan(""), 10), 0u);
}

TEST(ModelIo, RoundTripIsBitExact) {
    PlaModel model{{{23, 0.46, 6.54}, {1000, 1.0 / 3.0, 99.5}}, 7, 1234};
    std::string path = ::testing::TempDir() + "model_roundtrip.txt";
    save_model(model, path);
    auto loaded = load_model(path);
    ASSERT_EQ(loaded.segments.size(), model.segments.size());
    EXPECT_EQ(loaded.epsilon, model.epsilon);
    EXPECT_EQ(loaded.n, model.n);
    for (std::size_t i = 0; i < model.segments.size(); ++i) {
        EXPECT_EQ(loaded.segments[i].s, model.segments[i].s);
        EXPECT_EQ(loaded.segments[i].alpha, model.segments[i].alpha);
        EXPECT_EQ(loaded.segments[i].beta, model.segments[i].beta);
    }
    std::remove(path.c_str());
}

TEST(ModelIo, MissingFileThrows) {
    EXPECT_THROW(load_model("/nonexistent/model.txt"), std::runtime_error);
}

}  // namespace
}  // namespace plax
