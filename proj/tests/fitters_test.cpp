#include "plax/fitters.hpp"

#include <gtest/gtest.h>

#include <random>

#include "plax/core.hpp"

namespace plax {
namespace {

std::vector<Key> iota_keys(std::size_t n) {
    std::vector<Key> keys(n);
    for (std::size_t i = 0; i < n; ++i)
        keys[i] = i;
    return keys;
}

std::vector<Key> random_keys(std::size_t n, std::uint64_t seed,
                             std::uint64_t range = 0) {
    if (range == 0)
        range = static_cast<std::uint64_t>(n) * 1000;
    std::mt19937_64 rng(seed);
    std::vector<Key> keys;
    keys.reserve(n);
    while (keys.size() < n) {
        while (keys.size() < n)
            keys.push_back(static_cast<Key>(
                (static_cast<unsigned __int128>(rng()) * range) >> 64));
        std::sort(keys.begin(), keys.end());
        keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    }
    return keys;
}

const std::vector<FitterKind> kStreamingFitters = {
    FitterKind::frs, FitterKind::optimal, FitterKind::greedy, FitterKind::swing};

TEST(Frs, TenKeysEpsOneMakesTwoSegments) {
    auto keys = iota_keys(10);
    auto model = fit_frs(keys, 1);
    ASSERT_EQ(model.segment_count(), 2u);
    // The fixed slope is 11/9 and the break happens at the last key, which
    // starts the second segment with an exact intercept.
    EXPECT_EQ(model.segments[0].s, 0u);
    EXPECT_EQ(model.segments[1].s, 9u);
    EXPECT_EQ(model.segments[1].beta, 9.0);
    EXPECT_EQ(model.segments[0].alpha, 11.0 / 9.0);
}

TEST(Frs, TenKeysEpsTwoMakesOneSegment) {
    auto keys = iota_keys(10);
    EXPECT_EQ(fit_frs(keys, 2).segment_count(), 1u);
}

TEST(Frs, DegenerateInputsThrow) {
    std::vector<Key> one = {5};
    EXPECT_THROW(fit_frs(one, 1), std::invalid_argument);
    EXPECT_THROW(fit_frs(iota_keys(10), 0), std::invalid_argument);
}

TEST(Frs, FlooredConventionHoldsRawMayExceedEps) {
    auto keys = random_keys(20000, 3);
    for (std::uint64_t eps : {1, 4, 16}) {
        auto model = fit_frs(keys, eps);
        EXPECT_TRUE(verify_epsilon(keys, model, Rounding::floor).ok) << "eps=" << eps;
        // The floored break rule admits raw residuals in [eps, eps + 1).
        EXPECT_LT(verify_epsilon(keys, model).max_abs_residual,
                  static_cast<double>(eps) + 1.0);
    }
}

TEST(Optimal, CollinearIsOneExactSegment) {
    std::vector<Key> keys;
    for (Key i = 0; i < 1000; ++i)
        keys.push_back(2 * i);
    auto model = fit_optimal(keys, 1);
    EXPECT_EQ(model.segment_count(), 1u);
    EXPECT_EQ(verify_epsilon(keys, model).max_abs_residual, 0.0);
}

TEST(Optimal, MatchesDpOracleOnSeededInput) {
    auto keys = random_keys(1000, 42);
    auto model = fit_optimal(keys, 16);
    auto oracle = fit_dp_oracle(keys, 16);
    EXPECT_EQ(model.segment_count(), oracle.segment_count);
}

TEST(Optimal, EqualsOracleAcrossInstances) {
    std::mt19937_64 seeds(2024);
    for (int instance = 0; instance < 50; ++instance) {
        auto keys = random_keys(500, seeds());
        for (std::uint64_t eps : {2, 8, 32}) {
            auto model = fit_optimal(keys, eps);
            auto oracle = fit_dp_oracle(keys, eps);
            ASSERT_EQ(model.segment_count(), oracle.segment_count)
                << "instance " << instance << " eps " << eps;
        }
    }
}

TEST(Swing, CollinearIsOneSegment) {
    EXPECT_EQ(fit_swing(iota_keys(10), 1).segment_count(), 1u);
}

TEST(Greedy, CollinearIsOneSegment) {
    EXPECT_EQ(fit_greedy(iota_keys(10), 1).segment_count(), 1u);
}

TEST(Fitters, SingleKeyIsHorizontalSegment) {
    std::vector<Key> keys = {77};
    for (auto kind : {FitterKind::optimal, FitterKind::greedy, FitterKind::swing}) {
        auto model = fit(kind, keys, 4);
        ASSERT_EQ(model.segment_count(), 1u) << to_string(kind);
        EXPECT_EQ(model.segments[0].alpha, 0.0);
        EXPECT_EQ(model.segments[0].beta, 0.0);
    }
}

TEST(Fitters, TwoKeysInterpolateExactly) {
    std::vector<Key> keys = {10, 20};
    for (auto kind : {FitterKind::optimal, FitterKind::greedy, FitterKind::swing}) {
        auto model = fit(kind, keys, 4);
        ASSERT_EQ(model.segment_count(), 1u);
        EXPECT_NEAR(verify_epsilon(keys, model).max_abs_residual, 0.0, 1e-9)
            << to_string(kind);
    }
}

TEST(Fitters, EpsilonSoundnessOnRandomInputs) {
    for (std::uint64_t seed : {1, 2, 3}) {
        auto keys = random_keys(5000, seed);
        for (auto kind : kStreamingFitters) {
            for (std::uint64_t eps : {1, 2, 8, 32, 128}) {
                auto model = fit(kind, keys, eps);
                auto report = verify_epsilon(keys, model, verify_rounding(kind));
                EXPECT_TRUE(report.ok)
                    << to_string(kind) << " eps=" << eps << " seed=" << seed
                    << " max=" << report.max_abs_residual;
            }
        }
    }
}

TEST(Fitters, SoundnessOnHugeKeyMagnitudes) {
    // Keys near 2^64: the start-key-relative evaluation keeps residuals
    // small even though the absolute keys lose integer precision in double.
    std::mt19937_64 rng(11);
    std::vector<Key> keys;
    Key base = std::numeric_limits<Key>::max() - (1ull << 30);
    for (int i = 0; i < 4000; ++i)
        keys.push_back(base + (static_cast<Key>(i) << 12) + rng() % 4096);
    keys = [&] {
        std::sort(keys.begin(), keys.end());
        keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
        return keys;
    }();
    for (auto kind : kStreamingFitters) {
        auto model = fit(kind, keys, 8);
        EXPECT_TRUE(verify_epsilon(keys, model, verify_rounding(kind)).ok)
            << to_string(kind);
    }
}

TEST(Fitters, DominanceChain) {
    for (std::uint64_t seed : {5, 6}) {
        auto keys = random_keys(20000, seed);
        for (std::uint64_t eps : {2, 8, 32, 128}) {
            auto opt = fit_optimal(keys, eps).segment_count();
            auto greedy = fit_greedy(keys, eps).segment_count();
            auto swing = fit_swing(keys, eps).segment_count();
            auto frs = fit_frs(keys, eps).segment_count();
            EXPECT_LE(opt, greedy) << "eps=" << eps;
            EXPECT_LE(opt, swing) << "eps=" << eps;
            EXPECT_LE(greedy, frs) << "eps=" << eps;
            EXPECT_LE(swing, frs) << "eps=" << eps;
        }
    }
}

TEST(Fitters, SegmentCountMonotoneInEps) {
    auto keys = random_keys(20000, 9);
    for (auto kind : kStreamingFitters) {
        std::size_t prev = std::numeric_limits<std::size_t>::max();
        for (std::uint64_t eps = 2; eps <= 256; eps *= 2) {
            auto count = fit(kind, keys, eps).segment_count();
            // Guaranteed for optimal and frs; observed for the greedy pair
            // on these fixed seeds.
            EXPECT_LE(count, prev) << to_string(kind) << " eps=" << eps;
            prev = count;
        }
    }
}

TEST(Fitters, WindowSoundness) {
    // A verified model plus a +-eps window around the floored prediction
    // always locates every dataset key.
    auto keys = random_keys(8000, 12);
    for (auto kind : {FitterKind::optimal, FitterKind::greedy, FitterKind::swing}) {
        for (std::uint64_t eps : {1, 8, 64}) {
            auto model = fit(kind, keys, eps);
            ASSERT_TRUE(verify_epsilon(keys, model).ok);
            for (std::size_t i = 0; i < keys.size(); ++i) {
                auto center = clamp_rank(predict(model, keys[i]), keys.size());
                auto hit = last_mile_search(keys, keys[i], center, eps);
                ASSERT_TRUE(hit.found) << to_string(kind) << " eps=" << eps;
                ASSERT_EQ(hit.rank, i);
            }
        }
    }
}

TEST(Fitters, StartKeysAreStrictlyIncreasingInputKeys) {
    auto keys = random_keys(5000, 14);
    for (auto kind : kStreamingFitters) {
        auto model = fit(kind, keys, 8);
        Key prev = 0;
        bool first = true;
        for (const auto &seg : model.segments) {
            EXPECT_TRUE(std::binary_search(keys.begin(), keys.end(), seg.s));
            if (!first) {
                EXPECT_GT(seg.s, prev);
            }
            prev = seg.s;
            first = false;
        }
        EXPECT_EQ(model.segments.front().s, keys.front());
        EXPECT_GE(model.segments.front().alpha, 0.0);
    }
}

TEST(DpOracle, CollinearIsOne) {
    EXPECT_EQ(fit_dp_oracle(iota_keys(64), 1).segment_count, 1u);
}

TEST(DpOracle, TwoClustersMatchOptimal) {
    std::vector<Key> keys = {0, 1, 2, 100, 101, 102};
    auto oracle = fit_dp_oracle(keys, 1);
    EXPECT_EQ(oracle.segment_count, fit_optimal(keys, 1).segment_count());
}

TEST(DpOracle, WitnessPassesVerification) {
    auto keys = random_keys(800, 21);
    for (std::uint64_t eps : {2, 8}) {
        auto oracle = fit_dp_oracle(keys, eps);
        EXPECT_EQ(oracle.model.segment_count(), oracle.segment_count);
        EXPECT_TRUE(verify_epsilon(keys, oracle.model).ok) << "eps=" << eps;
    }
}

TEST(DpOracle, CapExceededThrows) {
    auto keys = iota_keys(101);
    EXPECT_THROW(fit_dp_oracle(keys, 2, 100), std::invalid_argument);
}

TEST(Fit, DispatcherRejectsOracle) {
    auto keys = iota_keys(10);
    EXPECT_THROW(fit(FitterKind::dp_oracle, keys, 2), std::invalid_argument);
}

}  // namespace
}  // namespace plax
