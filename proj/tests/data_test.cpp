#include "plax/data.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace plax {
namespace {

std::string tmp_path(const std::string &name) {
    return ::testing::TempDir() + name;
}

TEST(Gen, DeterministicAndStrictlyIncreasing) {
    auto spec = DatasetSpec::parse("uniform:n=1000;seed=7;range=4294967296");
    auto a = gen_synthetic(spec);
    auto b = gen_synthetic(spec);
    ASSERT_EQ(a.size(), 1000u);
    EXPECT_EQ(a, b);
    for (std::size_t i = 1; i < a.size(); ++i)
        ASSERT_LT(a[i - 1], a[i]);
}

TEST(Gen, TopUpAfterDedup) {
    // A range barely larger than n forces duplicate draws and top-ups.
    auto spec = DatasetSpec::parse("uniform:n=1000;seed=3;range=1200");
    auto keys = gen_synthetic(spec);
    ASSERT_EQ(keys.size(), 1000u);
    for (std::size_t i = 1; i < keys.size(); ++i)
        ASSERT_LT(keys[i - 1], keys[i]);
}

TEST(Gen, ImpossibleRequestFails) {
    auto spec = DatasetSpec::parse("uniform:n=100;seed=3;range=50");
    EXPECT_THROW(gen_synthetic(spec), std::runtime_error);
}

TEST(Gen, DegenerateParametersThrow) {
    EXPECT_THROW(gen_synthetic(DatasetSpec::parse("normal:n=10;stddev=0")),
                 std::invalid_argument);
    EXPECT_THROW(gen_synthetic(DatasetSpec::parse("lognormal:n=10;logsigma=0")),
                 std::invalid_argument);
    EXPECT_THROW(gen_synthetic(DatasetSpec::parse("uniform:n=1")),
                 std::invalid_argument);
}

TEST(Gen, NormalAndLognormalProduceOrderedKeys) {
    for (const char *text : {"normal:n=5000;seed=5", "lognormal:n=5000;seed=5"}) {
        auto keys = gen_synthetic(DatasetSpec::parse(text));
        ASSERT_EQ(keys.size(), 5000u);
        for (std::size_t i = 1; i < keys.size(); ++i)
            ASSERT_LT(keys[i - 1], keys[i]);
    }
}

TEST(Gen, UniformEmpiricalCdfIsNearLinear) {
    // Kolmogorov-Smirnov sanity at n = 10^6: the 1% critical value is about
    // 1.63 / sqrt(n) ~ 0.0016; 0.005 leaves generous slack.
    const std::size_t n = 1000000;
    auto spec = DatasetSpec::parse("uniform:n=1000000;seed=13;range=1099511627776");
    auto keys = gen_synthetic(spec);
    double max_dev = 0.0;
    const double range = static_cast<double>(spec.range);
    for (std::size_t i = 0; i < n; ++i) {
        double f = static_cast<double>(keys[i]) / range;
        double lo = static_cast<double>(i) / static_cast<double>(n);
        double hi = static_cast<double>(i + 1) / static_cast<double>(n);
        max_dev = std::max({max_dev, std::abs(f - lo), std::abs(f - hi)});
    }
    EXPECT_LE(max_dev, 0.005);
}

TEST(Sanitize, SortsAndDedupes) {
    auto r = sanitize({3, 1, 2, 2});
    EXPECT_EQ(r.keys, (std::vector<Key>{1, 2, 3}));
    EXPECT_EQ(r.duplicates_removed, 1u);
}

TEST(Sanitize, SortedInputUnchanged) {
    auto r = sanitize({1, 5, 9});
    EXPECT_EQ(r.keys, (std::vector<Key>{1, 5, 9}));
    EXPECT_EQ(r.duplicates_removed, 0u);
}

TEST(Sanitize, AllEqualThrows) {
    EXPECT_THROW(sanitize({4, 4, 4}), std::invalid_argument);
}

TEST(Sosd, RoundTrip) {
    auto path = tmp_path("roundtrip.sosd");
    write_sosd(path, std::vector<Key>{1, 2, 3});
    EXPECT_EQ(read_sosd(path), (std::vector<Key>{1, 2, 3}));
    std::remove(path.c_str());
}

TEST(Sosd, ReadSanitizesUnsortedPayload) {
    auto path = tmp_path("unsorted.sosd");
    {
        std::ofstream out(path, std::ios::binary);
        auto put = [&](std::uint64_t v) {
            char b[8];
            for (int i = 0; i < 8; ++i)
                b[i] = static_cast<char>(v >> (8 * i));
            out.write(b, 8);
        };
        put(4);
        put(9);
        put(2);
        put(9);
        put(5);
    }
    EXPECT_EQ(read_sosd(path), (std::vector<Key>{2, 5, 9}));
    std::remove(path.c_str());
}

TEST(Sosd, TruncationReportsOffset) {
    auto path = tmp_path("truncated.sosd");
    {
        std::ofstream out(path, std::ios::binary);
        auto put = [&](std::uint64_t v) {
            char b[8];
            for (int i = 0; i < 8; ++i)
                b[i] = static_cast<char>(v >> (8 * i));
            out.write(b, 8);
        };
        put(4);  // declares 4 keys
        put(1);
        put(2);
        put(3);  // 32 bytes total
    }
    try {
        read_sosd(path);
        FAIL() << "expected parse error";
    } catch (const std::runtime_error &e) {
        EXPECT_NE(std::string(e.what()).find("offset 32"), std::string::npos)
            << e.what();
    }
    std::remove(path.c_str());
}

TEST(Sosd, MissingFileThrows) {
    EXPECT_THROW(read_sosd("/nonexistent/file.sosd"), std::runtime_error);
}

TEST(Workload, FullSampleIsTheDataset) {
    auto keys = gen_synthetic(DatasetSpec::parse("uniform:n=500;seed=1"));
    EXPECT_EQ(sample_workload(keys, keys.size(), 9), keys);
}

TEST(Workload, DeterministicSortedSubset) {
    auto keys = gen_synthetic(DatasetSpec::parse("uniform:n=5000;seed=2"));
    auto a = sample_workload(keys, 1000, 9);
    auto b = sample_workload(keys, 1000, 9);
    ASSERT_EQ(a.size(), 1000u);
    EXPECT_EQ(a, b);
    for (std::size_t i = 1; i < a.size(); ++i)
        ASSERT_LT(a[i - 1], a[i]);
    for (Key q : a)
        ASSERT_TRUE(std::binary_search(keys.begin(), keys.end(), q));
    auto c = sample_workload(keys, 1000, 10);
    EXPECT_NE(a, c);
}

TEST(Workload, OversizedRequestThrows) {
    auto keys = gen_synthetic(DatasetSpec::parse("uniform:n=100;seed=1"));
    EXPECT_THROW(sample_workload(keys, 101, 1), std::invalid_argument);
}

TEST(Spec, ParseToStringRoundTrip) {
    for (const char *text :
         {"uniform:n=123;seed=9;range=1000", "normal:n=50;seed=1;mean=1000;stddev=10",
          "lognormal:n=50;seed=1;logmean=12;logsigma=0.5"}) {
        auto spec = DatasetSpec::parse(text);
        auto again = DatasetSpec::parse(spec.to_string());
        EXPECT_EQ(again.to_string(), spec.to_string());
    }
    EXPECT_EQ(DatasetSpec::parse("file:/tmp/x.sosd").path, "/tmp/x.sosd");
    EXPECT_EQ(DatasetSpec::parse("/tmp/x.sosd").kind, DistKind::file);
    EXPECT_THROW(DatasetSpec::parse("uniform:bogus=1"), std::invalid_argument);
    EXPECT_THROW(DatasetSpec::parse("uniform:n=abc"), std::invalid_argument);
}

TEST(Cache, OneFilePerSpecHash) {
    auto dir = tmp_path("plax_cache");
    std::filesystem::remove_all(dir);
    auto spec = DatasetSpec::parse("uniform:n=300;seed=4");
    auto first = load_dataset(spec, dir);
    ASSERT_EQ(std::distance(std::filesystem::directory_iterator(dir),
                            std::filesystem::directory_iterator{}),
              1);
    auto second = load_dataset(spec, dir);
    EXPECT_EQ(first, second);
    std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace plax
