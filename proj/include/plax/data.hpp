// Copyright (c) 2026 the plax authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "plax/core.hpp"

namespace plax {

enum class DistKind { uniform, normal, lognormal, file };

/// Describes a dataset: a synthetic distribution with parameters, or a file
/// of keys in the sorted-dataset binary format. Generation is a
/// deterministic function of the spec (including the seed); the generator
/// is std::mt19937_64 with fixed value mappings, so datasets reproduce
/// across versions.
struct DatasetSpec {
    DistKind kind = DistKind::uniform;
    std::size_t n = 10'000'000;
    std::uint64_t seed = 42;
    std::uint64_t range = std::uint64_t{1} << 40;  // uniform: keys in [0, range)
    double mean = 549755813888.0;                  // normal, key units (2^39)
    double stddev = 8589934592.0;                  // normal, key units (2^33)
    double logmean = 24.0;                         // lognormal
    double logsigma = 1.0;                         // lognormal
    std::string path;                              // file

    /// Canonical form, also used as the dataset id in benchmark records and
    /// as the cache key. Comma-free so it embeds in CSV unquoted.
    std::string to_string() const {
        switch (kind) {
            case DistKind::uniform:
                return "uniform:n=" + std::to_string(n) + ";seed=" + std::to_string(seed) +
                       ";range=" + std::to_string(range);
            case DistKind::normal:
                return "normal:n=" + std::to_string(n) + ";seed=" + std::to_string(seed) +
                       ";mean=" + format_num(mean) + ";stddev=" + format_num(stddev);
            case DistKind::lognormal:
                return "lognormal:n=" + std::to_string(n) + ";seed=" + std::to_string(seed) +
                       ";logmean=" + format_num(logmean) + ";logsigma=" + format_num(logsigma);
            case DistKind::file:
                return "file:" + path;
        }
        return "?";
    }

    static DatasetSpec parse(const std::string &text);

private:
    static std::string format_num(double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }
};

namespace detail {

/// Unbiased-enough bounded draw (fixed-point multiply), pinned here so the
/// generated keys do not depend on the standard library's distribution
/// implementations.
inline std::uint64_t bounded(std::mt19937_64 &rng, std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(rng()) * bound) >> 64);
}

inline double unit_double(std::mt19937_64 &rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal deviates via the Box-Muller transform, one fixed
/// implementation for all platforms.
class NormalSource {
    std::mt19937_64 &rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;

public:
    explicit NormalSource(std::mt19937_64 &rng) : rng_(rng) {}

    double operator()() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
        double u2 = unit_double(rng_);
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }
};

inline Key to_key(double v) {
    double r = std::nearbyint(v);
    if (!(r > 0.0))
        return 0;
    if (r >= 18446744073709551616.0)
        return std::numeric_limits<Key>::max();
    return static_cast<Key>(r);
}

inline std::uint64_t fnv1a64(const std::string &text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace detail

struct SanitizeResult {
    std::vector<Key> keys;
    std::size_t duplicates_removed;
};

/// Sorts and deduplicates. Every dataset entering a fitter passes through
/// here: the strictly-increasing invariant is enforced in one place.
inline SanitizeResult sanitize(std::vector<Key> keys) {
    const std::size_t before = keys.size();
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    if (keys.size() < 2)
        throw std::invalid_argument("fewer than 2 distinct keys after sanitize");
    const std::size_t removed = before - keys.size();
    return {std::move(keys), removed};
}

/// Draws n keys from the spec'd distribution, sorted and deduplicated; if
/// deduplication shrinks the set, keeps drawing until n distinct keys.
inline std::vector<Key> gen_synthetic(const DatasetSpec &spec) {
    if (spec.kind == DistKind::file)
        throw std::invalid_argument("gen_synthetic needs a synthetic spec");
    if (spec.n < 2)
        throw std::invalid_argument("dataset size must be >= 2");
    switch (spec.kind) {
        case DistKind::uniform:
            if (spec.range < 2)
                throw std::invalid_argument("uniform range must be >= 2");
            break;
        case DistKind::normal:
            if (!std::isfinite(spec.mean) || !std::isfinite(spec.stddev) || spec.stddev <= 0)
                throw std::invalid_argument("degenerate normal parameters");
            break;
        case DistKind::lognormal:
            if (!std::isfinite(spec.logmean) || !std::isfinite(spec.logsigma) ||
                spec.logsigma <= 0)
                throw std::invalid_argument("degenerate lognormal parameters");
            break;
        default:
            break;
    }

    std::mt19937_64 rng(spec.seed);
    detail::NormalSource normal(rng);
    auto draw = [&]() -> Key {
        switch (spec.kind) {
            case DistKind::uniform: return detail::bounded(rng, spec.range);
            case DistKind::normal: return detail::to_key(spec.mean + spec.stddev * normal());
            case DistKind::lognormal:
                return detail::to_key(std::exp(spec.logmean + spec.logsigma * normal()));
            default: return 0;
        }
    };

    std::vector<Key> keys;
    keys.reserve(spec.n + spec.n / 64 + 16);
    for (std::size_t i = 0; i < spec.n; ++i)
        keys.push_back(draw());
    for (int round = 0;; ++round) {
        std::sort(keys.begin(), keys.end());
        keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
        if (keys.size() >= spec.n)
            break;
        if (round >= 64)
            throw std::runtime_error("distribution cannot supply " +
                                     std::to_string(spec.n) + " distinct keys");
        const std::size_t missing = spec.n - keys.size();
        for (std::size_t i = 0; i < missing; ++i)
            keys.push_back(draw());
    }
    return keys;
}

/// Binary key file: little-endian unsigned 64-bit element count, then that
/// many little-endian unsigned 64-bit keys.
inline void write_sosd(const std::string &path, std::span<const Key> keys) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write: " + path);
    auto put_u64 = [&](std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i)
            b[i] = static_cast<unsigned char>(v >> (8 * i));
        out.write(reinterpret_cast<const char *>(b), 8);
    };
    put_u64(keys.size());
    for (Key k : keys)
        put_u64(k);
    if (!out)
        throw std::runtime_error("write error: " + path);
}

/// Reads and sanitizes a binary key file. Truncated or oversized files are
/// parse errors reporting the byte offset where the layout breaks.
inline std::vector<Key> read_sosd(const std::string &path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in)
        throw std::runtime_error("cannot open: " + path);
    const auto file_size = static_cast<std::uint64_t>(in.tellg());
    in.seekg(0);
    if (file_size < 8)
        throw std::runtime_error(path + ": truncated header, parse error at offset " +
                                 std::to_string(file_size));
    unsigned char b[8];
    auto get_u64 = [&]() {
        in.read(reinterpret_cast<char *>(b), 8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i)
            v = (v << 8) | b[i];
        return v;
    };
    const std::uint64_t count = get_u64();
    if (count > (file_size - 8) / 8 || file_size != 8 + 8 * count) {
        const std::uint64_t expected = count <= (std::numeric_limits<std::uint64_t>::max() - 8) / 8
                                           ? 8 + 8 * count
                                           : std::numeric_limits<std::uint64_t>::max();
        throw std::runtime_error(path + ": declares " + std::to_string(count) +
                                 " keys but holds " + std::to_string(file_size) +
                                 " bytes, parse error at offset " +
                                 std::to_string(std::min(expected, file_size)));
    }
    std::vector<Key> keys;
    keys.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i)
        keys.push_back(get_u64());
    if (!in)
        throw std::runtime_error(path + ": read error");
    return sanitize(std::move(keys)).keys;
}

/// m keys drawn uniformly without replacement, returned in key order so a
/// full-size sample is the dataset itself. One workload file is shared by
/// every algorithm in a benchmark run.
inline std::vector<Key> sample_workload(std::span<const Key> keys, std::size_t m,
                                        std::uint64_t seed) {
    const std::size_t n = keys.size();
    if (m > n)
        throw std::invalid_argument("workload larger than dataset");
    if (m == n)
        return {keys.begin(), keys.end()};
    // Floyd's sampling: m distinct indices in [0, n).
    std::mt19937_64 rng(seed);
    std::unordered_set<std::size_t> chosen;
    chosen.reserve(m * 2);
    for (std::size_t j = n - m; j < n; ++j) {
        std::size_t t = detail::bounded(rng, j + 1);
        if (!chosen.insert(t).second)
            chosen.insert(j);
    }
    std::vector<std::size_t> idx(chosen.begin(), chosen.end());
    std::sort(idx.begin(), idx.end());
    std::vector<Key> out;
    out.reserve(m);
    for (auto i : idx)
        out.push_back(keys[i]);
    return out;
}

/// Loads a file spec, or generates a synthetic one, consulting a cache
/// directory when given: one file per spec hash, in the binary key format.
inline std::vector<Key> load_dataset(const DatasetSpec &spec,
                                     const std::string &cache_dir = "") {
    if (spec.kind == DistKind::file)
        return read_sosd(spec.path);
    if (!cache_dir.empty()) {
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016llx",
                      static_cast<unsigned long long>(detail::fnv1a64(spec.to_string())));
        auto path = std::filesystem::path(cache_dir) / (std::string(hex) + ".sosd");
        if (std::filesystem::exists(path))
            return read_sosd(path.string());
        auto keys = gen_synthetic(spec);
        std::filesystem::create_directories(cache_dir);
        write_sosd(path.string(), keys);
        return keys;
    }
    return gen_synthetic(spec);
}

inline DatasetSpec DatasetSpec::parse(const std::string &text) {
    DatasetSpec spec;
    auto colon = text.find(':');
    std::string head = colon == std::string::npos ? text : text.substr(0, colon);
    std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);

    if (head == "uniform") spec.kind = DistKind::uniform;
    else if (head == "normal") spec.kind = DistKind::normal;
    else if (head == "lognormal") spec.kind = DistKind::lognormal;
    else if (head == "file") {
        spec.kind = DistKind::file;
        spec.path = rest;
        if (spec.path.empty())
            throw std::invalid_argument("file spec needs a path");
        return spec;
    } else {
        // Bare path convenience form.
        spec.kind = DistKind::file;
        spec.path = text;
        return spec;
    }

    std::size_t pos = 0;
    while (pos < rest.size()) {
        auto end = rest.find_first_of(";,", pos);
        if (end == std::string::npos)
            end = rest.size();
        auto item = rest.substr(pos, end - pos);
        pos = end + 1;
        if (item.empty())
            continue;
        auto eq = item.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("bad dataset parameter: " + item);
        auto key = item.substr(0, eq);
        auto value = item.substr(eq + 1);
        try {
            if (key == "n") spec.n = std::stoull(value);
            else if (key == "seed") spec.seed = std::stoull(value);
            else if (key == "range") spec.range = std::stoull(value);
            else if (key == "mean") spec.mean = std::stod(value);
            else if (key == "stddev") spec.stddev = std::stod(value);
            else if (key == "logmean") spec.logmean = std::stod(value);
            else if (key == "logsigma") spec.logsigma = std::stod(value);
            else throw std::invalid_argument("unknown dataset parameter: " + key);
        } catch (const std::invalid_argument &) {
            throw;
        } catch (const std::exception &) {
            throw std::invalid_argument("bad value for dataset parameter " + key + ": " + value);
        }
    }
    return spec;
}

}  // namespace plax
