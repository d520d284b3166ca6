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

#include <array>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "plax/core.hpp"
#include "plax/data.hpp"
#include "plax/fitters.hpp"
#include "plax/indexes.hpp"
#include "plax/parallel.hpp"

namespace plax {

/// One benchmark measurement row. Times are wall-clock means over repeats.
struct BenchRecord {
    std::string dataset;
    std::string fitter;
    std::string structure;  ///< raw-pla | pgm | fit-tree
    std::uint64_t eps = 0;
    std::uint64_t eps_internal = 0;
    std::uint64_t eps_last = 0;
    std::size_t threads = 1;
    std::size_t segment_count = 0;
    std::string segments_per_layer;  ///< bottom-up, ';'-separated (pgm)
    std::size_t size_bytes = 0;
    double build_ms = 0.0;
    double query_ns_mean = 0.0;
    double query_ns_p99 = 0.0;
    std::size_t repeats = 1;
};

inline const std::array<const char *, 14> &bench_csv_header() {
    static const std::array<const char *, 14> header = {
        "dataset",       "fitter",     "structure",  "eps",
        "eps_internal",  "eps_last",   "threads",    "segment_count",
        "segments_per_layer", "size_bytes", "build_ms", "query_ns_mean",
        "query_ns_p99",  "repeats"};
    return header;
}

/// Raw per-repeat values, kept alongside the aggregated records.
struct RepeatRow {
    std::string cell;
    std::size_t repeat;
    double build_ms;
    double query_ns_mean;
    double query_ns_p99;
};

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string &line) {
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
        auto comma = line.find(',', pos);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(pos));
            break;
        }
        fields.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    return fields;
}

}  // namespace detail

/// Writes records as CSV: a header row with the exact BenchRecord field
/// names, one row per record, stable field order, plain decimal numbers.
inline void emit_csv(const std::vector<BenchRecord> &records, const std::string &path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write: " + path);
    const auto &header = bench_csv_header();
    for (std::size_t i = 0; i < header.size(); ++i)
        out << header[i] << (i + 1 < header.size() ? ',' : '\n');
    for (const auto &r : records) {
        out << r.dataset << ',' << r.fitter << ',' << r.structure << ',' << r.eps << ','
            << r.eps_internal << ',' << r.eps_last << ',' << r.threads << ','
            << r.segment_count << ',' << r.segments_per_layer << ',' << r.size_bytes << ','
            << detail::format_double(r.build_ms) << ','
            << detail::format_double(r.query_ns_mean) << ','
            << detail::format_double(r.query_ns_p99) << ',' << r.repeats << '\n';
    }
    if (!out)
        throw std::runtime_error("write error: " + path);
}

inline std::vector<BenchRecord> parse_csv(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error(path + ": empty file");
    const auto &header = bench_csv_header();
    auto names = detail::split_csv_line(line);
    if (names.size() != header.size())
        throw std::runtime_error(path + ": unexpected header");
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] != header[i])
            throw std::runtime_error(path + ": unexpected column " + names[i]);
    std::vector<BenchRecord> records;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        auto f = detail::split_csv_line(line);
        if (f.size() != header.size())
            throw std::runtime_error(path + ": bad row: " + line);
        BenchRecord r;
        r.dataset = f[0];
        r.fitter = f[1];
        r.structure = f[2];
        r.eps = std::stoull(f[3]);
        r.eps_internal = std::stoull(f[4]);
        r.eps_last = std::stoull(f[5]);
        r.threads = std::stoull(f[6]);
        r.segment_count = std::stoull(f[7]);
        r.segments_per_layer = f[8];
        r.size_bytes = std::stoull(f[9]);
        r.build_ms = std::stod(f[10]);
        r.query_ns_mean = std::stod(f[11]);
        r.query_ns_p99 = std::stod(f[12]);
        r.repeats = std::stoull(f[13]);
        records.push_back(std::move(r));
    }
    return records;
}

inline void emit_repeats_csv(const std::vector<RepeatRow> &rows, const std::string &path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write: " + path);
    out << "cell,repeat,build_ms,query_ns_mean,query_ns_p99\n";
    for (const auto &r : rows)
        out << r.cell << ',' << r.repeat << ',' << detail::format_double(r.build_ms) << ','
            << detail::format_double(r.query_ns_mean) << ','
            << detail::format_double(r.query_ns_p99) << '\n';
}

/// Plain full-array binary search; the correctness oracle every index
/// lookup is compared against.
inline SearchResult oracle_lookup(std::span<const Key> keys, Key q) {
    auto it = std::lower_bound(keys.begin(), keys.end(), q);
    std::size_t pos = static_cast<std::size_t>(std::distance(keys.begin(), it));
    return {it != keys.end() && *it == q, pos};
}

/// Monte-Carlo estimate of the first-segment coverage.
struct CoverageEstimate {
    std::string distribution;
    std::size_t n;
    std::uint64_t eps;
    std::size_t trials;
    double mean_coverage;    ///< always >= 1
    double range_estimate;   ///< mean of k_n - k_1 across trials
};

/// Per trial: draw n i.i.d. keys, sort them, run the fixed-slope first
/// segment (slope (n+1)/(k_n - k_1) anchored at the first key) and count
/// how many consecutive points stay within eps of their rank.
inline CoverageEstimate coverage_trial(const DatasetSpec &distribution, std::uint64_t eps,
                                       std::size_t trials, std::uint64_t seed) {
    if (trials < 1)
        throw std::invalid_argument("trials must be >= 1");
    if (distribution.kind == DistKind::file)
        throw std::invalid_argument("coverage trials need a synthetic distribution");
    double coverage_sum = 0.0;
    double range_sum = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        DatasetSpec spec = distribution;
        spec.seed = seed + t;
        auto keys = gen_synthetic(spec);
        const double rho = static_cast<double>(keys.back() - keys.front());
        const double slope = static_cast<double>(keys.size() + 1) / rho;
        std::size_t covered = 0;
        for (std::size_t i = 0; i < keys.size(); ++i) {
            double residual = slope * static_cast<double>(keys[i] - keys.front()) -
                              static_cast<double>(i);
            if (std::abs(residual) > static_cast<double>(eps))
                break;
            ++covered;
        }
        coverage_sum += static_cast<double>(covered);
        range_sum += rho;
    }
    return {distribution.to_string(), distribution.n, eps, trials,
            coverage_sum / static_cast<double>(trials),
            range_sum / static_cast<double>(trials)};
}

struct InverseSquareFit {
    double a;
    double b;
    double r2;
};

/// Least squares of count = a * eps^-2 + b in the transformed variable
/// u = eps^-2.
inline InverseSquareFit fit_inverse_square(
    std::span<const std::pair<double, double>> points) {
    if (points.size() < 3)
        throw std::invalid_argument("need at least 3 points");
    double su = 0, sy = 0;
    for (const auto &[e, y] : points) {
        su += 1.0 / (e * e);
        sy += y;
    }
    const double n = static_cast<double>(points.size());
    const double mu = su / n, my = sy / n;
    double var_u = 0, cov = 0;
    for (const auto &[e, y] : points) {
        const double du = 1.0 / (e * e) - mu;
        var_u += du * du;
        cov += du * (y - my);
    }
    if (var_u == 0)
        throw std::invalid_argument("zero variance in eps^-2");
    const double a = cov / var_u;
    const double b = my - a * mu;
    double ss_res = 0, ss_tot = 0;
    for (const auto &[e, y] : points) {
        const double fit = a / (e * e) + b;
        ss_res += (y - fit) * (y - fit);
        ss_tot += (y - my) * (y - my);
    }
    const double r2 = ss_tot == 0 ? (ss_res == 0 ? 1.0 : 0.0) : 1.0 - ss_res / ss_tot;
    return {a, b, r2};
}

/// Ordinary least squares slope of log(y) against log(x); both must be
/// positive.
inline double log_log_slope(std::span<const std::pair<double, double>> points) {
    if (points.size() < 2)
        throw std::invalid_argument("need at least 2 points");
    double sx = 0, sy = 0;
    for (const auto &[x, y] : points) {
        if (x <= 0 || y <= 0)
            throw std::invalid_argument("log-log regression needs positive values");
        sx += std::log(x);
        sy += std::log(y);
    }
    const double n = static_cast<double>(points.size());
    const double mx = sx / n, my = sy / n;
    double var = 0, cov = 0;
    for (const auto &[x, y] : points) {
        const double dx = std::log(x) - mx;
        var += dx * dx;
        cov += dx * (std::log(y) - my);
    }
    if (var == 0)
        throw std::invalid_argument("zero variance in log(x)");
    return cov / var;
}

struct BenchConfig {
    std::vector<DatasetSpec> datasets;
    std::vector<FitterKind> fitters{FitterKind::optimal, FitterKind::greedy,
                                    FitterKind::swing};
    std::vector<std::uint64_t> eps_grid;           // default: 2^2 .. 2^13
    std::vector<std::size_t> thread_counts{1};
    std::vector<std::uint64_t> eps_internal_grid;  // pgm; empty -> eps_grid on both
    std::vector<std::uint64_t> eps_last_grid;
    std::size_t fanout = 16;
    std::size_t repeats = 10;
    std::size_t queries = 1000;
    std::uint64_t workload_seed = 7;
    std::size_t search_threshold = 32;
    std::size_t root_threshold = 1;
    std::string cache_dir;
    bool build_pgm = true;
    bool build_fit = true;

    std::vector<std::uint64_t> eps_or_default() const {
        if (!eps_grid.empty())
            return eps_grid;
        std::vector<std::uint64_t> grid;
        for (int p = 2; p <= 13; ++p)
            grid.push_back(std::uint64_t{1} << p);
        return grid;
    }

    /// PGM (eps_internal, eps_last) cells: the product of the two grids when
    /// given, the eps grid on both parameters when only that is given, and
    /// the desk-scale heatmap product {2^2..2^9}^2 when nothing is.
    std::vector<std::pair<std::uint64_t, std::uint64_t>> pgm_pairs() const {
        std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;
        if (!eps_internal_grid.empty() && !eps_last_grid.empty()) {
            for (auto ei : eps_internal_grid)
                for (auto el : eps_last_grid)
                    pairs.emplace_back(ei, el);
        } else if (!eps_grid.empty()) {
            for (auto e : eps_grid)
                pairs.emplace_back(e, e);
        } else {
            for (int a = 2; a <= 9; ++a)
                for (int b = 2; b <= 9; ++b)
                    pairs.emplace_back(std::uint64_t{1} << a, std::uint64_t{1} << b);
        }
        return pairs;
    }
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

inline double percentile(std::vector<double> &values, double p) {
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    std::size_t idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
    return values[idx == 0 ? 0 : idx - 1];
}

struct WorkloadTiming {
    double ns_mean;  // over all repeats' samples
    double ns_p99;
    std::vector<std::pair<double, double>> per_repeat;  // (mean, p99)
};

/// Runs the whole workload back to back once per repeat, timing each query;
/// one untimed warm-up pass first.
template <typename Lookup>
inline WorkloadTiming time_workload(std::span<const Key> queries,
                                    std::size_t repeats, Lookup &&lookup) {
    std::size_t sink = 0;
    for (Key q : queries)
        sink += lookup(q);
    WorkloadTiming timing{0.0, 0.0, {}};
    std::vector<double> pooled, samples;
    pooled.reserve(queries.size() * repeats);
    samples.reserve(queries.size());
    for (std::size_t r = 0; r < repeats; ++r) {
        samples.clear();
        for (Key q : queries) {
            auto t0 = Clock::now();
            sink += lookup(q);
            auto t1 = Clock::now();
            samples.push_back(
                std::chrono::duration<double, std::nano>(t1 - t0).count());
        }
        double mean = std::accumulate(samples.begin(), samples.end(), 0.0) /
                      static_cast<double>(samples.size());
        timing.per_repeat.emplace_back(mean, percentile(samples, 0.99));
        pooled.insert(pooled.end(), samples.begin(), samples.end());
    }
    if (sink == static_cast<std::size_t>(-1))
        throw std::logic_error("unreachable");  // keeps the sink alive
    timing.ns_mean = std::accumulate(pooled.begin(), pooled.end(), 0.0) /
                     static_cast<double>(pooled.size());
    timing.ns_p99 = percentile(pooled, 0.99);
    return timing;
}

}  // namespace detail

/// Fits every (dataset, fitter, eps, threads) cell, re-verifies the model
/// before recording anything, and records segment counts and build times.
/// A verification failure aborts the cell with a diagnostic.
inline std::vector<BenchRecord> bench_pla(const BenchConfig &config,
                                          std::vector<RepeatRow> *raw = nullptr) {
    if (config.repeats < 1)
        throw std::invalid_argument("repeats must be >= 1");
    std::vector<BenchRecord> records;
    const auto eps_grid = config.eps_or_default();
    for (const auto &spec : config.datasets) {
        auto keys = load_dataset(spec, config.cache_dir);
        const auto dataset_id = spec.to_string();
        for (auto fitter : config.fitters) {
            for (auto eps : eps_grid) {
                for (auto threads : config.thread_counts) {
                    PlaModel model;
                    double total_ms = 0;
                    std::string cell = dataset_id + "|" + to_string(fitter) + "|eps=" +
                                       std::to_string(eps) + "|t=" + std::to_string(threads);
                    for (std::size_t r = 0; r < config.repeats; ++r) {
                        auto t0 = detail::Clock::now();
                        model = threads == 1 ? fit(fitter, keys, eps)
                                             : fit_parallel(fitter, keys, eps, threads);
                        double ms = detail::elapsed_ms(t0);
                        total_ms += ms;
                        if (raw)
                            raw->push_back({cell, r, ms, 0.0, 0.0});
                    }
                    auto report = verify_epsilon(keys, model, verify_rounding(fitter));
                    if (!report.ok)
                        throw std::runtime_error(
                            "epsilon violation in cell " + cell + ": max residual " +
                            std::to_string(report.max_abs_residual) + " at rank " +
                            std::to_string(report.worst_rank));
                    BenchRecord rec;
                    rec.dataset = dataset_id;
                    rec.fitter = to_string(fitter);
                    rec.structure = "raw-pla";
                    rec.eps = eps;
                    rec.threads = threads;
                    rec.segment_count = model.segment_count();
                    rec.segments_per_layer = std::to_string(model.segment_count());
                    rec.size_bytes = model.segment_count() * kSegmentBytes;
                    rec.build_ms = total_ms / static_cast<double>(config.repeats);
                    rec.repeats = config.repeats;
                    records.push_back(std::move(rec));
                }
            }
        }
    }
    return records;
}

/// Builds PGM and FIT structures per cell, checks every workload query
/// against the binary-search oracle, then measures query times on the
/// shared workload. A lookup mismatch aborts the cell.
inline std::vector<BenchRecord> bench_index(const BenchConfig &config,
                                            std::vector<RepeatRow> *raw = nullptr) {
    if (config.repeats < 1)
        throw std::invalid_argument("repeats must be >= 1");
    std::vector<BenchRecord> records;
    const auto eps_grid = config.eps_or_default();

    for (const auto &spec : config.datasets) {
        auto keys = load_dataset(spec, config.cache_dir);
        auto workload = sample_workload(keys, std::min(config.queries, keys.size()),
                                        config.workload_seed);
        const auto dataset_id = spec.to_string();

        auto check_queries = [&](auto &&lookup, const std::string &cell) {
            for (Key q : workload) {
                auto got = lookup(q);
                auto want = oracle_lookup(keys, q);
                if (got.found != want.found || got.rank != want.rank)
                    throw std::runtime_error("lookup mismatch in cell " + cell + " for key " +
                                             std::to_string(q));
            }
        };

        auto push_record = [&](BenchRecord rec, const std::string &cell,
                               const std::vector<double> &build_ms, auto &&lookup) {
            rec.dataset = dataset_id;
            rec.build_ms = std::accumulate(build_ms.begin(), build_ms.end(), 0.0) /
                           static_cast<double>(build_ms.size());
            rec.repeats = config.repeats;
            auto timing = detail::time_workload(workload, config.repeats, lookup);
            rec.query_ns_mean = timing.ns_mean;
            rec.query_ns_p99 = timing.ns_p99;
            if (raw)
                for (std::size_t r = 0; r < config.repeats; ++r)
                    raw->push_back({cell, r, build_ms[r], timing.per_repeat[r].first,
                                    timing.per_repeat[r].second});
            records.push_back(std::move(rec));
        };

        for (auto fitter : config.fitters) {
            if (config.build_pgm) {
                for (auto [ei, el] : config.pgm_pairs()) {
                    std::string cell = dataset_id + "|" + to_string(fitter) + "|pgm|ei=" +
                                       std::to_string(ei) + "|el=" + std::to_string(el);
                    PgmIndex::Options opt{el, ei, fitter, config.root_threshold,
                                          config.search_threshold};
                    std::vector<double> build_ms;
                    PgmIndex index;
                    for (std::size_t r = 0; r < config.repeats; ++r) {
                        auto t0 = detail::Clock::now();
                        index = PgmIndex::build(keys, opt);
                        build_ms.push_back(detail::elapsed_ms(t0));
                    }
                    check_queries([&](Key q) { return index.lookup(q); }, cell);
                    BenchRecord rec;
                    rec.fitter = to_string(fitter);
                    rec.structure = "pgm";
                    rec.eps_internal = ei;
                    rec.eps_last = el;
                    std::size_t total_segments = 0;
                    std::string per_layer;
                    for (auto c : index.layer_segment_counts()) {
                        total_segments += c;
                        if (!per_layer.empty())
                            per_layer += ';';
                        per_layer += std::to_string(c);
                    }
                    rec.segment_count = total_segments;
                    rec.segments_per_layer = per_layer;
                    rec.size_bytes = index.size_bytes();
                    push_record(std::move(rec), cell, build_ms,
                                [&](Key q) { return index.lookup(q).rank; });
                }
            }
            if (config.build_fit) {
                for (auto eps : eps_grid) {
                    std::string cell = dataset_id + "|" + to_string(fitter) +
                                       "|fit-tree|eps=" + std::to_string(eps);
                    FitTree::Options opt{eps, config.fanout, fitter};
                    std::vector<double> build_ms;
                    FitTree tree;
                    for (std::size_t r = 0; r < config.repeats; ++r) {
                        auto t0 = detail::Clock::now();
                        tree = FitTree::build(keys, opt);
                        build_ms.push_back(detail::elapsed_ms(t0));
                    }
                    check_queries([&](Key q) { return tree.lookup(q); }, cell);
                    BenchRecord rec;
                    rec.fitter = to_string(fitter);
                    rec.structure = "fit-tree";
                    rec.eps = eps;
                    rec.segment_count = tree.leaf().segment_count();
                    rec.segments_per_layer = std::to_string(rec.segment_count);
                    rec.size_bytes = tree.size_bytes();
                    push_record(std::move(rec), cell, build_ms,
                                [&](Key q) { return tree.lookup(q).rank; });
                }
            }
        }
    }
    return records;
}

}  // namespace plax
