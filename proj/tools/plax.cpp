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

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "plax/bench.hpp"
#include "plax/core.hpp"
#include "plax/data.hpp"
#include "plax/fitters.hpp"
#include "plax/indexes.hpp"
#include "plax/parallel.hpp"

namespace {

std::vector<plax::DatasetSpec> parse_datasets(const std::vector<std::string> &texts) {
    std::vector<plax::DatasetSpec> specs;
    for (const auto &t : texts)
        specs.push_back(plax::DatasetSpec::parse(t));
    return specs;
}

std::vector<plax::FitterKind> parse_fitters(const std::vector<std::string> &names) {
    std::vector<plax::FitterKind> kinds;
    for (const auto &n : names)
        kinds.push_back(plax::fitter_from_string(n));
    return kinds;
}

void print_report(const std::vector<plax::BenchRecord> &records) {
    using plax::BenchRecord;
    auto print_rows = [](const std::string &title, const std::vector<const BenchRecord *> &rows,
                         bool pgm) {
        if (rows.empty())
            return;
        std::printf("\n== %s ==\n", title.c_str());
        if (pgm)
            std::printf("%-36s %-8s %6s %6s %3s %12s %-20s %12s %10s %12s %12s\n", "dataset",
                        "fitter", "eps_i", "eps_l", "t", "segments", "per-layer", "bytes",
                        "build_ms", "q_ns_mean", "q_ns_p99");
        else
            std::printf("%-36s %-8s %6s %3s %12s %12s %10s %12s %12s\n", "dataset", "fitter",
                        "eps", "t", "segments", "bytes", "build_ms", "q_ns_mean", "q_ns_p99");
        for (const auto *r : rows) {
            if (pgm)
                std::printf("%-36s %-8s %6llu %6llu %3zu %12zu %-20s %12zu %10.3f %12.1f %12.1f\n",
                            r->dataset.c_str(), r->fitter.c_str(),
                            static_cast<unsigned long long>(r->eps_internal),
                            static_cast<unsigned long long>(r->eps_last), r->threads,
                            r->segment_count, r->segments_per_layer.c_str(), r->size_bytes,
                            r->build_ms, r->query_ns_mean, r->query_ns_p99);
            else
                std::printf("%-36s %-8s %6llu %3zu %12zu %12zu %10.3f %12.1f %12.1f\n",
                            r->dataset.c_str(), r->fitter.c_str(),
                            static_cast<unsigned long long>(r->eps), r->threads,
                            r->segment_count, r->size_bytes, r->build_ms, r->query_ns_mean,
                            r->query_ns_p99);
        }
    };

    std::vector<const BenchRecord *> pla, pgm, fit;
    for (const auto &r : records) {
        if (r.structure == "raw-pla") pla.push_back(&r);
        else if (r.structure == "pgm") pgm.push_back(&r);
        else fit.push_back(&r);
    }
    print_rows("raw PLA fits", pla, false);
    print_rows("PGM indexes", pgm, true);
    print_rows("FIT trees", fit, false);

    // Inverse-square law fits for single-threaded frs sweeps.
    std::map<std::string, std::vector<std::pair<double, double>>> frs_points;
    for (const auto *r : pla)
        if (r->fitter == "frs" && r->threads == 1)
            frs_points[r->dataset].emplace_back(static_cast<double>(r->eps),
                                                static_cast<double>(r->segment_count));
    for (auto &[dataset, points] : frs_points) {
        if (points.size() < 3)
            continue;
        auto f = plax::fit_inverse_square(points);
        auto slope = plax::log_log_slope(points);
        std::printf("\nfrs on %s: segments ~= %.3f * eps^-2 + %.3f (R2 = %.5f, log-log slope %.3f)\n",
                    dataset.c_str(), f.a, f.b, f.r2, slope);
    }
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"error-bounded piecewise linear approximation fitters, learned indexes, "
                 "and benchmark harness"};
    app.set_config("--config", "", "read options from a key-value config file");
    app.require_subcommand(1);

    std::string dataset_text = "uniform";
    std::vector<std::string> dataset_texts;
    std::vector<std::string> fitter_names;
    std::string fitter_name = "optimal";
    std::string out_path, in_path, model_path, cache_dir, rounding = "none";
    std::string structure = "both";
    std::vector<std::uint64_t> eps_list, eps_internal_list, eps_last_list;
    std::uint64_t eps = 64;
    std::size_t threads = 1, repeats = 10, queries = 1000, trials = 100, fanout = 16;
    std::vector<std::size_t> thread_list;
    std::uint64_t seed = 7;

    auto *gen = app.add_subcommand("gen", "generate a dataset and write it as a binary key file");
    gen->add_option("--dataset", dataset_text, "dataset spec, e.g. uniform:n=1000000;seed=42");
    gen->add_option("--out", out_path, "output path")->required();

    auto *workload = app.add_subcommand("workload", "sample query keys from a dataset");
    workload->add_option("--dataset", dataset_text, "dataset spec or file");
    workload->add_option("--queries", queries, "number of queries (default 1000)");
    workload->add_option("--seed", seed, "sampling seed");
    workload->add_option("--out", out_path, "output path")->required();

    auto *fitc = app.add_subcommand("fit", "run one fitter and print segment statistics");
    fitc->add_option("--dataset", dataset_text, "dataset spec or file");
    fitc->add_option("--fitter", fitter_name, "frs|optimal|greedy|swing");
    fitc->add_option("--eps", eps, "error bound");
    fitc->add_option("--threads", threads, "chunk-parallel fitting threads");
    fitc->add_option("--out", model_path, "save the fitted model to this file");

    auto *verify = app.add_subcommand("verify", "epsilon-soundness check of a saved model");
    verify->add_option("--model", model_path, "model file")->required();
    verify->add_option("--dataset", dataset_text, "dataset spec or file")->required();
    verify->add_option("--rounding", rounding, "none|floor residual convention");

    auto *bpla = app.add_subcommand("bench-pla", "segment count / build time experiment matrix");
    bpla->add_option("--dataset", dataset_texts, "dataset specs")->required();
    bpla->add_option("--fitter", fitter_names, "fitters (default frs optimal greedy swing)");
    bpla->add_option("--eps", eps_list, "eps grid (default 4..8192 powers of two)");
    bpla->add_option("--threads", thread_list, "thread counts (default 1)");
    bpla->add_option("--repeats", repeats, "timing repeats (default 10)");
    bpla->add_option("--out", out_path, "output CSV")->required();
    bpla->add_option("--cache", cache_dir, "dataset cache directory");

    auto *bidx = app.add_subcommand("bench-index", "PGM / FIT index experiment matrix");
    bidx->add_option("--dataset", dataset_texts, "dataset specs")->required();
    bidx->add_option("--fitter", fitter_names, "fitters (default optimal greedy swing)");
    bidx->add_option("--eps", eps_list, "eps grid for fit-tree and for pgm eps_i = eps_l");
    bidx->add_option("--eps-internal", eps_internal_list, "pgm internal-eps grid");
    bidx->add_option("--eps-last", eps_last_list, "pgm last-level-eps grid");
    bidx->add_option("--structure", structure, "pgm|fit-tree|both");
    bidx->add_option("--fanout", fanout, "fit-tree fanout (default 16)");
    bidx->add_option("--repeats", repeats, "timing repeats (default 10)");
    bidx->add_option("--queries", queries, "workload size (default 1000)");
    bidx->add_option("--seed", seed, "workload sampling seed");
    bidx->add_option("--out", out_path, "output CSV")->required();
    bidx->add_option("--cache", cache_dir, "dataset cache directory");

    auto *cov = app.add_subcommand("coverage", "Monte-Carlo first-segment coverage trials");
    cov->add_option("--dataset", dataset_text, "synthetic dataset spec (default uniform:n=1000000)");
    cov->add_option("--eps", eps_list, "eps values (default 16 32 64 128)");
    cov->add_option("--trials", trials, "trials per eps (default 100)");
    cov->add_option("--seed", seed, "base seed");
    cov->add_option("--out", out_path, "optional output CSV");

    auto *report = app.add_subcommand("report", "summarize a benchmark CSV");
    report->add_option("--in", in_path, "input CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            auto spec = plax::DatasetSpec::parse(dataset_text);
            auto keys = plax::load_dataset(spec);
            plax::write_sosd(out_path, keys);
            std::printf("wrote %zu keys to %s\n", keys.size(), out_path.c_str());
        } else if (*workload) {
            auto keys = plax::load_dataset(plax::DatasetSpec::parse(dataset_text));
            auto sample = plax::sample_workload(keys, queries, seed);
            plax::write_sosd(out_path, sample);
            std::printf("wrote %zu queries to %s\n", sample.size(), out_path.c_str());
        } else if (*fitc) {
            auto kind = plax::fitter_from_string(fitter_name);
            auto keys = plax::load_dataset(plax::DatasetSpec::parse(dataset_text));
            auto t0 = std::chrono::steady_clock::now();
            auto model = threads == 1 ? plax::fit(kind, keys, eps)
                                      : plax::fit_parallel(kind, keys, eps, threads);
            double ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
            auto report_v = plax::verify_epsilon(keys, model, plax::verify_rounding(kind));
            std::printf("fitter=%s n=%zu eps=%llu threads=%zu segments=%zu "
                        "max_residual=%.6f ok=%s build_ms=%.3f\n",
                        plax::to_string(kind), keys.size(),
                        static_cast<unsigned long long>(eps), threads,
                        model.segment_count(), report_v.max_abs_residual,
                        report_v.ok ? "yes" : "NO", ms);
            if (!model_path.empty())
                plax::save_model(model, model_path);
            if (!report_v.ok)
                return 1;
        } else if (*verify) {
            auto model = plax::load_model(model_path);
            auto keys = plax::load_dataset(plax::DatasetSpec::parse(dataset_text));
            auto mode = rounding == "floor" ? plax::Rounding::floor : plax::Rounding::none;
            auto report_v = plax::verify_epsilon(keys, model, mode);
            std::printf("segments=%zu eps=%llu max_residual=%.6f worst_rank=%zu ok=%s\n",
                        report_v.segment_count,
                        static_cast<unsigned long long>(model.epsilon),
                        report_v.max_abs_residual, report_v.worst_rank,
                        report_v.ok ? "yes" : "NO");
            if (!report_v.ok)
                return 1;
        } else if (*bpla) {
            plax::BenchConfig config;
            config.datasets = parse_datasets(dataset_texts);
            config.fitters = fitter_names.empty()
                                 ? std::vector<plax::FitterKind>{plax::FitterKind::frs,
                                                                 plax::FitterKind::optimal,
                                                                 plax::FitterKind::greedy,
                                                                 plax::FitterKind::swing}
                                 : parse_fitters(fitter_names);
            config.eps_grid = eps_list;
            if (!thread_list.empty())
                config.thread_counts = thread_list;
            config.repeats = repeats;
            config.cache_dir = cache_dir;
            std::vector<plax::RepeatRow> rows;
            auto records = plax::bench_pla(config, &rows);
            plax::emit_csv(records, out_path);
            plax::emit_repeats_csv(rows, out_path + ".repeats.csv");
            std::printf("wrote %zu records to %s\n", records.size(), out_path.c_str());
        } else if (*bidx) {
            plax::BenchConfig config;
            config.datasets = parse_datasets(dataset_texts);
            if (!fitter_names.empty())
                config.fitters = parse_fitters(fitter_names);
            for (auto f : config.fitters)
                if (f == plax::FitterKind::frs || f == plax::FitterKind::dp_oracle)
                    throw std::invalid_argument(
                        std::string(plax::to_string(f)) +
                        " does not meet the strict per-point bound index lookups rely on; "
                        "use optimal, greedy, or swing");
            config.eps_grid = eps_list;
            config.eps_internal_grid = eps_internal_list;
            config.eps_last_grid = eps_last_list;
            config.fanout = fanout;
            config.repeats = repeats;
            config.queries = queries;
            config.workload_seed = seed;
            config.cache_dir = cache_dir;
            config.build_pgm = structure != "fit-tree";
            config.build_fit = structure != "pgm";
            std::vector<plax::RepeatRow> rows;
            auto records = plax::bench_index(config, &rows);
            plax::emit_csv(records, out_path);
            plax::emit_repeats_csv(rows, out_path + ".repeats.csv");
            std::printf("wrote %zu records to %s\n", records.size(), out_path.c_str());
        } else if (*cov) {
            auto spec = dataset_text == "uniform"
                            ? plax::DatasetSpec::parse("uniform:n=1000000")
                            : plax::DatasetSpec::parse(dataset_text);
            if (eps_list.empty())
                eps_list = {16, 32, 64, 128};
            std::ofstream csv;
            if (!out_path.empty()) {
                csv.open(out_path);
                csv << "distribution,n,eps,trials,mean_coverage,range_estimate\n";
            }
            std::printf("%-40s %6s %8s %14s %14s\n", "distribution", "eps", "trials",
                        "mean_coverage", "0.303*eps^2");
            for (auto e : eps_list) {
                auto est = plax::coverage_trial(spec, e, trials, seed);
                std::printf("%-40s %6llu %8zu %14.2f %14.2f\n", est.distribution.c_str(),
                            static_cast<unsigned long long>(e), est.trials,
                            est.mean_coverage, 0.303 * static_cast<double>(e) *
                                                   static_cast<double>(e));
                if (csv.is_open())
                    csv << est.distribution << ',' << est.n << ',' << est.eps << ','
                        << est.trials << ',' << est.mean_coverage << ','
                        << est.range_estimate << '\n';
            }
        } else if (*report) {
            print_report(plax::parse_csv(in_path));
        }
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
