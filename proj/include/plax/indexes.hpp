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
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "plax/core.hpp"
#include "plax/fitters.hpp"

namespace plax {

struct LookupResult {
    bool found;
    std::size_t rank;            ///< exact rank if found, else insertion rank
    std::size_t layers_visited;
    std::size_t window_width;    ///< widest search window along the path
};

/// Instrumented lookup outcome, separating the internal-layer windows from
/// the last-mile window so each can be checked against its own bound.
struct LookupTrace {
    bool found;
    std::size_t rank;
    std::size_t layers_visited;
    std::size_t max_internal_window;  ///< 0 when there are no internal steps
    std::size_t last_window;
};

namespace detail {

/// Rank of each segment's start key within the array the model was fitted
/// on, plus a sentinel equal to the array size. Segment starts are always
/// elements of the fitted array, so a single two-pointer sweep suffices.
inline std::vector<std::size_t> start_ranks(const PlaModel &model,
                                            std::span<const Key> fitted) {
    std::vector<std::size_t> ranks;
    ranks.reserve(model.segments.size() + 1);
    std::size_t i = 0;
    for (const auto &seg : model.segments) {
        while (i < fitted.size() && fitted[i] < seg.s)
            ++i;
        ranks.push_back(i);
    }
    ranks.push_back(fitted.size());
    return ranks;
}

/// Prediction used to enter the array below: the raw segment evaluation,
/// capped by the rank of the next segment's start. The cap keeps the
/// floored prediction within eps of the true position even for keys that
/// fall in the gap before the next segment, where the line extends past its
/// last fitted point.
inline double capped_prediction(const PlaModel &model,
                                const std::vector<std::size_t> &ranks,
                                std::size_t seg_idx, Key q) {
    double p = eval_segment(model.segments[seg_idx], q);
    double cap = static_cast<double>(ranks[seg_idx + 1]);
    return p < cap ? p : cap;
}

struct Window {
    std::size_t lo, hi;  // inclusive
    std::size_t width() const { return hi - lo + 1; }
};

inline Window make_window(std::size_t center, std::uint64_t eps, std::size_t size) {
    const std::size_t radius = eps < size ? static_cast<std::size_t>(eps) : size;
    return {center >= radius ? center - radius : 0,
            std::min(size - 1, center + radius)};
}

}  // namespace detail

/// Two-layer-parameter learned index: a last-level model over the data keys
/// (eps_last) under a stack of models over the segment start keys of the
/// layer below (eps_internal), recursively until a layer has at most
/// root_threshold segments. The index references the keys it was built on;
/// they must outlive it. Immutable after construction and safe for
/// concurrent lookups.
class PgmIndex {
public:
    struct Options {
        std::uint64_t eps_last = 64;
        std::uint64_t eps_internal = 8;
        FitterKind fitter = FitterKind::optimal;
        std::size_t root_threshold = 1;
        /// Internal windows are scanned linearly at eps_internal up to this
        /// value and binary-searched above it.
        std::size_t search_threshold = 32;
    };

    static PgmIndex build(std::span<const Key> keys, const Options &options) {
        if (keys.empty())
            throw std::invalid_argument("empty keys");
        if (options.root_threshold < 1)
            throw std::invalid_argument("root_threshold must be >= 1");
        PgmIndex index;
        index.keys_ = keys;
        index.options_ = options;

        index.layers_.push_back(fit(options.fitter, keys, options.eps_last));
        index.child_ranks_.push_back(
            detail::start_ranks(index.layers_.back(), keys));

        std::vector<Key> starts;
        while (index.layers_.back().segment_count() > options.root_threshold) {
            const auto &below = index.layers_.back();
            starts.clear();
            starts.reserve(below.segment_count());
            for (const auto &seg : below.segments)
                starts.push_back(seg.s);
            auto next = fit(options.fitter, starts, options.eps_internal);
            if (next.segment_count() >= below.segment_count())
                break;  // no shrinkage; stop with a wider root
            index.child_ranks_.push_back(detail::start_ranks(next, starts));
            index.layers_.push_back(std::move(next));
        }
        return index;
    }

    LookupResult lookup(Key q) const {
        auto t = lookup_trace(q);
        return {t.found, t.rank, t.layers_visited,
                std::max(t.max_internal_window, t.last_window)};
    }

    LookupTrace lookup_trace(Key q) const {
        const std::size_t top = layers_.size() - 1;
        std::size_t g = governing_segment(layers_[top], q);
        std::size_t max_internal = 0;

        const bool linear = options_.eps_internal <= options_.search_threshold;
        for (std::size_t j = top; j >= 1; --j) {
            const auto &below = layers_[j - 1];
            const std::size_t m = below.segment_count();
            double p = detail::capped_prediction(layers_[j], child_ranks_[j], g, q);
            auto win = detail::make_window(clamp_rank(p, m),
                                           options_.eps_internal, m);
            max_internal = std::max(max_internal, win.width());
            g = linear ? locate_linear(below, win, q) : locate_binary(below, win, q);
        }

        double p = detail::capped_prediction(layers_[0], child_ranks_[0], g, q);
        std::size_t center = clamp_rank(p, keys_.size());
        auto win = detail::make_window(center, options_.eps_last, keys_.size());
        auto hit = last_mile_search(keys_, q, center, options_.eps_last);
        return {hit.found, hit.rank, layers_.size(), max_internal, win.width()};
    }

    const std::vector<PlaModel> &layers() const { return layers_; }
    std::size_t height() const { return layers_.size(); }
    std::uint64_t eps_last() const { return options_.eps_last; }
    std::uint64_t eps_internal() const { return options_.eps_internal; }

    /// Segment count per layer, bottom-up.
    std::vector<std::size_t> layer_segment_counts() const {
        std::vector<std::size_t> counts;
        counts.reserve(layers_.size());
        for (const auto &layer : layers_)
            counts.push_back(layer.segment_count());
        return counts;
    }

    std::size_t size_bytes() const {
        std::size_t total = 0;
        for (const auto &layer : layers_)
            total += layer.segment_count() * kSegmentBytes;
        return total;
    }

    std::size_t bottom_size_bytes() const {
        return layers_.front().segment_count() * kSegmentBytes;
    }

    /// Floored clamped prediction a descent would use to enter layer
    /// `layer - 1`, with the parent segment located exactly. Exposed for
    /// residual reporting.
    std::size_t internal_prediction(std::size_t layer, Key q) const {
        const auto &model = layers_[layer];
        std::size_t g = governing_segment(model, q);
        double p = detail::capped_prediction(model, child_ranks_[layer], g, q);
        return clamp_rank(p, layers_[layer - 1].segment_count());
    }

private:
    // Both locators return the rightmost segment in the window whose start
    // key is <= q, falling back to the window's left edge.
    static std::size_t locate_linear(const PlaModel &model, detail::Window win,
                                     Key q) {
        const auto &segs = model.segments;
        std::size_t idx = win.lo;
        for (std::size_t k = win.lo + 1; k <= win.hi && segs[k].s <= q; ++k)
            idx = k;
        return idx;
    }

    static std::size_t locate_binary(const PlaModel &model, detail::Window win,
                                     Key q) {
        const auto &segs = model.segments;
        auto first = segs.begin() + static_cast<std::ptrdiff_t>(win.lo);
        auto last = segs.begin() + static_cast<std::ptrdiff_t>(win.hi) + 1;
        auto it = std::upper_bound(first, last, q,
                                   [](Key k, const Segment &s) { return k < s.s; });
        if (it == first)
            return win.lo;
        return static_cast<std::size_t>(std::distance(segs.begin(), it)) - 1;
    }

    std::span<const Key> keys_;
    Options options_;
    std::vector<PlaModel> layers_;  ///< bottom-up; layers_[0] is over the data
    std::vector<std::vector<std::size_t>> child_ranks_;
};

/// Per-internal-layer mean absolute residual between the floored prediction
/// and the true governing position, plus the maximum over layers. Entry i
/// describes layer i + 1 predicting into layer i (bottom-up).
struct LayerResidualStats {
    std::vector<double> mean_abs_residual;
    double max_mean;
};

inline LayerResidualStats layer_residual_stats(const PgmIndex &index,
                                               std::span<const Key> queries) {
    if (queries.empty())
        throw std::invalid_argument("empty query set");
    LayerResidualStats stats{{}, 0.0};
    const auto &layers = index.layers();
    for (std::size_t j = 1; j < layers.size(); ++j) {
        double sum = 0.0;
        for (Key q : queries) {
            std::size_t predicted = index.internal_prediction(j, q);
            std::size_t truth = governing_segment(layers[j - 1], q);
            sum += predicted >= truth ? static_cast<double>(predicted - truth)
                                      : static_cast<double>(truth - predicted);
        }
        double mean = sum / static_cast<double>(queries.size());
        stats.mean_abs_residual.push_back(mean);
        stats.max_mean = std::max(stats.max_mean, mean);
    }
    return stats;
}

/// A last-level model under a static bulk-loaded search tree of fixed
/// fanout over the segment start keys. At fanout 16 each internal node
/// occupies 256 bytes (16 key + child-pointer pairs). Read-only after
/// construction; the referenced keys must outlive the tree.
class FitTree {
public:
    struct Options {
        std::uint64_t eps = 64;
        std::size_t fanout = 16;
        FitterKind fitter = FitterKind::optimal;
    };

    static FitTree build(std::span<const Key> keys, const Options &options) {
        return from_model(keys, fit(options.fitter, keys, options.eps),
                          options.fanout);
    }

    /// Bulk-loads the routing tree over an already fitted leaf model.
    static FitTree from_model(std::span<const Key> keys, PlaModel leaf,
                              std::size_t fanout) {
        if (keys.empty())
            throw std::invalid_argument("empty keys");
        if (fanout < 2)
            throw std::invalid_argument("fanout must be >= 2");
        FitTree tree;
        tree.keys_ = keys;
        tree.fanout_ = fanout;
        tree.leaf_start_ranks_ = detail::start_ranks(leaf, keys);
        tree.leaf_ = std::move(leaf);

        // routing_[h][v] = first key of node v's subtree, h levels up from
        // the segments. Level sizes shrink by the fanout until the root.
        std::size_t size = tree.leaf_.segment_count();
        do {
            std::size_t nodes = (size + fanout - 1) / fanout;
            std::vector<Key> level(nodes);
            for (std::size_t v = 0; v < nodes; ++v)
                level[v] = tree.first_key(tree.routing_.size(), v * fanout);
            tree.routing_.push_back(std::move(level));
            size = nodes;
        } while (size > 1);
        return tree;
    }

    LookupResult lookup(Key q) const {
        auto t = lookup_trace(q);
        return {t.found, t.rank, t.layers_visited, t.last_window};
    }

    LookupTrace lookup_trace(Key q) const {
        std::size_t idx = 0;  // node index, walking down from the root
        for (std::size_t h = routing_.size(); h >= 1; --h) {
            const std::size_t entries =
                h == 1 ? leaf_.segment_count() : routing_[h - 2].size();
            const std::size_t base = idx * fanout_;
            const std::size_t end = std::min(base + fanout_, entries);
            std::size_t child = base;
            for (std::size_t k = base + 1; k < end && first_key(h - 1, k) <= q; ++k)
                child = k;
            idx = child;
        }

        double p = detail::capped_prediction(leaf_, leaf_start_ranks_, idx, q);
        std::size_t center = clamp_rank(p, keys_.size());
        auto win = detail::make_window(center, leaf_.epsilon, keys_.size());
        auto hit = last_mile_search(keys_, q, center, leaf_.epsilon);
        return {hit.found, hit.rank, routing_.size(), 0, win.width()};
    }

    const PlaModel &leaf() const { return leaf_; }
    std::size_t fanout() const { return fanout_; }

    /// Number of internal tree levels; 1 means a single root node.
    std::size_t height() const { return routing_.size(); }

    std::size_t node_count() const {
        std::size_t total = 0;
        for (const auto &level : routing_)
            total += level.size();
        return total;
    }

    std::size_t node_bytes() const { return 16 * fanout_; }

    std::size_t size_bytes() const {
        return leaf_.segment_count() * kSegmentBytes + node_count() * node_bytes();
    }

private:
    Key first_key(std::size_t level, std::size_t i) const {
        return level == 0 ? leaf_.segments[i].s : routing_[level - 1][i];
    }

    std::span<const Key> keys_;
    PlaModel leaf_;
    std::vector<std::size_t> leaf_start_ranks_;
    std::vector<std::vector<Key>> routing_;  ///< bottom-up routing levels
    std::size_t fanout_ = 16;
};

}  // namespace plax
