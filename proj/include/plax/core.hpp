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
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace plax {

/// Sort key. Datasets are strictly increasing sequences of keys.
using Key = std::uint64_t;

/// 0-based position of a key in the sorted array.
using Rank = std::size_t;

/// One linear piece of a piecewise model: predicts alpha * (x - s) + beta
/// on the half-open key range [s, next segment's s).
struct Segment {
    Key s;         ///< start key
    double alpha;  ///< slope, in rank units per key unit (>= 0)
    double beta;   ///< value at x == s, in rank units
};

/// An error-bounded piecewise linear model of the key -> rank mapping.
/// Every dataset key x with rank y satisfies |predict(x) - y| <= epsilon.
struct PlaModel {
    std::vector<Segment> segments;  ///< ordered by strictly increasing s
    std::uint64_t epsilon = 0;
    std::size_t n = 0;  ///< size of the dataset the model was fitted on

    std::size_t segment_count() const { return segments.size(); }
};

/// In-memory footprint of one segment: 8-byte key + 8-byte slope +
/// 8-byte intercept. Used consistently by all size accounting.
inline constexpr std::size_t kSegmentBytes = 24;

/// Evaluates one segment at q. The subtraction is done in unsigned 64-bit
/// integer arithmetic before conversion to double, so precision depends on
/// the segment span rather than the absolute key magnitude. Keys below s
/// (only possible for the first segment) evaluate on the backward extension
/// of the line.
inline double eval_segment(const Segment &seg, Key q) {
    if (q >= seg.s)
        return seg.alpha * static_cast<double>(q - seg.s) + seg.beta;
    return seg.beta - seg.alpha * static_cast<double>(seg.s - q);
}

/// Index of the segment governing q: the unique j with s_j <= q < s_{j+1}
/// (last segment open-ended). Keys below segments[0].s route to segment 0.
inline std::size_t governing_segment(const PlaModel &model, Key q) {
    if (model.segments.empty())
        throw std::invalid_argument("empty model");
    auto it = std::upper_bound(model.segments.begin(), model.segments.end(), q,
                               [](Key k, const Segment &s) { return k < s.s; });
    if (it == model.segments.begin())
        return 0;
    return static_cast<std::size_t>(std::distance(model.segments.begin(), it)) - 1;
}

/// Raw real-valued approximate rank of q. Flooring and clamping are the
/// caller's concern.
inline double predict(const PlaModel &model, Key q) {
    return eval_segment(model.segments[governing_segment(model, q)], q);
}

/// Floors a raw prediction and clamps it to a valid rank in [0, n-1].
inline std::size_t clamp_rank(double prediction, std::size_t n) {
    double f = std::floor(prediction);
    if (!(f > 0))  // also catches NaN
        return 0;
    if (f >= static_cast<double>(n))
        return n - 1;
    return static_cast<std::size_t>(f);
}

struct SearchResult {
    bool found;
    std::size_t rank;  ///< rank of q if found, else its insertion rank
};

/// Exact search restricted to ranks [center - eps, center + eps], both ends
/// clamped to [0, n-1]. Guaranteed to locate q whenever the model that
/// produced `center` satisfies its epsilon bound. Absent keys report the
/// insertion rank within the window.
inline SearchResult last_mile_search(std::span<const Key> keys, Key q,
                                     std::size_t center, std::uint64_t eps) {
    const std::size_t n = keys.size();
    if (n == 0)
        return {false, 0};
    if (center >= n)
        center = n - 1;
    const std::size_t radius = eps < n ? static_cast<std::size_t>(eps) : n;
    const std::size_t lo = center >= radius ? center - radius : 0;
    const std::size_t hi = std::min(n - 1, center + radius);
    auto first = keys.begin() + static_cast<std::ptrdiff_t>(lo);
    auto last = keys.begin() + static_cast<std::ptrdiff_t>(hi) + 1;
    auto it = std::lower_bound(first, last, q);
    std::size_t pos = static_cast<std::size_t>(std::distance(keys.begin(), it));
    if (it != last && *it == q)
        return {true, pos};
    return {false, pos};
}

/// Residual convention for verification. `floor` applies the prediction
/// flooring used by the fixed-slope construction before taking residuals;
/// `none` bounds the raw real-valued prediction.
enum class Rounding { none, floor };

struct VerifyReport {
    bool ok;                  ///< max_abs_residual <= epsilon
    double max_abs_residual;
    Rank worst_rank;
    std::size_t segment_count;
};

/// Evaluates |predict(x_i) - i| for every key and reports the maximum.
/// This is the universal correctness oracle applied to every fitter's
/// output. Keys must be strictly increasing; the sweep walks segments in
/// order, which is equivalent to per-key binary-search routing.
inline VerifyReport verify_epsilon(std::span<const Key> keys, const PlaModel &model,
                                   Rounding rounding = Rounding::none) {
    if (keys.empty())
        throw std::invalid_argument("empty keys");
    if (model.segments.empty())
        throw std::invalid_argument("empty model");
    double max_abs = 0.0;
    Rank worst = 0;
    std::size_t j = 0;
    const auto &segs = model.segments;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        while (j + 1 < segs.size() && keys[i] >= segs[j + 1].s)
            ++j;
        double pred = eval_segment(segs[j], keys[i]);
        if (rounding == Rounding::floor)
            pred = std::floor(pred);
        double r = std::abs(pred - static_cast<double>(i));
        if (r > max_abs) {
            max_abs = r;
            worst = i;
        }
    }
    return {max_abs <= static_cast<double>(model.epsilon), max_abs, worst,
            model.segments.size()};
}

/// Writes a model as a small text file. Slopes and intercepts are stored as
/// hexadecimal floating-point literals so the round trip is bit-exact.
inline void save_model(const PlaModel &model, const std::string &path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write model file: " + path);
    out << "plax-model 1\n";
    out << "epsilon " << model.epsilon << "\n";
    out << "n " << model.n << "\n";
    out << "segments " << model.segments.size() << "\n";
    char a[64], b[64];
    for (const auto &seg : model.segments) {
        std::snprintf(a, sizeof a, "%a", seg.alpha);
        std::snprintf(b, sizeof b, "%a", seg.beta);
        out << seg.s << ' ' << a << ' ' << b << "\n";
    }
    if (!out)
        throw std::runtime_error("error while writing model file: " + path);
}

inline PlaModel load_model(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open model file: " + path);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "plax-model" || version != 1)
        throw std::runtime_error("not a plax model file: " + path);
    PlaModel model;
    std::string field;
    std::size_t m = 0;
    in >> field >> model.epsilon;
    if (field != "epsilon")
        throw std::runtime_error("malformed model file: " + path);
    in >> field >> model.n;
    in >> field >> m;
    model.segments.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        Segment seg{};
        std::string sa, sb;
        in >> seg.s >> sa >> sb;
        if (!in)
            throw std::runtime_error("truncated model file: " + path);
        seg.alpha = std::strtod(sa.c_str(), nullptr);
        seg.beta = std::strtod(sb.c_str(), nullptr);
        model.segments.push_back(seg);
    }
    return model;
}

}  // namespace plax
