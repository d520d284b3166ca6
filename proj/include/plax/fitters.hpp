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

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "plax/core.hpp"

namespace plax {

enum class FitterKind { frs, optimal, greedy, swing, dp_oracle };

inline const char *to_string(FitterKind kind) {
    switch (kind) {
        case FitterKind::frs: return "frs";
        case FitterKind::optimal: return "optimal";
        case FitterKind::greedy: return "greedy";
        case FitterKind::swing: return "swing";
        case FitterKind::dp_oracle: return "dp-oracle";
    }
    return "?";
}

inline FitterKind fitter_from_string(const std::string &name) {
    if (name == "frs") return FitterKind::frs;
    if (name == "optimal") return FitterKind::optimal;
    if (name == "greedy") return FitterKind::greedy;
    if (name == "swing") return FitterKind::swing;
    if (name == "dp-oracle" || name == "dp_oracle") return FitterKind::dp_oracle;
    throw std::invalid_argument("unknown fitter: " + name);
}

/// Running feasible slope interval through the current pivot, maintained by
/// the greedy fitters. lo <= hi while the current segment is open.
struct SlopeRange {
    double lo;
    double hi;
};

namespace detail {

// The exact-arithmetic comparisons below multiply a key difference
// (< 2^64) by a shifted-rank difference. Keeping |rank +- eps| < 2^62
// guarantees the products fit in __int128.
inline void check_eps(std::uint64_t eps) {
    if (eps < 1)
        throw std::invalid_argument("eps must be >= 1");
    if (eps > (std::uint64_t{1} << 40))
        throw std::invalid_argument("eps too large");
}

/// Incremental feasibility test for one segment of an optimal fit.
///
/// Maintains the upper and lower convex hulls of the shifted points
/// (x_i, y_i + eps) and (x_i, y_i - eps) together with the two extreme
/// feasible lines: the minimum-slope line (from an upper-shifted point down
/// to a later lower-shifted point) and the maximum-slope line (the
/// opposite pair). A point is accepted iff some line still passes within
/// eps of every point seen so far; the test and all hull updates use exact
/// integer arithmetic, with no floating-point tolerance.
class ConvexFeasibility {
    struct Pt {
        Key x;
        long long y;
    };

    struct Slope {
        __int128 dx;
        __int128 dy;
        bool operator<(const Slope &o) const { return dy * o.dx < dx * o.dy; }
        bool operator>(const Slope &o) const { return dy * o.dx > dx * o.dy; }
        explicit operator long double() const {
            return static_cast<long double>(dy) / static_cast<long double>(dx);
        }
    };

    static Slope slope_between(const Pt &a, const Pt &b) {
        return {static_cast<__int128>(b.x) - static_cast<__int128>(a.x),
                static_cast<__int128>(b.y) - static_cast<__int128>(a.y)};
    }

    static __int128 cross(const Pt &o, const Pt &a, const Pt &b) {
        auto oa = slope_between(o, a);
        auto ob = slope_between(o, b);
        return oa.dx * ob.dy - oa.dy * ob.dx;
    }

    long long eps_;
    std::size_t count_ = 0;
    Key first_x_ = 0;
    // extreme_[0] -> extreme_[2] is the minimum-slope line,
    // extreme_[1] -> extreme_[3] the maximum-slope line.
    Pt extreme_[4];
    std::vector<Pt> upper_, lower_;
    std::size_t upper_start_ = 0, lower_start_ = 0;

public:
    explicit ConvexFeasibility(std::uint64_t eps) : eps_(static_cast<long long>(eps)) {
        check_eps(eps);
    }

    std::size_t size() const { return count_; }
    Key first_key() const { return first_x_; }

    void reset() {
        count_ = 0;
        upper_.clear();
        lower_.clear();
        upper_start_ = lower_start_ = 0;
    }

    /// Tries to extend the open segment with (x, y). Returns false if no
    /// single line can cover all points including this one; the state is
    /// left untouched in that case so the caller can emit and reset.
    bool add_point(Key x, long long y) {
        Pt up{x, y + eps_};
        Pt lo{x, y - eps_};

        if (count_ == 0) {
            first_x_ = x;
            extreme_[0] = up;
            extreme_[1] = lo;
            upper_.clear();
            lower_.clear();
            upper_.push_back(up);
            lower_.push_back(lo);
            upper_start_ = lower_start_ = 0;
            ++count_;
            return true;
        }
        if (count_ == 1) {
            extreme_[2] = lo;
            extreme_[3] = up;
            upper_.push_back(up);
            lower_.push_back(lo);
            ++count_;
            return true;
        }

        auto min_slope = slope_between(extreme_[0], extreme_[2]);
        auto max_slope = slope_between(extreme_[1], extreme_[3]);
        if (slope_between(extreme_[2], up) < min_slope ||
            slope_between(extreme_[3], lo) > max_slope)
            return false;

        if (slope_between(extreme_[1], up) < max_slope) {
            // The new upper bound tightens the maximum slope: pivot on the
            // lower hull point extremal w.r.t. the new point.
            auto best = slope_between(lower_[lower_start_], up);
            std::size_t best_i = lower_start_;
            for (std::size_t i = lower_start_ + 1; i < lower_.size(); ++i) {
                auto cand = slope_between(lower_[i], up);
                if (cand > best)
                    break;
                best = cand;
                best_i = i;
            }
            extreme_[1] = lower_[best_i];
            extreme_[3] = up;
            lower_start_ = best_i;

            std::size_t end = upper_.size();
            while (end >= upper_start_ + 2 && cross(upper_[end - 2], upper_[end - 1], up) <= 0)
                --end;
            upper_.resize(end);
            upper_.push_back(up);
        }

        if (slope_between(extreme_[0], lo) > min_slope) {
            // The new lower bound tightens the minimum slope.
            auto best = slope_between(upper_[upper_start_], lo);
            std::size_t best_i = upper_start_;
            for (std::size_t i = upper_start_ + 1; i < upper_.size(); ++i) {
                auto cand = slope_between(upper_[i], lo);
                if (cand < best)
                    break;
                best = cand;
                best_i = i;
            }
            extreme_[0] = upper_[best_i];
            extreme_[2] = lo;
            upper_start_ = best_i;

            std::size_t end = lower_.size();
            while (end >= lower_start_ + 2 && cross(lower_[end - 2], lower_[end - 1], lo) >= 0)
                --end;
            lower_.resize(end);
            lower_.push_back(lo);
        }

        ++count_;
        return true;
    }

    /// Emits the representative line of the open segment: the bisector of
    /// the two extreme lines through their intersection point. The
    /// intersection maximizes slack symmetrically over the feasible set.
    Segment emit() const {
        if (count_ == 0)
            throw std::logic_error("emit on empty segment");
        if (count_ == 1) {
            // Midpoint of the single point's band: the point itself.
            double y = 0.5 * (static_cast<double>(extreme_[0].y) +
                              static_cast<double>(extreme_[1].y));
            return {first_x_, 0.0, y};
        }
        auto min_slope = slope_between(extreme_[0], extreme_[2]);
        auto max_slope = slope_between(extreme_[1], extreme_[3]);
        long double alpha = (static_cast<long double>(min_slope) +
                             static_cast<long double>(max_slope)) / 2.0L;

        long double ix, iy;
        __int128 den = min_slope.dx * max_slope.dy - min_slope.dy * max_slope.dx;
        if (den == 0) {
            // Parallel extreme lines: any of them is feasible; pass through
            // the min-slope line's anchor.
            ix = static_cast<long double>(extreme_[0].x);
            iy = static_cast<long double>(extreme_[0].y);
        } else {
            auto p01 = slope_between(extreme_[0], extreme_[1]);
            long double tnum = static_cast<long double>(p01.dx * max_slope.dy - p01.dy * max_slope.dx);
            long double t = tnum / static_cast<long double>(den);
            ix = static_cast<long double>(extreme_[0].x) + t * static_cast<long double>(min_slope.dx);
            iy = static_cast<long double>(extreme_[0].y) + t * static_cast<long double>(min_slope.dy);
        }
        long double beta = iy - (ix - static_cast<long double>(first_x_)) * alpha;
        return {first_x_, static_cast<double>(alpha), static_cast<double>(beta)};
    }
};

inline void require_nonempty(std::span<const Key> keys) {
    if (keys.empty())
        throw std::invalid_argument("empty keys");
}

/// Balances a freshly emitted segment on its covered points. The feasible
/// line set often pinches to a contact point sitting exactly on a +-eps
/// band edge; rounding the mathematically feasible line to double can then
/// overshoot the bound by a few ulps. Shifting the intercept to the middle
/// of the measured residual range, in the same double arithmetic the
/// verifier uses, restores the bound without touching any feasibility
/// decision (segment counts are unchanged).
inline void recenter_segment(Segment &seg, std::span<const Key> keys, std::size_t lo,
                             std::size_t hi, std::size_t rank_offset,
                             std::uint64_t eps) {
    const double e = static_cast<double>(eps);
    for (int pass = 0; pass < 4; ++pass) {
        double dmin = std::numeric_limits<double>::infinity();
        double dmax = -dmin;
        for (std::size_t r = lo; r <= hi; ++r) {
            double d = eval_segment(seg, keys[r]) - static_cast<double>(rank_offset + r);
            dmin = std::min(dmin, d);
            dmax = std::max(dmax, d);
        }
        if (dmax <= e && dmin >= -e)
            break;
        seg.beta -= 0.5 * (dmax + dmin);
    }
}

}  // namespace detail

/// Optimal fitter: single left-to-right pass closing each segment at the
/// first point that empties the feasible line set. The segment count is the
/// minimum possible for the given eps. `rank_offset` is the global rank of
/// keys[0]; chunked construction uses it to emit globally valid intercepts.
inline PlaModel fit_optimal(std::span<const Key> keys, std::uint64_t eps,
                            std::size_t rank_offset = 0) {
    detail::require_nonempty(keys);
    detail::check_eps(eps);
    PlaModel model{{}, eps, keys.size()};
    detail::ConvexFeasibility feas(eps);
    std::size_t seg_start = 0;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        auto y = static_cast<long long>(rank_offset + i);
        if (!feas.add_point(keys[i], y)) {
            auto seg = feas.emit();
            detail::recenter_segment(seg, keys, seg_start, i - 1, rank_offset, eps);
            model.segments.push_back(seg);
            seg_start = i;
            feas.reset();
            feas.add_point(keys[i], y);
        }
    }
    auto seg = feas.emit();
    detail::recenter_segment(seg, keys, seg_start, keys.size() - 1, rank_offset, eps);
    model.segments.push_back(seg);
    return model;
}

namespace detail {

// Shared driver for the two pivot-based greedy fitters. The pivot of each
// segment is fixed when its second point arrives; every later point narrows
// the feasible slope interval through the pivot by the slopes to its
// +-eps bounds. The emitted line passes through the pivot with the interval
// midpoint as slope. Swing pivots on the first point itself; greedy pivots
// on the midpoint of the first two points.
template <bool MidpointPivot>
PlaModel fit_pivot_greedy(std::span<const Key> keys, std::uint64_t eps,
                          std::size_t rank_offset) {
    require_nonempty(keys);
    check_eps(eps);
    const double e = static_cast<double>(eps);
    PlaModel model{{}, eps, keys.size()};

    std::size_t start = 0;  // index of the current segment's first point
    Key x1 = keys[0];
    double pivot_dx = 0.0;  // pivot x, relative to x1
    double pivot_y = 0.0;
    SlopeRange range{0.0, 0.0};

    auto emit = [&](std::size_t count, std::size_t last) {
        if (count == 1) {
            model.segments.push_back(
                {x1, 0.0, static_cast<double>(rank_offset + start)});
            return;
        }
        double alpha = 0.5 * (range.lo + range.hi);
        Segment seg{x1, alpha, pivot_y - alpha * pivot_dx};
        recenter_segment(seg, keys, start, last, rank_offset, eps);
        model.segments.push_back(seg);
    };

    std::size_t count = 0;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const double y = static_cast<double>(rank_offset + i);
        if (count == 0) {
            start = i;
            x1 = keys[i];
            ++count;
            continue;
        }
        const double dx1 = static_cast<double>(keys[i] - x1);
        if (count == 1) {
            const double y1 = static_cast<double>(rank_offset + start);
            if constexpr (MidpointPivot) {
                pivot_dx = 0.5 * dx1;
                pivot_y = 0.5 * (y1 + y);
            } else {
                pivot_dx = 0.0;
                pivot_y = y1;
            }
            range.lo = (y - e - pivot_y) / (dx1 - pivot_dx);
            range.hi = (y + e - pivot_y) / (dx1 - pivot_dx);
            ++count;
            continue;
        }
        const double dx = dx1 - pivot_dx;
        const double lo = (y - e - pivot_y) / dx;
        const double hi = (y + e - pivot_y) / dx;
        if (lo > range.hi || hi < range.lo) {
            emit(count, i - 1);
            count = 1;
            start = i;
            x1 = keys[i];
            continue;
        }
        if (lo > range.lo) range.lo = lo;
        if (hi < range.hi) range.hi = hi;
        ++count;
    }
    emit(count, keys.size() - 1);
    return model;
}

}  // namespace detail

/// SwingFilter: O(1)-state greedy fitter pivoting on the first point of
/// each segment.
inline PlaModel fit_swing(std::span<const Key> keys, std::uint64_t eps,
                          std::size_t rank_offset = 0) {
    return detail::fit_pivot_greedy<false>(keys, eps, rank_offset);
}

/// GreedyPLA: like swing, but the pivot is the intersection of the two
/// extreme lines of the first two points, which by symmetry is their
/// midpoint. Single trailing points emit a degenerate horizontal line.
inline PlaModel fit_greedy(std::span<const Key> keys, std::uint64_t eps,
                           std::size_t rank_offset = 0) {
    return detail::fit_pivot_greedy<true>(keys, eps, rank_offset);
}

/// Fixed Range Segmentation: every segment carries the fixed slope
/// (n + 1) / (k_last - k_first); a new segment starts at (k_i, i) exactly
/// when the floored prediction misses rank i by more than eps. This is the
/// constructive baseline used for the coverage law; its residual guarantee
/// holds under the floored convention (Rounding::floor), which admits raw
/// residuals up to eps + 1.
inline PlaModel fit_frs(std::span<const Key> keys, std::uint64_t eps,
                        std::size_t rank_offset = 0) {
    detail::check_eps(eps);
    if (keys.size() < 2 || keys.back() == keys.front())
        throw std::invalid_argument("degenerate key range");
    const double slope = static_cast<double>(keys.size() + 1) /
                         static_cast<double>(keys.back() - keys.front());
    const double e = static_cast<double>(eps);
    PlaModel model{{}, eps, keys.size()};
    Key cur_s = keys.front();
    double cur_beta = static_cast<double>(rank_offset);
    model.segments.push_back({cur_s, slope, cur_beta});
    for (std::size_t i = 1; i < keys.size(); ++i) {
        const double pred =
            std::floor(slope * static_cast<double>(keys[i] - cur_s) + cur_beta);
        const double rank = static_cast<double>(rank_offset + i);
        if (std::abs(pred - rank) > e) {
            cur_s = keys[i];
            cur_beta = rank;
            model.segments.push_back({cur_s, slope, cur_beta});
        }
    }
    return model;
}

struct DpOracleResult {
    std::size_t segment_count;
    PlaModel model;  ///< one witness segmentation achieving the minimum
};

/// Exact minimal-segmentation oracle: dynamic program over prefixes, with
/// range feasibility decided by the same extreme-line predicate the optimal
/// fitter uses, run per range. Quadratic; guarded by a size cap.
inline DpOracleResult fit_dp_oracle(std::span<const Key> keys, std::uint64_t eps,
                                    std::size_t cap = 5000) {
    detail::require_nonempty(keys);
    detail::check_eps(eps);
    const std::size_t n = keys.size();
    if (n > cap)
        throw std::invalid_argument("oracle cap exceeded");

    // reach[i] = last index j such that points [i, j] are eps-feasible.
    // Feasibility of sub-ranges makes reach monotone non-decreasing.
    std::vector<std::size_t> reach(n);
    detail::ConvexFeasibility feas(eps);
    for (std::size_t i = 0; i < n; ++i) {
        feas.reset();
        std::size_t j = i;
        while (j < n && feas.add_point(keys[j], static_cast<long long>(j)))
            ++j;
        reach[i] = j - 1;
    }

    // dp[j] = minimal number of segments covering the first j points.
    // dp is non-decreasing, so the best predecessor of prefix j is the
    // smallest i whose range (i, j] is feasible.
    std::vector<std::size_t> dp(n + 1, 0), parent(n + 1, 0);
    std::size_t i_min = 0;
    for (std::size_t j = 1; j <= n; ++j) {
        while (reach[i_min] < j - 1)
            ++i_min;
        dp[j] = dp[i_min] + 1;
        parent[j] = i_min;
    }

    std::vector<std::pair<std::size_t, std::size_t>> ranges;  // [first, last]
    for (std::size_t j = n; j > 0; j = parent[j])
        ranges.emplace_back(parent[j], j - 1);

    PlaModel model{{}, eps, n};
    model.segments.reserve(ranges.size());
    for (auto it = ranges.rbegin(); it != ranges.rend(); ++it) {
        feas.reset();
        for (std::size_t k = it->first; k <= it->second; ++k)
            feas.add_point(keys[k], static_cast<long long>(k));
        auto seg = feas.emit();
        detail::recenter_segment(seg, keys, it->first, it->second, 0, eps);
        model.segments.push_back(seg);
    }
    return {dp[n], std::move(model)};
}

/// Dispatch by kind. The dp oracle is excluded: it has a different result
/// shape and a size cap.
inline PlaModel fit(FitterKind kind, std::span<const Key> keys, std::uint64_t eps,
                    std::size_t rank_offset = 0) {
    switch (kind) {
        case FitterKind::frs: return fit_frs(keys, eps, rank_offset);
        case FitterKind::optimal: return fit_optimal(keys, eps, rank_offset);
        case FitterKind::greedy: return fit_greedy(keys, eps, rank_offset);
        case FitterKind::swing: return fit_swing(keys, eps, rank_offset);
        case FitterKind::dp_oracle: break;
    }
    throw std::invalid_argument("fit() expects a streaming fitter");
}

/// Verification convention each fitter's output is guaranteed to satisfy.
inline Rounding verify_rounding(FitterKind kind) {
    return kind == FitterKind::frs ? Rounding::floor : Rounding::none;
}

}  // namespace plax
