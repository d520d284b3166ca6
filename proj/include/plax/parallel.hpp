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

#include <exception>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "plax/fitters.hpp"

namespace plax {

/// Partition of [0, n) into t consecutive disjoint chunks whose sizes
/// differ by at most one.
struct ParallelPlan {
    std::size_t threads;
    std::vector<std::size_t> cuts;  ///< t + 1 rank cut points, cuts[0] = 0, cuts[t] = n

    static ParallelPlan even(std::size_t n, std::size_t t) {
        if (t < 1)
            throw std::invalid_argument("thread count must be >= 1");
        if (t > n)
            throw std::invalid_argument("more threads than keys");
        ParallelPlan plan{t, {}};
        plan.cuts.reserve(t + 1);
        for (std::size_t c = 0; c <= t; ++c)
            plan.cuts.push_back(c * n / t);
        return plan;
    }
};

/// Chunked data-parallel construction: the fitter runs independently on
/// each chunk with global ranks, so concatenating the per-chunk segments in
/// chunk order yields a valid model for the whole dataset. Workers touch
/// disjoint read-only ranges and the merge preserves chunk order, so the
/// output is independent of scheduling. With the optimal fitter the result
/// has at most t - 1 segments more than the serial fit.
inline PlaModel fit_parallel(FitterKind fitter, std::span<const Key> keys,
                             std::uint64_t eps, std::size_t t) {
    if (fitter == FitterKind::dp_oracle)
        throw std::invalid_argument("the dp oracle is not a parallel fitter");
    detail::require_nonempty(keys);
    auto plan = ParallelPlan::even(keys.size(), t);

    std::vector<PlaModel> parts(t);
    std::vector<std::exception_ptr> errors(t);
    {
        std::vector<std::jthread> workers;
        workers.reserve(t);
        for (std::size_t c = 0; c < t; ++c) {
            workers.emplace_back([&, c] {
                try {
                    auto lo = plan.cuts[c];
                    auto len = plan.cuts[c + 1] - lo;
                    parts[c] = fit(fitter, keys.subspan(lo, len), eps, lo);
                } catch (...) {
                    errors[c] = std::current_exception();
                }
            });
        }
    }
    for (auto &err : errors)
        if (err)
            std::rethrow_exception(err);

    PlaModel model{{}, eps, keys.size()};
    for (auto &part : parts)
        model.segments.insert(model.segments.end(), part.segments.begin(),
                              part.segments.end());
    return model;
}

}  // namespace plax
