#pragma once

#include <cstdint>
#include <vector>

#include "topk/element.hpp"
#include "topk/sampling.hpp"
#include "topk/sim/comm.hpp"

namespace topk {

enum class FreqMode { Pac, Ec, Pec, Naive, NaiveTree };

struct FreqResult {
    std::vector<CountedKey> topK;    // estimated counts, descending; ties by ascending key
    FreqMode mode = FreqMode::Pac;
    std::vector<bool> exactFlags;    // per entry: count is exact
    bool truncated = false;          // fewer distinct keys than k existed
    bool probablyExact = false;      // PEC gap criterion succeeded within the cap
    std::int64_t kStarUsed = 0;      // EC/PEC candidate count
    double rho = 1.0;                // sampling probability used
};

/// Ascending sort value realizing (count descending, key ascending).
/// Exact for count < 2^21 and 0 <= key < 2^32.
double freqRankValue(std::int64_t count, std::int64_t key);

/// Sampling-only estimate: sample, aggregate, route to hash owners, select
/// the k most-sampled keys, scale counts by 1/rho.
FreqResult pacTopK(sim::Comm& c, const std::vector<std::int64_t>& localInput, std::int64_t k,
                   const ErrorBudget& budget);

/// The PAC selection stage on already-aggregated per-PE sample counts; the
/// entry point the worked single-letter example exercises directly.
FreqResult pacSelectAggregated(sim::Comm& c, const std::vector<CountedKey>& localSamplePairs, std::int64_t k,
                               double rho);

/// Sample to find kStar candidate keys, then count those exactly in a second
/// pass over the local input.
FreqResult ecTopK(sim::Comm& c, const std::vector<std::int64_t>& localInput, std::int64_t k,
                  const ErrorBudget& budget);

/// Two-stage probably-exactly-correct variant: a coarse sample estimates the
/// k-th count, the gap threshold picks kStar adaptively, then EC-style exact
/// counting. capK = 0 means 8k; rho0 = 0 derives the stage-1 rate from eps0.
FreqResult pecTopK(sim::Comm& c, const std::vector<std::int64_t>& localInput, std::int64_t k, double delta,
                   double eps0, std::int64_t capK = 0, double rho0 = 0);

/// Centralized baselines on the identical sample: direct sends to a
/// coordinator (tree = false) or a combining binomial-tree reduction
/// (tree = true).
FreqResult naiveTopK(sim::Comm& c, const std::vector<std::int64_t>& localInput, std::int64_t k,
                     const ErrorBudget& budget, bool tree);

}  // namespace topk
