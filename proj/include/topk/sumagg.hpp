#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "topk/element.hpp"
#include "topk/sampling.hpp"
#include "topk/sim/comm.hpp"

namespace topk {

/// A key with a non-negative weight; the task is the k keys with the largest
/// global weight sums. CountedKey doubles as the carrier (count = weight).
struct SumResult {
    std::vector<CountedKey> topK;   // rounded sums, descending; ties by ascending key
    std::vector<double> estimates;  // unrounded estimates, parallel to topK
    std::vector<bool> exactFlags;   // per entry: sum is exact
    bool truncated = false;         // fewer sampled keys than k existed
    bool skewWarning = false;       // some PE's local weight breaks the totalWeight/p assumption
    std::int64_t kStarUsed = 0;     // exact-sum candidate count
    double vAvg = 0;                // weight per sample
    std::int64_t sampleTarget = 0;  // global sample size s
};

/// Exact local sums per key, ascending by key.
std::vector<CountedKey> localAggregate(const std::vector<CountedKey>& localInput);

/// Global sample size s = ceil((1/eps) sqrt(2 p ln(2n/delta))).
std::int64_t sumPacSampleTarget(std::uint64_t n, int p, const ErrorBudget& budget);

/// Weighted sample of an aggregated table: each key contributes
/// weightedSampleCount(v, vAvg) samples; zero-sample keys are dropped.
std::vector<CountedKey> weightedSample(const std::vector<CountedKey>& table, double vAvg, std::mt19937_64& rng);

/// Sampling-only estimate: aggregate locally, draw weighted samples, route to
/// hash owners, select the k most-sampled keys, estimate sums as count * vAvg.
SumResult sumPacTopK(sim::Comm& c, const std::vector<CountedKey>& localInput, std::int64_t k,
                     const ErrorBudget& budget);

/// Sample to find kStar candidate keys, then sum those exactly by local table
/// lookup and a vector reduction.
SumResult sumEcTopK(sim::Comm& c, const std::vector<CountedKey>& localInput, std::int64_t k,
                    const ErrorBudget& budget);

}  // namespace topk
