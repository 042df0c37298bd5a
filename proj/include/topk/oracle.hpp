#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "topk/element.hpp"

namespace topk::oracle {

/// Brute force by full sort; the reference for every selection test.
inline std::vector<Element> exactSelect(std::vector<Element> all, std::uint64_t k) {
    if (k > all.size()) throw std::invalid_argument("exactSelect: k exceeds n");
    std::sort(all.begin(), all.end());
    all.resize(k);
    return all;
}

/// Exhaustive frequency count over the concatenated streams; descending by
/// count, ties by ascending key.
inline std::vector<CountedKey> exactTopKFreq(const std::vector<std::vector<std::int64_t>>& streams, std::int64_t k) {
    std::map<std::int64_t, std::int64_t> counts;
    for (const auto& s : streams)
        for (std::int64_t key : s) ++counts[key];
    std::vector<CountedKey> all;
    all.reserve(counts.size());
    for (const auto& kv : counts) all.push_back({kv.first, kv.second});
    std::sort(all.begin(), all.end(), [](const CountedKey& a, const CountedKey& b) {
        if (a.count != b.count) return a.count > b.count;
        return a.key < b.key;
    });
    if (static_cast<std::size_t>(k) < all.size()) all.resize(static_cast<std::size_t>(k));
    return all;
}

/// The frequency error functional: count of the most frequent key that was
/// not output minus count of the least frequent key that was output;
/// 0 when the output is a legal top-k set.
inline std::int64_t freqErrorCount(const std::vector<std::vector<std::int64_t>>& streams,
                                   const std::vector<std::int64_t>& outputKeys) {
    std::map<std::int64_t, std::int64_t> counts;
    for (const auto& s : streams)
        for (std::int64_t key : s) ++counts[key];
    std::set<std::int64_t> out(outputKeys.begin(), outputKeys.end());
    std::int64_t maxMissed = 0;
    std::int64_t minOutput = -1;
    for (const auto& kv : counts) {
        if (out.count(kv.first)) {
            if (minOutput < 0 || kv.second < minOutput) minOutput = kv.second;
        } else {
            maxMissed = std::max(maxMissed, kv.second);
        }
    }
    for (std::int64_t key : out)
        if (!counts.count(key)) minOutput = 0;  // a reported key absent from the input
    if (minOutput < 0) minOutput = 0;           // empty output
    return std::max<std::int64_t>(0, maxMissed - minOutput);
}

/// Exhaustive sum aggregation; descending by sum, ties by ascending key.
inline std::vector<CountedKey> exactTopKSums(const std::vector<std::vector<CountedKey>>& streams, std::int64_t k) {
    std::map<std::int64_t, std::int64_t> sums;
    for (const auto& s : streams)
        for (const auto& kv : s) sums[kv.key] += kv.count;
    std::vector<CountedKey> all;
    all.reserve(sums.size());
    for (const auto& kv : sums) all.push_back({kv.first, kv.second});
    std::sort(all.begin(), all.end(), [](const CountedKey& a, const CountedKey& b) {
        if (a.count != b.count) return a.count > b.count;
        return a.key < b.key;
    });
    if (static_cast<std::size_t>(k) < all.size()) all.resize(static_cast<std::size_t>(k));
    return all;
}

/// Analogous error functional for weighted sums.
inline std::int64_t sumErrorCount(const std::vector<std::vector<CountedKey>>& streams,
                                  const std::vector<std::int64_t>& outputKeys) {
    std::map<std::int64_t, std::int64_t> sums;
    for (const auto& s : streams)
        for (const auto& kv : s) sums[kv.key] += kv.count;
    std::set<std::int64_t> out(outputKeys.begin(), outputKeys.end());
    std::int64_t maxMissed = 0;
    std::int64_t minOutput = -1;
    for (const auto& kv : sums) {
        if (out.count(kv.first)) {
            if (minOutput < 0 || kv.second < minOutput) minOutput = kv.second;
        } else {
            maxMissed = std::max(maxMissed, kv.second);
        }
    }
    for (std::int64_t key : out)
        if (!sums.count(key)) minOutput = 0;
    if (minOutput < 0) minOutput = 0;
    return std::max<std::int64_t>(0, maxMissed - minOutput);
}

}  // namespace topk::oracle
