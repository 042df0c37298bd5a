#pragma once

#include <algorithm>
#include <unordered_map>
#include <vector>

#include "topk/element.hpp"
#include "topk/sim/comm.hpp"

namespace topk::sim {

/// Routes (key, count) pairs to their owner PE along hypercube dimensions,
/// merging counts for equal keys at every intermediate hop, so each PE
/// receives at most one combined count per key it owns. Non-powers-of-two
/// are handled by folding the extra PEs onto partners in one pre/post round.
template <class OwnerFn>
std::vector<CountedKey> hypercubeCombineRoute(Comm& c, const std::vector<CountedKey>& localPairs, OwnerFn owner,
                                              Channel ch = Channel::Data) {
    const int p = c.numPes();
    const int r = c.rank();
    int dims = 0;
    while ((2 << dims) <= p) ++dims;  // q = 2^dims is the largest power of two <= p
    const int q = 1 << dims;

    std::unordered_map<std::int64_t, std::int64_t> acc;
    acc.reserve(localPairs.size());
    for (const auto& kv : localPairs) acc[kv.key] += kv.count;

    auto sortedPairs = [](std::unordered_map<std::int64_t, std::int64_t>& m) {
        std::vector<CountedKey> v;
        v.reserve(m.size());
        for (const auto& kv : m) v.push_back({kv.first, kv.second});
        std::sort(v.begin(), v.end(), [](const CountedKey& a, const CountedKey& b) { return a.key < b.key; });
        return v;
    };
    auto foldedOwner = [&](std::int64_t key) {
        int o = owner(key);
        return o >= q ? o - q : o;
    };

    // fold PEs beyond the hypercube onto their partners
    if (r >= q) {
        auto out = sortedPairs(acc);
        acc.clear();
        c.sendRecv(r - q, std::move(out), ch);
    } else if (r + q < p) {
        auto in = c.sendRecv(r + q, std::vector<CountedKey>{}, ch);
        for (const auto& kv : in) acc[kv.key] += kv.count;
    }

    if (r < q) {
        for (int t = dims - 1; t >= 0; --t) {
            const int partner = r ^ (1 << t);
            std::unordered_map<std::int64_t, std::int64_t> keep;
            std::unordered_map<std::int64_t, std::int64_t> move;
            for (const auto& kv : acc) {
                if (((foldedOwner(kv.first) >> t) & 1) != ((r >> t) & 1))
                    move[kv.first] += kv.second;
                else
                    keep[kv.first] += kv.second;
            }
            auto in = c.sendRecv(partner, sortedPairs(move), ch);
            acc = std::move(keep);
            for (const auto& kv : in) acc[kv.key] += kv.count;
        }
    }

    // return the folded PEs' shares
    if (r < q && r + q < p) {
        std::unordered_map<std::int64_t, std::int64_t> keep;
        std::unordered_map<std::int64_t, std::int64_t> back;
        for (const auto& kv : acc) {
            if (owner(kv.first) == r + q)
                back[kv.first] += kv.second;
            else
                keep[kv.first] += kv.second;
        }
        c.sendRecv(r + q, sortedPairs(back), ch);
        acc = std::move(keep);
    } else if (r >= q) {
        auto in = c.sendRecv(r - q, std::vector<CountedKey>{}, ch);
        for (const auto& kv : in) acc[kv.key] += kv.count;
    }

    return sortedPairs(acc);
}

}  // namespace topk::sim
