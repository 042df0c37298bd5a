#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "topk/element.hpp"
#include "topk/selection.hpp"
#include "topk/sim/comm.hpp"

namespace topk {
double freqRankValue(std::int64_t count, std::int64_t key);
}

namespace topk::detail {

inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Per-run seeded hash owner; assumed to behave like a random function.
struct KeyOwner {
    std::uint64_t seed;
    int p;
    int operator()(std::int64_t key) const {
        return static_cast<int>(mix64(static_cast<std::uint64_t>(key) ^ seed) % static_cast<std::uint64_t>(p));
    }
};

inline bool countDescKeyAsc(const CountedKey& a, const CountedKey& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.key < b.key;
}

/// Distributed top-j of owner-routed (key, count) pairs; the result lands on
/// every PE (gather at the root, then broadcast).
inline std::vector<CountedKey> selectTopCounts(sim::Comm& c, const std::vector<CountedKey>& routed, std::int64_t j) {
    std::vector<Element> elems;
    elems.reserve(routed.size());
    for (std::size_t i = 0; i < routed.size(); ++i)
        elems.push_back(Element{freqRankValue(routed[i].count, routed[i].key),
                                static_cast<std::uint32_t>(c.rank()), static_cast<std::uint64_t>(i)});
    auto mine = selectUnsorted(c, elems, static_cast<std::uint64_t>(j));
    std::vector<CountedKey> share;
    share.reserve(mine.size());
    for (const auto& e : mine) share.push_back(routed[e.idx]);
    auto blocks = c.gather(std::move(share), 0);
    std::vector<CountedKey> top;
    if (c.rank() == 0) {
        for (auto& b : blocks) top.insert(top.end(), b.begin(), b.end());
        std::sort(top.begin(), top.end(), countDescKeyAsc);
    }
    return c.broadcast(std::move(top), 0);
}

}  // namespace topk::detail
