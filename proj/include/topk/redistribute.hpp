#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "topk/sim/comm.hpp"

namespace topk {

enum class BalanceRole { Sender, Receiver };

struct MovePlan {
    BalanceRole role = BalanceRole::Receiver;  // sender iff localCount > targetCeil
    std::int64_t targetCeil = 0;               // ceil(n / p)
    std::int64_t surplus = 0;                  // elements above targetCeil (senders)
    std::int64_t deficit = 0;                  // free slots below targetCeil (receivers)
    std::int64_t sent = 0;                     // payload elements actually sent
    std::int64_t received = 0;                 // payload elements actually received
    std::int64_t unfilledSlack = 0;            // global deficit slots left empty
    bool trailingDeficit = false;              // this PE kept unfilled deficit slots
};

/// Balances per-PE element counts to at most ceil(n/p): senders only send
/// (exactly their surplus), receivers only receive (at most their deficit).
/// Coordination travels on the Control channel, payload on Data. Senders part
/// with their largest surplus elements, matched to receivers in PE order.
template <class T>
std::pair<std::vector<T>, MovePlan> balance(sim::Comm& c, std::vector<T> local) {
    const int p = c.numPes();
    const auto myCount = static_cast<std::int64_t>(local.size());
    auto countBlocks = c.allGather(std::vector<std::int64_t>{myCount}, sim::Channel::Control);
    std::vector<std::int64_t> counts(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) counts[static_cast<std::size_t>(i)] = countBlocks[static_cast<std::size_t>(i)][0];
    std::int64_t n = 0;
    for (std::int64_t ni : counts) n += ni;
    const std::int64_t nBar = (n + p - 1) / p;

    // every PE derives the identical matching from the shared count vector:
    // surplus slot t (1-based, in sender PE order) fills the t-th deficit
    // slot (in receiver PE order)
    std::vector<std::int64_t> surplusBefore(static_cast<std::size_t>(p), 0);
    std::vector<std::int64_t> deficitBefore(static_cast<std::size_t>(p), 0);
    std::int64_t totalSurplus = 0, totalDeficit = 0;
    for (int i = 0; i < p; ++i) {
        surplusBefore[static_cast<std::size_t>(i)] = totalSurplus;
        deficitBefore[static_cast<std::size_t>(i)] = totalDeficit;
        totalSurplus += std::max<std::int64_t>(0, counts[static_cast<std::size_t>(i)] - nBar);
        totalDeficit += std::max<std::int64_t>(0, nBar - counts[static_cast<std::size_t>(i)]);
    }

    MovePlan plan;
    plan.targetCeil = nBar;
    plan.surplus = std::max<std::int64_t>(0, myCount - nBar);
    plan.deficit = std::max<std::int64_t>(0, nBar - myCount);
    plan.role = plan.surplus > 0 ? BalanceRole::Sender : BalanceRole::Receiver;
    plan.unfilledSlack = totalDeficit - totalSurplus;

    std::vector<std::vector<T>> outbound(static_cast<std::size_t>(p));
    if (plan.surplus > 0) {
        // part with the largest elements, smallest-first towards receivers
        std::sort(local.begin(), local.end());
        std::vector<T> moved(local.end() - plan.surplus, local.end());
        local.resize(local.size() - static_cast<std::size_t>(plan.surplus));
        // my surplus occupies global slots (surplusBefore[me], .. + surplus]
        std::int64_t slot = surplusBefore[static_cast<std::size_t>(c.rank())];
        std::size_t next = 0;
        for (int i = 0; i < p && next < moved.size(); ++i) {
            const std::int64_t dLo = deficitBefore[static_cast<std::size_t>(i)];
            const std::int64_t dHi = dLo + std::max<std::int64_t>(0, nBar - counts[static_cast<std::size_t>(i)]);
            while (next < moved.size() && slot >= dLo && slot < dHi) {
                outbound[static_cast<std::size_t>(i)].push_back(moved[next++]);
                ++slot;
            }
        }
        plan.sent = static_cast<std::int64_t>(next);
    }
    auto inbound = c.allToAll(std::move(outbound), sim::Channel::Data);
    for (auto& b : inbound) {
        plan.received += static_cast<std::int64_t>(b.size());
        local.insert(local.end(), b.begin(), b.end());
    }
    plan.trailingDeficit = plan.deficit > plan.received;
    return {std::move(local), plan};
}

/// One scalar per PE, tagged with one of two groups, each group ascending in
/// PE order. Returns the 0-based rank of this PE's scalar in the merged order
/// of both groups; equal keys order group-d before group-s. Runs a bitonic
/// merge network of log-many compare-exchange rounds, O(1) words each.
inline std::int64_t oddEvenMergeRanks(sim::Comm& c, std::int64_t key, bool groupS,
                                      sim::Channel ch = sim::Channel::Control) {
    const int p = c.numPes();
    const int rank = c.rank();
    // group sizes and my index within my group
    const std::int64_t inS = groupS ? 1 : 0;
    const std::int64_t sBefore = c.prefixSumScalar<std::int64_t>(inS, ch) - inS;
    const std::int64_t dBefore = c.prefixSumScalar<std::int64_t>(1 - inS, ch) - (1 - inS);
    const std::int64_t gidx = groupS ? sBefore : dBefore;

    struct Item {
        std::int64_t key;
        std::int64_t tie;     // group bit then group index: d before s, stable
        std::int64_t origin;  // PE that contributed the value; -1 = sentinel
    };
    const Item sentinel{std::numeric_limits<std::int64_t>::max(), std::numeric_limits<std::int64_t>::max(), -1};
    auto less = [](const Item& a, const Item& b) {
        if (a.key != b.key) return a.key < b.key;
        return a.tie < b.tie;
    };

    int p2 = 1;
    while (p2 < p) p2 <<= 1;
    const std::int64_t q = 2 * p2;
    // bitonic layout: group d ascending from slot 0, sentinels in the middle,
    // group s ascending from the top downwards
    const std::int64_t mySlot = groupS ? q - 1 - gidx : gidx;
    auto owner = [&](std::int64_t slot) { return static_cast<int>(slot % p); };

    std::vector<std::pair<std::int64_t, Item>> held;  // (slot, value) for my owned slots
    for (std::int64_t slot = rank; slot < q; slot += p) held.push_back({slot, sentinel});
    {
        // deliver the real values to their starting slots' owners
        std::vector<std::vector<Item>> dest(static_cast<std::size_t>(p));
        dest[static_cast<std::size_t>(owner(mySlot))].push_back({key, (inS << 32) + gidx, rank});
        auto in = c.allToAll(std::move(dest), ch);
        for (const auto& b : in)
            for (const auto& it : b) {
                const std::int64_t slot = (it.tie >> 32) != 0 ? q - 1 - (it.tie & 0xffffffff) : (it.tie & 0xffffffff);
                for (auto& hv : held)
                    if (hv.first == slot) hv.second = it;
            }
    }

    for (std::int64_t k = q / 2; k >= 1; k /= 2) {
        // pairs (i, i + k) for slots with bit k clear; every PE processes its
        // pairs in ascending order of the pair's lower slot, which keeps the
        // pairwise waits acyclic
        std::sort(held.begin(), held.end(),
                  [k](const auto& a, const auto& b) { return (a.first & ~k) < (b.first & ~k); });
        for (auto& hv : held) {
            const std::int64_t slot = hv.first;
            const std::int64_t partnerSlot = slot ^ k;
            const bool low = (slot & k) == 0;
            const int partner = owner(partnerSlot);
            if (partner == rank) {
                if (!low) continue;  // handled once, from the low slot
                for (auto& other : held)
                    if (other.first == partnerSlot) {
                        if (less(other.second, hv.second)) std::swap(hv.second, other.second);
                    }
                continue;
            }
            std::vector<Item> got = c.sendRecv(partner, std::vector<Item>{hv.second}, ch);
            const Item& theirs = got[0];
            if (low)
                hv.second = less(theirs, hv.second) ? theirs : hv.second;
            else
                hv.second = less(theirs, hv.second) ? hv.second : theirs;
        }
    }

    // route every settled value's final slot (= merged rank) back to its origin
    std::vector<std::vector<std::int64_t>> ranksOut(static_cast<std::size_t>(p));
    for (const auto& hv : held)
        if (hv.second.origin >= 0) ranksOut[static_cast<std::size_t>(hv.second.origin)].push_back(hv.first);
    auto ranksIn = c.allToAll(std::move(ranksOut), ch);
    for (const auto& b : ranksIn)
        if (!b.empty()) return b[0];
    throw std::logic_error("oddEvenMergeRanks: merged rank did not return to its origin");
}

/// Inclusive segmented prefix over the PE-indexed sequence: position i folds
/// op over the values since the latest segment start at or before i.
template <class T, class Op>
T segmentedPrefix(sim::Comm& c, T value, bool segmentStart, Op op, sim::Channel ch = sim::Channel::Data) {
    struct Part {
        T value;
        std::uint8_t start;
    };
    auto combined = c.prefixSum(std::vector<Part>{{value, segmentStart ? std::uint8_t{1} : std::uint8_t{0}}},
                                [&op](const Part& a, const Part& b) -> Part {
                                    if (b.start) return b;
                                    return {op(a.value, b.value), a.start};
                                },
                                ch);
    return combined[0].value;
}

}  // namespace topk
