#include "topk/sumagg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "topk/detail/count_select.hpp"
#include "topk/sim/combine.hpp"

namespace topk {

namespace {

struct SamplingSetup {
    std::vector<CountedKey> table;       // local exact sums
    std::vector<CountedKey> routed;      // owner-routed sample counts
    std::int64_t distinct = 0;           // global distinct sampled keys
    std::int64_t totalWeight = 0;
    double vAvg = 0;
    std::int64_t s = 0;
    bool skewWarning = false;
    bool empty = false;
};

/// Shared sampling front end: aggregate, derive vAvg from the sample target,
/// draw weighted samples, route them to hash owners.
SamplingSetup sampleAndRoute(sim::Comm& c, const std::vector<CountedKey>& localInput, std::int64_t s) {
    SamplingSetup st;
    st.table = localAggregate(localInput);
    std::int64_t localWeight = 0;
    for (const auto& kv : st.table) localWeight += kv.count;
    st.totalWeight = c.allReduceSum(localWeight);
    // the communication bound assumes no PE holds more than O(totalWeight/p)
    const bool skewed = localWeight * c.numPes() > 4 * st.totalWeight;
    st.skewWarning = c.allReduceMax<int>(skewed ? 1 : 0) != 0;
    if (st.totalWeight == 0) {
        st.empty = true;
        return st;
    }
    st.s = s;
    st.vAvg = static_cast<double>(st.totalWeight) / static_cast<double>(s);
    auto samples = weightedSample(st.table, st.vAvg, c.rng());
    detail::KeyOwner owner{c.sharedRng()(), c.numPes()};
    st.routed = sim::hypercubeCombineRoute(c, samples, owner);
    st.distinct = c.allReduceSum<std::int64_t>(static_cast<std::int64_t>(st.routed.size()));
    return st;
}

}  // namespace

std::vector<CountedKey> localAggregate(const std::vector<CountedKey>& localInput) {
    std::unordered_map<std::int64_t, std::int64_t> acc;
    acc.reserve(localInput.size());
    for (const auto& kv : localInput) {
        if (kv.count < 0) throw std::invalid_argument("localAggregate: negative weight");
        acc[kv.key] += kv.count;
    }
    std::vector<CountedKey> out;
    out.reserve(acc.size());
    for (const auto& kv : acc) out.push_back({kv.first, kv.second});
    std::sort(out.begin(), out.end(), [](const CountedKey& a, const CountedKey& b) { return a.key < b.key; });
    return out;
}

std::int64_t sumPacSampleTarget(std::uint64_t n, int p, const ErrorBudget& budget) {
    validate(budget);
    const double s = std::sqrt(2.0 * static_cast<double>(p) * std::log(2.0 * static_cast<double>(n) / budget.delta)) /
                     budget.eps;
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(s)));
}

std::vector<CountedKey> weightedSample(const std::vector<CountedKey>& table, double vAvg, std::mt19937_64& rng) {
    if (!(vAvg > 0)) throw std::invalid_argument("weightedSample: vAvg must be positive");
    std::vector<CountedKey> out;
    out.reserve(table.size());
    for (const auto& kv : table) {
        const std::int64_t cnt = weightedSampleCount(static_cast<double>(kv.count), vAvg, rng);
        if (cnt > 0) out.push_back({kv.key, cnt});
    }
    return out;
}

SumResult sumPacTopK(sim::Comm& c, const std::vector<CountedKey>& localInput, std::int64_t k,
                     const ErrorBudget& budget) {
    if (k < 1) throw std::invalid_argument("sumPacTopK: k must be >= 1");
    const std::uint64_t n = c.allReduceSum<std::uint64_t>(localInput.size());
    auto st = sampleAndRoute(c, localInput, sumPacSampleTarget(std::max<std::uint64_t>(n, 1), c.numPes(), budget));
    SumResult res;
    res.skewWarning = st.skewWarning;
    if (st.empty) return res;
    res.vAvg = st.vAvg;
    res.sampleTarget = st.s;
    res.truncated = st.distinct < k;
    const std::int64_t j = std::min(k, st.distinct);
    res.topK = detail::selectTopCounts(c, st.routed, j);
    res.estimates.reserve(res.topK.size());
    for (auto& kv : res.topK) {
        const double est = static_cast<double>(kv.count) * st.vAvg;
        res.estimates.push_back(est);
        kv.count = static_cast<std::int64_t>(std::llround(est));
    }
    res.exactFlags.assign(res.topK.size(), false);
    return res;
}

SumResult sumEcTopK(sim::Comm& c, const std::vector<CountedKey>& localInput, std::int64_t k,
                    const ErrorBudget& budget) {
    if (k < 1) throw std::invalid_argument("sumEcTopK: k must be >= 1");
    // distinct-key count stands in for n in the exact-counting plan
    auto probe = localAggregate(localInput);
    const std::uint64_t nd =
        std::max<std::uint64_t>(1, c.allReduceSum<std::uint64_t>(probe.size()));
    SamplePlan plan = ecPlan(nd, k, c.numPes(), budget);
    const std::int64_t s =
        std::max<std::int64_t>(k, static_cast<std::int64_t>(std::ceil(plan.expectedSampleSize)));
    auto st = sampleAndRoute(c, localInput, s);
    SumResult res;
    res.skewWarning = st.skewWarning;
    if (st.empty) return res;
    res.vAvg = st.vAvg;
    res.sampleTarget = st.s;
    res.truncated = st.distinct < k;
    const std::int64_t kStar = std::min(std::max(plan.kStar, k), st.distinct);
    // distributed selection of the kStar most-sampled keys, then an allgather
    // of the candidate keys only: every PE pays O(kStar) balanced words
    std::vector<Element> elems;
    elems.reserve(st.routed.size());
    for (std::size_t i = 0; i < st.routed.size(); ++i)
        elems.push_back(Element{freqRankValue(st.routed[i].count, st.routed[i].key),
                                static_cast<std::uint32_t>(c.rank()), static_cast<std::uint64_t>(i)});
    auto mine = selectUnsorted(c, elems, static_cast<std::uint64_t>(kStar));
    std::vector<std::int64_t> myKeys;
    myKeys.reserve(mine.size());
    for (const auto& e : mine) myKeys.push_back(st.routed[e.idx].key);
    auto keyBlocks = c.allGather(std::move(myKeys));
    std::vector<std::int64_t> candidates;
    for (auto& b : keyBlocks) candidates.insert(candidates.end(), b.begin(), b.end());
    std::sort(candidates.begin(), candidates.end());
    res.kStarUsed = static_cast<std::int64_t>(candidates.size());
    // exact local sums for the candidates, combined at fresh hash owners
    std::vector<CountedKey> exactLocal;
    for (std::int64_t key : candidates) {
        auto it = std::lower_bound(st.table.begin(), st.table.end(), CountedKey{key, 0},
                                   [](const CountedKey& a, const CountedKey& b) { return a.key < b.key; });
        if (it != st.table.end() && it->key == key) exactLocal.push_back({key, it->count});
    }
    detail::KeyOwner exactOwner{c.sharedRng()(), c.numPes()};
    auto exactRouted = sim::hypercubeCombineRoute(c, exactLocal, exactOwner);
    res.topK = detail::selectTopCounts(c, exactRouted, std::min<std::int64_t>(k, res.kStarUsed));
    res.estimates.reserve(res.topK.size());
    for (const auto& kv : res.topK) res.estimates.push_back(static_cast<double>(kv.count));
    res.exactFlags.assign(res.topK.size(), true);
    return res;
}

}  // namespace topk
