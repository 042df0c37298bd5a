#include "topk/freq.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "topk/selection.hpp"
#include "topk/detail/count_select.hpp"
#include "topk/sim/combine.hpp"

namespace topk {

namespace {

std::vector<CountedKey> aggregate(const std::vector<std::int64_t>& keys) {
    std::unordered_map<std::int64_t, std::int64_t> acc;
    acc.reserve(keys.size());
    for (std::int64_t k : keys) ++acc[k];
    std::vector<CountedKey> out;
    out.reserve(acc.size());
    for (const auto& kv : acc) out.push_back({kv.first, kv.second});
    std::sort(out.begin(), out.end(), [](const CountedKey& a, const CountedKey& b) { return a.key < b.key; });
    return out;
}

std::vector<std::int64_t> drawSample(sim::Comm& c, const std::vector<std::int64_t>& input, double rho) {
    std::vector<std::int64_t> sample;
    if (rho >= 1.0) {
        sample = input;
    } else if (!input.empty()) {
        for (std::uint64_t idx : bernoulliSkipSample(input.size(), rho, c.rng()))
            sample.push_back(input[idx]);
    }
    return sample;
}

FreqResult exactCountCandidates(sim::Comm& c, const std::vector<std::int64_t>& localInput,
                                std::vector<std::int64_t> candidates, std::int64_t k, FreqMode mode, double rho) {
    std::sort(candidates.begin(), candidates.end());
    std::unordered_map<std::int64_t, std::size_t> pos;
    pos.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) pos.emplace(candidates[i], i);
    std::vector<std::int64_t> counts(candidates.size(), 0);
    for (std::int64_t key : localInput) {
        auto it = pos.find(key);
        if (it != pos.end()) ++counts[it->second];
    }
    auto total = c.reduce(std::move(counts), [](std::int64_t a, std::int64_t b) { return a + b; }, 0);
    std::vector<CountedKey> top;
    if (c.rank() == 0) {
        std::vector<CountedKey> scored;
        scored.reserve(candidates.size());
        for (std::size_t i = 0; i < candidates.size(); ++i) scored.push_back({candidates[i], total[i]});
        std::sort(scored.begin(), scored.end(), detail::countDescKeyAsc);
        if (scored.size() > static_cast<std::size_t>(k)) scored.resize(static_cast<std::size_t>(k));
        top = std::move(scored);
    }
    FreqResult res;
    res.mode = mode;
    res.rho = rho;
    res.topK = c.broadcast(std::move(top), 0);
    res.exactFlags.assign(res.topK.size(), true);
    res.kStarUsed = static_cast<std::int64_t>(candidates.size());
    return res;
}

}  // namespace

double freqRankValue(std::int64_t count, std::int64_t key) {
    if (count < 0 || count >= (std::int64_t{1} << 21))
        throw std::invalid_argument("freqRankValue: count out of exact range");
    if (key < 0 || key >= (std::int64_t{1} << 32))
        throw std::invalid_argument("freqRankValue: key out of exact range");
    return -static_cast<double>(count) * 4294967296.0 + static_cast<double>(key);
}

FreqResult pacSelectAggregated(sim::Comm& c, const std::vector<CountedKey>& localSamplePairs, std::int64_t k,
                               double rho) {
    if (k < 1) throw std::invalid_argument("pacSelectAggregated: k must be >= 1");
    if (!(rho > 0.0) || rho > 1.0) throw std::invalid_argument("pacSelectAggregated: rho must be in (0,1]");
    detail::KeyOwner owner{c.sharedRng()(), c.numPes()};
    auto routed = sim::hypercubeCombineRoute(c, localSamplePairs, owner);
    const std::int64_t distinct = c.allReduceSum<std::int64_t>(static_cast<std::int64_t>(routed.size()));
    FreqResult res;
    res.mode = FreqMode::Pac;
    res.rho = rho;
    res.truncated = distinct < k;
    const std::int64_t j = std::min(k, distinct);
    res.topK = detail::selectTopCounts(c, routed, j);
    for (auto& kv : res.topK) kv.count = static_cast<std::int64_t>(std::llround(static_cast<double>(kv.count) / rho));
    res.exactFlags.assign(res.topK.size(), rho >= 1.0);
    return res;
}

FreqResult pacTopK(sim::Comm& c, const std::vector<std::int64_t>& localInput, std::int64_t k,
                   const ErrorBudget& budget) {
    const std::uint64_t n = c.allReduceSum<std::uint64_t>(localInput.size());
    SamplePlan plan = pacSampleSize(n, k, budget);
    auto pairs = aggregate(drawSample(c, localInput, plan.rho));
    FreqResult res = pacSelectAggregated(c, pairs, k, plan.rho);
    if (plan.fullScan) res.exactFlags.assign(res.topK.size(), true);
    return res;
}

FreqResult ecTopK(sim::Comm& c, const std::vector<std::int64_t>& localInput, std::int64_t k,
                  const ErrorBudget& budget) {
    const std::uint64_t n = c.allReduceSum<std::uint64_t>(localInput.size());
    SamplePlan plan = ecPlan(n, k, c.numPes(), budget);
    detail::KeyOwner owner{c.sharedRng()(), c.numPes()};
    auto routed = sim::hypercubeCombineRoute(c, aggregate(drawSample(c, localInput, plan.rho)), owner);
    const std::int64_t distinct = c.allReduceSum<std::int64_t>(static_cast<std::int64_t>(routed.size()));
    const std::int64_t kStar = std::min(plan.kStar, distinct);
    auto pivots = detail::selectTopCounts(c, routed, kStar);
    std::vector<std::int64_t> candidates;
    candidates.reserve(pivots.size());
    for (const auto& kv : pivots) candidates.push_back(kv.key);
    FreqResult res = exactCountCandidates(c, localInput, std::move(candidates), k, FreqMode::Ec, plan.rho);
    res.truncated = distinct < k;
    return res;
}

FreqResult pecTopK(sim::Comm& c, const std::vector<std::int64_t>& localInput, std::int64_t k, double delta,
                   double eps0, std::int64_t capK, double rho0) {
    if (k < 1) throw std::invalid_argument("pecTopK: k must be >= 1");
    if (capK == 0) capK = 8 * k;
    const std::uint64_t n = c.allReduceSum<std::uint64_t>(localInput.size());
    double rho = rho0;
    if (rho <= 0) rho = pacSampleSize(n, k, {eps0, delta}).rho;
    detail::KeyOwner owner{c.sharedRng()(), c.numPes()};
    auto routed = sim::hypercubeCombineRoute(c, aggregate(drawSample(c, localInput, rho)), owner);
    const std::int64_t distinct = c.allReduceSum<std::int64_t>(static_cast<std::int64_t>(routed.size()));
    const std::int64_t j = std::min(k, distinct);
    auto topSample = detail::selectTopCounts(c, routed, j);
    const double sHatK = topSample.empty() ? 0.0 : static_cast<double>(topSample.back().count);
    const double threshold = pecKStarThreshold(sHatK, k, delta);
    // kStar = sampled keys whose count clears the gap threshold
    std::int64_t aboveLocal = 0;
    for (const auto& kv : routed) aboveLocal += static_cast<double>(kv.count) >= threshold ? 1 : 0;
    std::int64_t kStar = threshold > 0 ? c.allReduceSum(aboveLocal) : distinct;
    const bool gapUsable = kStar <= capK;
    if (!gapUsable) kStar = capK;  // fall back to EC semantics with the cap
    kStar = std::max(kStar, j);
    auto pivots = detail::selectTopCounts(c, routed, std::min(kStar, distinct));
    std::vector<std::int64_t> candidates;
    candidates.reserve(pivots.size());
    for (const auto& kv : pivots) candidates.push_back(kv.key);
    FreqResult res = exactCountCandidates(c, localInput, std::move(candidates), k, FreqMode::Pec, rho);
    res.truncated = distinct < k;
    res.probablyExact = gapUsable;
    res.rho = rho;
    return res;
}

FreqResult naiveTopK(sim::Comm& c, const std::vector<std::int64_t>& localInput, std::int64_t k,
                     const ErrorBudget& budget, bool tree) {
    const std::uint64_t n = c.allReduceSum<std::uint64_t>(localInput.size());
    SamplePlan plan = pacSampleSize(n, k, budget);
    auto pairs = aggregate(drawSample(c, localInput, plan.rho));
    std::vector<CountedKey> atRoot;
    if (!tree) {
        auto blocks = c.gatherDirect(std::move(pairs), 0);
        if (c.rank() == 0) {
            std::unordered_map<std::int64_t, std::int64_t> acc;
            for (const auto& b : blocks)
                for (const auto& kv : b) acc[kv.key] += kv.count;
            for (const auto& kv : acc) atRoot.push_back({kv.first, kv.second});
        }
    } else {
        // combining binomial-tree reduction towards PE 0
        const int p = c.numPes();
        const int d = sim::ceilLog2(p);
        std::unordered_map<std::int64_t, std::int64_t> acc;
        for (const auto& kv : pairs) acc[kv.key] += kv.count;
        auto sorted = [&] {
            std::vector<CountedKey> v;
            v.reserve(acc.size());
            for (const auto& kv : acc) v.push_back({kv.first, kv.second});
            std::sort(v.begin(), v.end(), [](const CountedKey& a, const CountedKey& b) { return a.key < b.key; });
            return v;
        };
        for (int t = 0; t < d; ++t) {
            const int r = c.rank();
            if ((r & ((1 << (t + 1)) - 1)) == (1 << t)) {
                c.sendRecv(r - (1 << t), sorted());
                acc.clear();
                break;
            }
            if ((r & ((1 << (t + 1)) - 1)) == 0 && r + (1 << t) < p) {
                auto in = c.sendRecv(r + (1 << t), std::vector<CountedKey>{});
                for (const auto& kv : in) acc[kv.key] += kv.count;
            }
        }
        if (c.rank() == 0) atRoot = sorted();
    }
    std::vector<CountedKey> top;
    std::int64_t distinct = 0;
    if (c.rank() == 0) {
        distinct = static_cast<std::int64_t>(atRoot.size());
        std::sort(atRoot.begin(), atRoot.end(), detail::countDescKeyAsc);
        if (atRoot.size() > static_cast<std::size_t>(k)) atRoot.resize(static_cast<std::size_t>(k));
        top = std::move(atRoot);
    }
    FreqResult res;
    res.mode = tree ? FreqMode::NaiveTree : FreqMode::Naive;
    res.rho = plan.rho;
    res.truncated = c.broadcastScalar(distinct, 0) < k;
    res.topK = c.broadcast(std::move(top), 0);
    for (auto& kv : res.topK)
        kv.count = static_cast<std::int64_t>(std::llround(static_cast<double>(kv.count) / plan.rho));
    res.exactFlags.assign(res.topK.size(), plan.fullScan);
    return res;
}

}  // namespace topk
