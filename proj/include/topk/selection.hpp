#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "topk/element.hpp"
#include "topk/sampling.hpp"
#include "topk/sim/comm.hpp"

namespace topk {

/// Read access to a locally sorted ascending sequence. Models the view
/// concept shared by array-backed runs and rank trees: 0-based absolute
/// indexing plus rank counting against a probe element.
class VectorRunView {
  public:
    explicit VectorRunView(const std::vector<Element>& data) : data_(&data) {}

    std::size_t size() const { return data_->size(); }
    Element at(std::size_t i) const { return (*data_)[i]; }

    /// #elements with index in [lo, hi) strictly below v.
    std::size_t countLess(std::size_t lo, std::size_t hi, const Element& v) const {
        auto first = data_->begin() + static_cast<std::ptrdiff_t>(lo);
        auto last = data_->begin() + static_cast<std::ptrdiff_t>(hi);
        return static_cast<std::size_t>(std::lower_bound(first, last, v) - first);
    }
    /// #elements with index in [lo, hi) that are <= v.
    std::size_t countLeq(std::size_t lo, std::size_t hi, const Element& v) const {
        auto first = data_->begin() + static_cast<std::ptrdiff_t>(lo);
        auto last = data_->begin() + static_cast<std::ptrdiff_t>(hi);
        return static_cast<std::size_t>(std::upper_bound(first, last, v) - first);
    }

  private:
    const std::vector<Element>* data_;
};

struct PivotPlan {
    double sampleProbability = 0;
    std::int64_t rankOffsetDelta = 0;  // Delta = p^(1/4 + delta'), default delta' = 1/6
    Element lo, hi;
    bool degenerate = false;  // empty sample; caller falls back
};

struct SelectStats {
    int levels = 0;
    bool usedFallback = false;
    // ledger words (sent+received) of this PE per recursion level
    std::vector<std::uint64_t> levelWords;
};

/// Two pivots from a sqrt(p)/n Bernoulli sample, shared identically by all
/// PEs, at sample ranks k|S|/n +- Delta clamped into [1, |S|].
inline PivotPlan pickPivots(sim::Comm& c, const std::vector<Element>& active, std::uint64_t k, std::uint64_t n,
                            double deltaExponent = 1.0 / 6.0) {
    const int p = c.numPes();
    PivotPlan plan;
    plan.sampleProbability = std::min(1.0, std::sqrt(static_cast<double>(p)) / static_cast<double>(n));
    std::vector<Element> localSample;
    for (std::uint64_t idx : bernoulliSkipSample(active.size(), plan.sampleProbability, c.rng()))
        localSample.push_back(active[idx]);
    auto blocks = c.allGather(std::move(localSample));
    std::vector<Element> sample;
    for (auto& b : blocks) sample.insert(sample.end(), b.begin(), b.end());
    if (sample.empty()) {
        plan.degenerate = true;
        return plan;
    }
    std::sort(sample.begin(), sample.end());
    const auto sz = static_cast<std::int64_t>(sample.size());
    plan.rankOffsetDelta = static_cast<std::int64_t>(std::ceil(std::pow(static_cast<double>(p), 0.25 + deltaExponent)));
    std::int64_t base = static_cast<std::int64_t>(static_cast<double>(k) * static_cast<double>(sz) / static_cast<double>(n));
    std::int64_t loRank = std::clamp<std::int64_t>(base - plan.rankOffsetDelta, 1, sz);
    std::int64_t hiRank = std::clamp<std::int64_t>(base + plan.rankOffsetDelta, 1, sz);
    plan.lo = sample[static_cast<std::size_t>(loRank - 1)];
    plan.hi = sample[static_cast<std::size_t>(hiRank - 1)];
    if (plan.hi < plan.lo) std::swap(plan.lo, plan.hi);
    return plan;
}

/// Distributed two-pivot selection of the k globally smallest elements from
/// unsorted per-PE input. Elements never change their owning PE; the return
/// value is this PE's share of the answer.
inline std::vector<Element> selectUnsorted(sim::Comm& c, std::vector<Element> local, std::uint64_t k,
                                           SelectStats* stats = nullptr, double deltaExponent = 1.0 / 6.0) {
    const int p = c.numPes();
    std::vector<Element> result;
    std::uint64_t n = c.allReduceSum<std::uint64_t>(local.size());
    if (k > n) throw std::invalid_argument("selectUnsorted: k exceeds global size");
    if (k == 0) return result;

    std::vector<Element> active = std::move(local);
    std::uint64_t kRem = k;
    const std::uint64_t tiny =
        std::max<std::uint64_t>(static_cast<std::uint64_t>(4.0 * std::sqrt(static_cast<double>(p))), 64);

    auto wordsNow = [&] { return c.ledger().sentWords(c.rank()) + c.ledger().receivedWords(c.rank()); };
    std::uint64_t levelStart = wordsNow();
    auto closeLevel = [&] {
        if (stats) {
            stats->levels++;
            stats->levelWords.push_back(wordsNow() - levelStart);
        }
        levelStart = wordsNow();
    };

    while (true) {
        if (kRem == n) {
            result.insert(result.end(), active.begin(), active.end());
            break;
        }
        bool fallback = n <= tiny;
        PivotPlan plan;
        if (!fallback) {
            plan = pickPivots(c, active, kRem, n, deltaExponent);
            fallback = plan.degenerate;
        }
        if (fallback) {
            // gather survivors, solve sequentially, broadcast the threshold
            auto blocks = c.gather(active, 0);
            Element threshold = Element::maxSentinel();
            if (c.rank() == 0) {
                std::vector<Element> all;
                for (auto& b : blocks) all.insert(all.end(), b.begin(), b.end());
                std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(kRem - 1), all.end());
                threshold = all[kRem - 1];
            }
            threshold = c.broadcastScalar(threshold, 0);
            for (const auto& e : active)
                if (e <= threshold) result.push_back(e);
            if (stats) stats->usedFallback = true;
            closeLevel();
            break;
        }
        std::vector<Element> a, b2, c3;
        for (const auto& e : active) {
            if (e < plan.lo)
                a.push_back(e);
            else if (e <= plan.hi)
                b2.push_back(e);
            else
                c3.push_back(e);
        }
        auto counts = c.allReduce(
            std::vector<std::uint64_t>{a.size(), b2.size()},
            [](std::uint64_t x, std::uint64_t y) { return x + y; });
        const std::uint64_t na = counts[0], nb = counts[1];
        if (na >= kRem) {
            active = std::move(a);
            n = na;
        } else if (na + nb < kRem) {
            result.insert(result.end(), a.begin(), a.end());
            result.insert(result.end(), b2.begin(), b2.end());
            kRem -= na + nb;
            n -= na + nb;
            active = std::move(c3);
        } else {
            result.insert(result.end(), a.begin(), a.end());
            kRem -= na;
            n = nb;
            active = std::move(b2);
        }
        closeLevel();
        if (kRem == 0) break;
    }
    return result;
}

template <class View>
struct MsSelectResult {
    Element value;            // element of exact global rank k
    std::uint64_t localSplit; // j: #local elements strictly below value
    int rounds = 0;
};

/// Exact multisequence selection: the element of global rank k over locally
/// sorted runs, via shared random pivot ranks and parallel binary search.
/// Only the first min(k, |s_i|) positions of each run are ever touched.
template <class View>
MsSelectResult<View> msSelect(sim::Comm& c, const View& run, std::uint64_t k) {
    std::uint64_t lo = 0;
    std::uint64_t hi = std::min<std::uint64_t>(run.size(), k);
    std::uint64_t kRem = k;
    const std::uint64_t total0 = c.allReduceSum<std::uint64_t>(hi - lo);
    if (k < 1 || k > total0) throw std::invalid_argument("msSelect: k out of range");
    MsSelectResult<View> res;
    while (true) {
        ++res.rounds;
        const std::uint64_t mySize = hi - lo;
        const std::uint64_t before = c.prefixSumScalar<std::uint64_t>(mySize) - mySize;
        const std::uint64_t total = c.allReduceSum<std::uint64_t>(mySize);
        // same random number on all PEs locates the pivot
        std::uint64_t pivotIdx = 1 + c.sharedRng()() % total;
        const bool mine = pivotIdx > before && pivotIdx <= before + mySize;
        Element v = mine ? run.at(lo + (pivotIdx - before - 1)) : Element::maxSentinel();
        v = c.allReduceMin(v);
        const std::uint64_t j = run.countLess(lo, hi, v);
        const std::uint64_t g = c.allReduceSum<std::uint64_t>(j);
        if (kRem == g + 1) {
            res.value = v;
            res.localSplit = run.countLess(0, run.size(), v);
            return res;
        }
        if (kRem <= g) {
            hi = lo + j;
        } else {
            kRem -= g + 1;
            lo = lo + j + (mine && run.at(lo + j) == v ? 1 : 0);
        }
    }
}

struct AmsResult {
    std::uint64_t prefixLen = 0;      // this PE's share: first prefixLen elements of its run
    std::uint64_t totalSelected = 0;  // k, with kLo <= k <= kHi
    int rounds = 0;
};

namespace detail {

inline double amsProbeParamMin(std::uint64_t kLo, std::uint64_t kHi) {
    if (kLo <= 1) return 1.0;
    return 1.0 - std::pow(static_cast<double>(kLo - 1) / static_cast<double>(kHi),
                          1.0 / static_cast<double>(kHi - kLo + 1));
}

inline double amsProbeParamMax(std::uint64_t kLo, std::uint64_t kHi, std::uint64_t n) {
    if (kHi >= n) return 1.0;
    return 1.0 - std::pow(static_cast<double>(n - kHi) / static_cast<double>(n - kLo + 1),
                          1.0 / static_cast<double>(kHi - kLo + 1));
}

}  // namespace detail

/// Approximate multisequence selection: the k globally smallest elements for
/// some k in [kLo, kHi], as per-PE prefixes. Probes are geometric Bernoulli
/// sample positions, combined by a min (or max) reduction. n is the total
/// active size (the recursion needs it for the max-based estimator).
template <class View>
AmsResult amsSelect(sim::Comm& c, const View& run, std::uint64_t kLo, std::uint64_t kHi, std::uint64_t n,
                    std::uint64_t localSize = ~std::uint64_t{0}) {
    if (localSize == ~std::uint64_t{0}) localSize = run.size();
    if (kLo < 1 || kLo > kHi || kHi > n) throw std::invalid_argument("amsSelect: need 1 <= kLo <= kHi <= n");
    std::uint64_t lo = 0, hi = localSize;
    std::uint64_t committedGlobal = 0;
    AmsResult res;
    while (true) {
        ++res.rounds;
        if (res.rounds > 100000) throw std::runtime_error("amsSelect: no progress");
        const std::uint64_t mySize = hi - lo;
        Element v;
        if (kLo < n - kHi) {
            const double q = detail::amsProbeParamMin(kLo, kHi);
            const std::uint64_t x = geometricDeviate(q, c.rng());
            Element cand = x <= mySize ? run.at(lo + x - 1) : Element::maxSentinel();
            v = c.allReduceMin(cand);
            if (v == Element::maxSentinel()) continue;  // every PE overshot; fresh randomness
        } else {
            const double q = detail::amsProbeParamMax(kLo, kHi, n);
            const std::uint64_t x = geometricDeviate(q, c.rng());
            Element cand = x <= mySize ? run.at(hi - x) : Element::minSentinel();
            v = c.allReduceMax(cand);
            if (v == Element::minSentinel()) continue;
        }
        const std::uint64_t j = run.countLeq(lo, hi, v);
        const std::uint64_t k = c.allReduceSum<std::uint64_t>(j);
        if (k < kLo) {
            res.prefixLen += j;
            lo += j;
            kLo -= k;
            kHi -= k;
            n -= k;
            committedGlobal += k;
        } else if (k > kHi) {
            hi = lo + j;
            n = k;
        } else {
            res.prefixLen += j;
            res.totalSelected = committedGlobal + k;
            return res;
        }
    }
}

/// Batched variant: d independent probes per round, evaluated with one
/// vector-valued reduction; stops as soon as any probe's exact rank lands in
/// [kLo, kHi], else recurses on the interval enclosed by the largest
/// underestimate and the smallest overestimate.
template <class View>
AmsResult amsSelectBatched(sim::Comm& c, const View& run, std::uint64_t kLo, std::uint64_t kHi, std::uint64_t n,
                           int d, std::uint64_t localSize = ~std::uint64_t{0}) {
    if (d < 1) throw std::invalid_argument("amsSelectBatched: d must be >= 1");
    if (localSize == ~std::uint64_t{0}) localSize = run.size();
    if (kLo < 1 || kLo > kHi || kHi > n) throw std::invalid_argument("amsSelectBatched: need 1 <= kLo <= kHi <= n");
    std::uint64_t lo = 0, hi = localSize;
    std::uint64_t committed = 0;        // local prefix already part of the output
    std::uint64_t committedGlobal = 0;  // global ranks already part of the output
    AmsResult res;
    while (true) {
        ++res.rounds;
        if (res.rounds > 100000) throw std::runtime_error("amsSelectBatched: no progress");
        const std::uint64_t mySize = hi - lo;
        const bool minBased = kLo < n - kHi;
        const double q = minBased ? detail::amsProbeParamMin(kLo, kHi) : detail::amsProbeParamMax(kLo, kHi, n);
        std::vector<Element> cand(static_cast<std::size_t>(d));
        for (int t = 0; t < d; ++t) {
            const std::uint64_t x = geometricDeviate(q, c.rng());
            if (minBased)
                cand[static_cast<std::size_t>(t)] = x <= mySize ? run.at(lo + x - 1) : Element::maxSentinel();
            else
                cand[static_cast<std::size_t>(t)] = x <= mySize ? run.at(hi - x) : Element::minSentinel();
        }
        std::vector<Element> probes =
            minBased ? c.allReduce(std::move(cand), [](const Element& a, const Element& b) { return a < b ? a : b; })
                     : c.allReduce(std::move(cand), [](const Element& a, const Element& b) { return a < b ? b : a; });
        std::vector<std::uint64_t> js(static_cast<std::size_t>(d));
        const Element bad = minBased ? Element::maxSentinel() : Element::minSentinel();
        for (int t = 0; t < d; ++t)
            js[static_cast<std::size_t>(t)] =
                probes[static_cast<std::size_t>(t)] == bad ? 0 : run.countLeq(lo, hi, probes[static_cast<std::size_t>(t)]);
        auto ks = c.allReduce(js, [](std::uint64_t x, std::uint64_t y) { return x + y; });
        int hit = -1, under = -1, over = -1;
        for (int t = 0; t < d; ++t) {
            if (probes[static_cast<std::size_t>(t)] == bad) continue;
            const std::uint64_t k = ks[static_cast<std::size_t>(t)];
            if (k >= kLo && k <= kHi) {
                if (hit < 0 || k < ks[static_cast<std::size_t>(hit)]) hit = t;
            } else if (k < kLo) {
                if (under < 0 || k > ks[static_cast<std::size_t>(under)]) under = t;
            } else {
                if (over < 0 || k < ks[static_cast<std::size_t>(over)]) over = t;
            }
        }
        if (hit >= 0) {
            res.prefixLen = committed + js[static_cast<std::size_t>(hit)];
            res.totalSelected = committedGlobal + ks[static_cast<std::size_t>(hit)];
            return res;
        }
        std::uint64_t ju = 0, ku = 0;
        if (under >= 0) {
            ju = js[static_cast<std::size_t>(under)];
            ku = ks[static_cast<std::size_t>(under)];
        }
        if (over >= 0) {
            const std::uint64_t jo = js[static_cast<std::size_t>(over)];
            const std::uint64_t ko = ks[static_cast<std::size_t>(over)];
            hi = lo + jo;
            n = ko;
        }
        committed += ju;
        committedGlobal += ku;
        lo += ju;
        kLo -= ku;
        kHi -= ku;
        n -= ku;
    }
}

}  // namespace topk
