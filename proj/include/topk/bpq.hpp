#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "topk/element.hpp"
#include "topk/rank_tree.hpp"
#include "topk/selection.hpp"
#include "topk/sim/comm.hpp"

namespace topk {

/// Bulk parallel priority queue: one rank tree per PE, insertion purely
/// local, deleteMin* via multisequence selection over tree cursors. Elements
/// never migrate between PEs; all deleteMin* calls are collective.
class BulkQueue {
  public:
    explicit BulkQueue(sim::Comm& c) : c_(&c), tree_(0x71e5 + static_cast<std::uint64_t>(c.rank())) {}

    /// Purely local: charges zero words by construction.
    void insertBulk(const std::vector<Element>& es) { tree_.insertBulk(es); }

    std::size_t localSize() const { return tree_.size(); }
    std::uint64_t globalSize() { return c_->allReduceSum<std::uint64_t>(tree_.size()); }
    const RankTree& tree() const { return tree_; }

    /// Removes and returns this PE's share of the k globally smallest.
    std::vector<Element> deleteMinFixed(std::uint64_t k) {
        const std::uint64_t n = globalSize();
        if (k > n)
            throw std::invalid_argument("deleteMinFixed: k = " + std::to_string(k) +
                                        " exceeds queue size " + std::to_string(n));
        if (k == 0) return {};
        if (k == 1) {
            // min-reduction fast path
            Element mine = tree_.empty() ? Element::maxSentinel() : tree_.min();
            Element global = c_->allReduceMin(mine);
            if (!tree_.empty() && mine == global) return tree_.extractPrefix(1);
            return {};
        }
        TreeRunView view(tree_);
        auto sel = msSelect(*c_, view, k);
        // the pivot's owner removes it along with its strictly-smaller prefix
        std::size_t take = sel.localSplit;
        if (take < tree_.size() && tree_.at(take) == sel.value) ++take;
        return tree_.extractPrefix(take);
    }

    /// Removes and returns this PE's share of the k globally smallest for
    /// some k in [kLo, kHi]. d > 1 batches that many probes per round.
    std::vector<Element> deleteMinFlexible(std::uint64_t kLo, std::uint64_t kHi, int d = 1, int* rounds = nullptr) {
        if (kLo > kHi) throw std::invalid_argument("deleteMinFlexible: kLo > kHi");
        const std::uint64_t capped = std::min<std::uint64_t>(tree_.size(), kHi);
        const std::uint64_t n = c_->allReduceSum<std::uint64_t>(capped);
        std::uint64_t total = globalSize();
        if (kHi > total)
            throw std::invalid_argument("deleteMinFlexible: kHi = " + std::to_string(kHi) +
                                        " exceeds queue size " + std::to_string(total));
        if (kHi == 0) return {};
        TreeRunView view(tree_);
        AmsResult sel = d > 1 ? amsSelectBatched(*c_, view, std::max<std::uint64_t>(kLo, 1), kHi, n, d, capped)
                              : amsSelect(*c_, view, std::max<std::uint64_t>(kLo, 1), kHi, n, capped);
        if (rounds) *rounds = sel.rounds;
        return tree_.extractPrefix(sel.prefixLen);
    }

  private:
    sim::Comm* c_;
    RankTree tree_;
};

}  // namespace topk
