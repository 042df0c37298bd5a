#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

namespace topk::sim {

/// alpha/beta communication cost model: a message of m words costs
/// alpha + m * beta.
struct CostModel {
    double alpha = 1.0;
    double beta = 1.0;
};

enum class Channel { Data, Control };

/// Per-PE counters of message startups and machine words moved.
/// Only payload words (keys, counts, pivots) are counted, never headers.
/// The Control channel exists for algorithms that need to account
/// coordination traffic separately from element payload (redistribution).
class CostLedger {
  public:
    CostLedger() = default;
    explicit CostLedger(int p) : pes_(static_cast<std::size_t>(p)) {}

    int numPes() const { return static_cast<int>(pes_.size()); }

    void chargeSend(int pe, std::uint64_t words, Channel ch) {
        auto& c = pes_[static_cast<std::size_t>(pe)];
        (ch == Channel::Data ? c.sentData : c.sentControl) += words;
    }
    void chargeRecv(int pe, std::uint64_t words, Channel ch) {
        auto& c = pes_[static_cast<std::size_t>(pe)];
        (ch == Channel::Data ? c.recvData : c.recvControl) += words;
    }
    void chargeStartups(int pe, std::uint64_t n) { pes_[static_cast<std::size_t>(pe)].startups += n; }
    void chargeRounds(std::uint64_t r) { rounds_ += r; }

    std::uint64_t sentWords(int pe) const {
        const auto& c = pes_[static_cast<std::size_t>(pe)];
        return c.sentData + c.sentControl;
    }
    std::uint64_t receivedWords(int pe) const {
        const auto& c = pes_[static_cast<std::size_t>(pe)];
        return c.recvData + c.recvControl;
    }
    std::uint64_t sentDataWords(int pe) const { return pes_[static_cast<std::size_t>(pe)].sentData; }
    std::uint64_t receivedDataWords(int pe) const { return pes_[static_cast<std::size_t>(pe)].recvData; }
    std::uint64_t sentControlWords(int pe) const { return pes_[static_cast<std::size_t>(pe)].sentControl; }
    std::uint64_t receivedControlWords(int pe) const { return pes_[static_cast<std::size_t>(pe)].recvControl; }
    std::uint64_t startups(int pe) const { return pes_[static_cast<std::size_t>(pe)].startups; }

    /// max over PEs of max(sent, received); the paper's efficiency metric.
    std::uint64_t bottleneckWords() const {
        std::uint64_t b = 0;
        for (int i = 0; i < numPes(); ++i) b = std::max(b, std::max(sentWords(i), receivedWords(i)));
        return b;
    }
    std::uint64_t totalSentWords() const {
        std::uint64_t s = 0;
        for (int i = 0; i < numPes(); ++i) s += sentWords(i);
        return s;
    }
    std::uint64_t totalReceivedWords() const {
        std::uint64_t s = 0;
        for (int i = 0; i < numPes(); ++i) s += receivedWords(i);
        return s;
    }
    std::uint64_t maxStartups() const {
        std::uint64_t s = 0;
        for (int i = 0; i < numPes(); ++i) s = std::max(s, startups(i));
        return s;
    }
    std::uint64_t chargedRounds() const { return rounds_; }
    double latencyCharge(const CostModel& cm) const { return cm.alpha * static_cast<double>(rounds_); }

    friend bool operator==(const CostLedger& a, const CostLedger& b) {
        return a.rounds_ == b.rounds_ && a.pes_.size() == b.pes_.size() &&
               std::equal(a.pes_.begin(), a.pes_.end(), b.pes_.begin(),
                          [](const PeCost& x, const PeCost& y) {
                              return x.sentData == y.sentData && x.recvData == y.recvData &&
                                     x.sentControl == y.sentControl && x.recvControl == y.recvControl &&
                                     x.startups == y.startups;
                          });
    }

  private:
    struct PeCost {
        std::uint64_t sentData = 0, recvData = 0;
        std::uint64_t sentControl = 0, recvControl = 0;
        std::uint64_t startups = 0;
    };
    std::vector<PeCost> pes_;
    std::uint64_t rounds_ = 0;
};

inline int ceilLog2(int p) {
    int d = 0;
    while ((1 << d) < p) ++d;
    return d;
}

}  // namespace topk::sim
