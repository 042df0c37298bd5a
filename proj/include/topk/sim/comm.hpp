#pragma once

#include <boost/context/continuation.hpp>
#include <boost/context/detail/exception.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <typeinfo>
#include <utility>
#include <vector>

#include "topk/element.hpp"
#include "topk/sim/cost.hpp"

namespace topk::sim {

class SimError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Machine words occupied by one payload item. Ordered objects count as a
/// single word (the tie-breaker is conceptual, not transmitted).
template <class T>
struct WordCount {
    static constexpr std::uint64_t value = (sizeof(T) + 7) / 8;
};
template <>
struct WordCount<Element> {
    static constexpr std::uint64_t value = 1;
};

template <class T>
inline constexpr std::uint64_t wordsOf = WordCount<T>::value;

class Comm;

/// Deterministic SPMD engine: p cooperatively scheduled fibers, one per PE,
/// blocking at communication calls. A round-based scheduler advances every
/// runnable PE to its next communication point, so identical (program, p,
/// seed) yields bit-identical results and ledger.
class Engine {
  public:
    Engine(int p, std::uint64_t seed, const CostModel& cost);
    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    void run(const std::function<void(Comm&)>& program);

    CostLedger& ledger() { return ledger_; }
    const CostModel& costModel() const { return cost_; }
    int numPes() const { return p_; }

  private:
    friend class Comm;

    enum class PeState { Ready, BlockedOp, BlockedPair, Done };

    struct OpSlot {
        const char* kind = nullptr;
        const std::type_info* type = nullptr;
        int root = -1;
        int arrived = 0;
        std::vector<const void*> contribs;
        std::vector<void*> outs;
    };

    struct PairSlot {
        int first = -1;  // PE that arrived first
        const void* contrib = nullptr;
        void* out = nullptr;
        const std::type_info* type = nullptr;
    };

    // Blocks the calling PE's fiber until the scheduler resumes it.
    void yield(int pe);
    void wakeOpWaiters();
    [[noreturn]] void fail(const std::string& what);
    void deadlockDiagnostic();

    // cost charging; d rounds and d startups per PE for tree collectives
    void chargeCollectiveOverhead();
    void chargeTransfer(int from, int to, std::uint64_t words, Channel ch);
    void chargeBroadcast(std::uint64_t m, int root, Channel ch);
    void chargeReduce(std::uint64_t m, int root, Channel ch);
    void chargeAllReduce(std::uint64_t m, Channel ch);
    void chargePrefixSum(std::uint64_t m, Channel ch);
    void chargeGatherv(const std::vector<std::uint64_t>& sizes, int root, Channel ch);
    void chargeScatterv(const std::vector<std::uint64_t>& sizes, int root, Channel ch);
    void chargeAllGatherv(const std::vector<std::uint64_t>& sizes, Channel ch);
    void chargeGatherDirect(const std::vector<std::uint64_t>& sizes, int root, Channel ch);
    void chargeAllToAll(const std::vector<std::vector<std::uint64_t>>& sizes, Channel ch);

    int p_;
    int log2p_;
    CostModel cost_;
    CostLedger ledger_;
    std::vector<Comm> comms_;
    std::vector<boost::context::continuation> conts_;
    std::vector<boost::context::continuation> sinks_;
    std::vector<PeState> states_;
    OpSlot op_;
    std::map<std::pair<int, int>, PairSlot> pairs_;
    std::vector<int> pairPartner_;  // partner a blocked-pair PE waits for
    std::exception_ptr error_;
};

/// Per-PE communication handle handed to the SPMD program. All collectives
/// must be entered by every PE with a consistent shape; reductions and scans
/// require an associative op (caller's responsibility, unchecked).
class Comm {
  public:
    Comm() = default;  // usable only after the engine wires it up

    int rank() const { return rank_; }          // 0-based
    int peId() const { return rank_ + 1; }      // the paper numbers PEs 1..p
    int numPes() const { return eng_->p_; }

    std::mt19937_64& rng() { return rng_; }
    /// Identical sequence on every PE, provided all PEs draw collectively.
    std::mt19937_64& sharedRng() { return sharedRng_; }

    CostLedger& ledger() { return eng_->ledger_; }

    // ---- collectives -----------------------------------------------------

    template <class T>
    std::vector<T> broadcast(std::vector<T> v, int root, Channel ch = Channel::Data) {
        std::vector<T> out;
        if (arrive("broadcast", typeid(std::vector<T>), root, &v, &out)) {
            const auto& src = contrib<T>(root);
            for (int i = 0; i < numPes(); ++i) result<T>(i) = src;
            eng_->chargeBroadcast(src.size() * wordsOf<T>, root, ch);
            finish();
        }
        return out;
    }

    template <class T, class Op>
    std::vector<T> reduce(std::vector<T> v, Op op, int root, Channel ch = Channel::Data) {
        std::vector<T> out;
        if (arrive("reduce", typeid(std::vector<T>), root, &v, &out)) {
            result<T>(root) = foldElementwise<T>(op, "reduce");
            eng_->chargeReduce(contrib<T>(0).size() * wordsOf<T>, root, ch);
            finish();
        }
        return out;
    }

    template <class T, class Op>
    std::vector<T> allReduce(std::vector<T> v, Op op, Channel ch = Channel::Data) {
        std::vector<T> out;
        if (arrive("allReduce", typeid(std::vector<T>), -1, &v, &out)) {
            std::vector<T> red = foldElementwise<T>(op, "allReduce");
            for (int i = 0; i < numPes(); ++i) result<T>(i) = red;
            eng_->chargeAllReduce(red.size() * wordsOf<T>, ch);
            finish();
        }
        return out;
    }

    /// Inclusive scan: PE j receives fold of contributions 0..j.
    template <class T, class Op>
    std::vector<T> prefixSum(std::vector<T> v, Op op, Channel ch = Channel::Data) {
        std::vector<T> out;
        if (arrive("prefixSum", typeid(std::vector<T>), -1, &v, &out)) {
            const std::size_t m = contrib<T>(0).size();
            std::vector<T> acc = contrib<T>(0);
            result<T>(0) = acc;
            for (int i = 1; i < numPes(); ++i) {
                const auto& c = contrib<T>(i);
                if (c.size() != m) fail_("prefixSum", "vector length mismatch");
                for (std::size_t j = 0; j < m; ++j) acc[j] = op(acc[j], c[j]);
                result<T>(i) = acc;
            }
            eng_->chargePrefixSum(m * wordsOf<T>, ch);
            finish();
        }
        return out;
    }

    /// Root receives all p blocks (variable sizes); others get an empty result.
    template <class T>
    std::vector<std::vector<T>> gather(std::vector<T> v, int root, Channel ch = Channel::Data) {
        std::vector<std::vector<T>> out;
        if (arrive("gather", typeid(std::vector<T>), root, &v, &out)) {
            auto& dst = *static_cast<std::vector<std::vector<T>>*>(eng_->op_.outs[static_cast<std::size_t>(root)]);
            dst.resize(static_cast<std::size_t>(numPes()));
            std::vector<std::uint64_t> sizes(static_cast<std::size_t>(numPes()));
            for (int i = 0; i < numPes(); ++i) {
                dst[static_cast<std::size_t>(i)] = contrib<T>(i);
                sizes[static_cast<std::size_t>(i)] = contrib<T>(i).size() * wordsOf<T>;
            }
            eng_->chargeGatherv(sizes, root, ch);
            finish();
        }
        return out;
    }

    /// Root supplies p blocks; every PE receives its own.
    template <class T>
    std::vector<T> scatter(std::vector<std::vector<T>> parts, int root, Channel ch = Channel::Data) {
        std::vector<T> out;
        if (arrive("scatter", typeid(std::vector<std::vector<T>>), root, &parts, &out)) {
            const auto& src =
                *static_cast<const std::vector<std::vector<T>>*>(eng_->op_.contribs[static_cast<std::size_t>(root)]);
            if (src.size() != static_cast<std::size_t>(numPes()))
                fail_("scatter", "root must supply one block per PE");
            std::vector<std::uint64_t> sizes(static_cast<std::size_t>(numPes()));
            for (int i = 0; i < numPes(); ++i) {
                *static_cast<std::vector<T>*>(eng_->op_.outs[static_cast<std::size_t>(i)]) =
                    src[static_cast<std::size_t>(i)];
                sizes[static_cast<std::size_t>(i)] = src[static_cast<std::size_t>(i)].size() * wordsOf<T>;
            }
            eng_->chargeScatterv(sizes, root, ch);
            finish();
        }
        return out;
    }

    template <class T>
    std::vector<std::vector<T>> allGather(std::vector<T> v, Channel ch = Channel::Data) {
        std::vector<std::vector<T>> out;
        if (arrive("allGather", typeid(std::vector<T>), -1, &v, &out)) {
            std::vector<std::vector<T>> all(static_cast<std::size_t>(numPes()));
            std::vector<std::uint64_t> sizes(static_cast<std::size_t>(numPes()));
            for (int i = 0; i < numPes(); ++i) {
                all[static_cast<std::size_t>(i)] = contrib<T>(i);
                sizes[static_cast<std::size_t>(i)] = contrib<T>(i).size() * wordsOf<T>;
            }
            for (int i = 0; i < numPes(); ++i)
                *static_cast<std::vector<std::vector<T>>*>(eng_->op_.outs[static_cast<std::size_t>(i)]) = all;
            eng_->chargeAllGatherv(sizes, ch);
            finish();
        }
        return out;
    }

    /// Direct point-to-point gather: one message per sender, charged as such.
    template <class T>
    std::vector<std::vector<T>> gatherDirect(std::vector<T> v, int root, Channel ch = Channel::Data) {
        std::vector<std::vector<T>> out;
        if (arrive("gatherDirect", typeid(std::vector<T>), root, &v, &out)) {
            auto& dst = *static_cast<std::vector<std::vector<T>>*>(eng_->op_.outs[static_cast<std::size_t>(root)]);
            dst.resize(static_cast<std::size_t>(numPes()));
            std::vector<std::uint64_t> sizes(static_cast<std::size_t>(numPes()));
            for (int i = 0; i < numPes(); ++i) {
                dst[static_cast<std::size_t>(i)] = contrib<T>(i);
                sizes[static_cast<std::size_t>(i)] = contrib<T>(i).size() * wordsOf<T>;
            }
            eng_->chargeGatherDirect(sizes, root, ch);
            finish();
        }
        return out;
    }

    /// All-to-all personalized communication with direct delivery; one
    /// startup per nonempty message on each side.
    template <class T>
    std::vector<std::vector<T>> allToAll(std::vector<std::vector<T>> dest, Channel ch = Channel::Data) {
        std::vector<std::vector<T>> out;
        if (arrive("allToAll", typeid(std::vector<std::vector<T>>), -1, &dest, &out)) {
            const int p = numPes();
            std::vector<std::vector<std::uint64_t>> sizes(static_cast<std::size_t>(p),
                                                          std::vector<std::uint64_t>(static_cast<std::size_t>(p)));
            for (int i = 0; i < p; ++i) {
                const auto& blocks =
                    *static_cast<const std::vector<std::vector<T>>*>(eng_->op_.contribs[static_cast<std::size_t>(i)]);
                if (blocks.size() != static_cast<std::size_t>(p))
                    fail_("allToAll", "each PE must supply one block per destination");
                auto& recv = *static_cast<std::vector<std::vector<T>>*>(eng_->op_.outs[static_cast<std::size_t>(i)]);
                recv.resize(static_cast<std::size_t>(p));
            }
            for (int i = 0; i < p; ++i) {
                const auto& blocks =
                    *static_cast<const std::vector<std::vector<T>>*>(eng_->op_.contribs[static_cast<std::size_t>(i)]);
                for (int j = 0; j < p; ++j) {
                    auto& recv = *static_cast<std::vector<std::vector<T>>*>(eng_->op_.outs[static_cast<std::size_t>(j)]);
                    recv[static_cast<std::size_t>(i)] = blocks[static_cast<std::size_t>(j)];
                    sizes[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                        blocks[static_cast<std::size_t>(j)].size() * wordsOf<T>;
                }
            }
            eng_->chargeAllToAll(sizes, ch);
            finish();
        }
        return out;
    }

    /// Pairwise synchronous exchange; both sides must name each other.
    template <class T>
    std::vector<T> sendRecv(int partner, std::vector<T> v, Channel ch = Channel::Data) {
        if (partner == rank_ || partner < 0 || partner >= numPes())
            throw SimError("sendRecv: invalid partner " + std::to_string(partner));
        std::vector<T> out;
        auto key = std::minmax(rank_, partner);
        auto& slot = eng_->pairs_[{key.first, key.second}];
        if (slot.first < 0) {
            slot.first = rank_;
            slot.contrib = &v;
            slot.out = &out;
            slot.type = &typeid(std::vector<T>);
            eng_->pairPartner_[static_cast<std::size_t>(rank_)] = partner;
            eng_->states_[static_cast<std::size_t>(rank_)] = Engine::PeState::BlockedPair;
            eng_->yield(rank_);
        } else {
            if (slot.first != partner)
                throw SimError("sendRecv: PE " + std::to_string(peId()) + " paired against PE " +
                               std::to_string(slot.first + 1));
            if (*slot.type != typeid(std::vector<T>)) throw SimError("sendRecv: payload type mismatch");
            const auto& otherIn = *static_cast<const std::vector<T>*>(slot.contrib);
            auto& otherOut = *static_cast<std::vector<T>*>(slot.out);
            otherOut = v;
            out = otherIn;
            const std::uint64_t wa = v.size() * wordsOf<T>;
            const std::uint64_t wb = otherIn.size() * wordsOf<T>;
            eng_->chargeTransfer(rank_, partner, wa, ch);
            eng_->chargeTransfer(partner, rank_, wb, ch);
            eng_->ledger_.chargeStartups(rank_, 1);
            eng_->ledger_.chargeStartups(partner, 1);
            eng_->ledger_.chargeRounds(1);
            eng_->states_[static_cast<std::size_t>(partner)] = Engine::PeState::Ready;
            eng_->pairPartner_[static_cast<std::size_t>(partner)] = -1;
            eng_->pairs_.erase({key.first, key.second});
        }
        return out;
    }

    // ---- scalar conveniences --------------------------------------------

    template <class T>
    T allReduceSum(T x, Channel ch = Channel::Data) {
        return allReduce(std::vector<T>{x}, [](T a, T b) { return a + b; }, ch)[0];
    }
    template <class T>
    T allReduceMin(T x, Channel ch = Channel::Data) {
        return allReduce(std::vector<T>{x}, [](const T& a, const T& b) { return a < b ? a : b; }, ch)[0];
    }
    template <class T>
    T allReduceMax(T x, Channel ch = Channel::Data) {
        return allReduce(std::vector<T>{x}, [](const T& a, const T& b) { return a < b ? b : a; }, ch)[0];
    }
    template <class T>
    T prefixSumScalar(T x, Channel ch = Channel::Data) {
        return prefixSum(std::vector<T>{x}, [](T a, T b) { return a + b; }, ch)[0];
    }
    template <class T>
    T broadcastScalar(T x, int root, Channel ch = Channel::Data) {
        return broadcast(std::vector<T>{x}, root, ch)[0];
    }

  private:
    friend class Engine;

    template <class T>
    const std::vector<T>& contrib(int i) const {
        return *static_cast<const std::vector<T>*>(eng_->op_.contribs[static_cast<std::size_t>(i)]);
    }
    template <class T>
    std::vector<T>& result(int i) {
        return *static_cast<std::vector<T>*>(eng_->op_.outs[static_cast<std::size_t>(i)]);
    }

    template <class T, class Op>
    std::vector<T> foldElementwise(Op& op, const char* kind) {
        std::vector<T> acc = contrib<T>(0);
        for (int i = 1; i < numPes(); ++i) {
            const auto& c = contrib<T>(i);
            if (c.size() != acc.size()) fail_(kind, "vector length mismatch");
            for (std::size_t j = 0; j < acc.size(); ++j) acc[j] = op(acc[j], c[j]);
        }
        return acc;
    }

    // Returns true iff this PE is the last to arrive and must run the op.
    bool arrive(const char* kind, const std::type_info& type, int root, const void* in, void* out);
    void finish();
    [[noreturn]] void fail_(const char* kind, const std::string& what);

    Engine* eng_ = nullptr;
    int rank_ = 0;
    std::mt19937_64 rng_;
    std::mt19937_64 sharedRng_;
};

// ---- Engine implementation ----------------------------------------------

inline Engine::Engine(int p, std::uint64_t seed, const CostModel& cost)
    : p_(p), log2p_(ceilLog2(p)), cost_(cost), ledger_(p) {
    if (p < 1) throw SimError("runSpmd: p must be >= 1");
    comms_.resize(static_cast<std::size_t>(p));
    conts_.resize(static_cast<std::size_t>(p));
    sinks_.resize(static_cast<std::size_t>(p));
    states_.assign(static_cast<std::size_t>(p), PeState::Ready);
    pairPartner_.assign(static_cast<std::size_t>(p), -1);
    op_.contribs.resize(static_cast<std::size_t>(p));
    op_.outs.resize(static_cast<std::size_t>(p));
    std::seed_seq sharedSeq{seed, std::uint64_t{0x736861726564}};
    for (int i = 0; i < p; ++i) {
        auto& c = comms_[static_cast<std::size_t>(i)];
        c.eng_ = this;
        c.rank_ = i;
        std::seed_seq seq{seed, std::uint64_t(i) + 1};
        c.rng_.seed(seq);
        std::seed_seq s2{seed, std::uint64_t{0x736861726564}};
        c.sharedRng_.seed(s2);
    }
    (void)sharedSeq;
}

inline void Engine::run(const std::function<void(Comm&)>& program) {
    namespace ctx = boost::context;
    for (int i = 0; i < p_; ++i) {
        conts_[static_cast<std::size_t>(i)] = ctx::callcc([this, i, &program](ctx::continuation&& sink) {
            sinks_[static_cast<std::size_t>(i)] = std::move(sink);
            // hand control back until the scheduler starts us
            sinks_[static_cast<std::size_t>(i)] = sinks_[static_cast<std::size_t>(i)].resume();
            try {
                program(comms_[static_cast<std::size_t>(i)]);
            } catch (boost::context::detail::forced_unwind&) {
                throw;  // stack teardown must pass through
            } catch (...) {
                if (!error_) error_ = std::current_exception();
            }
            states_[static_cast<std::size_t>(i)] = PeState::Done;
            return std::move(sinks_[static_cast<std::size_t>(i)]);
        });
    }
    while (true) {
        bool progressed = false;
        for (int i = 0; i < p_; ++i) {
            if (states_[static_cast<std::size_t>(i)] == PeState::Ready) {
                conts_[static_cast<std::size_t>(i)] = conts_[static_cast<std::size_t>(i)].resume();
                progressed = true;
                if (error_) break;
            }
        }
        if (error_) break;
        bool allDone = true;
        for (auto s : states_) allDone = allDone && (s == PeState::Done);
        if (allDone) break;
        if (!progressed) deadlockDiagnostic();
    }
    if (error_) {
        // unwind any still-suspended fibers before rethrowing
        for (auto& c : conts_) c = boost::context::continuation();
        std::rethrow_exception(std::exchange(error_, nullptr));
    }
}

inline void Engine::yield(int pe) {
    auto& sink = sinks_[static_cast<std::size_t>(pe)];
    sink = sink.resume();
}

inline void Engine::deadlockDiagnostic() {
    std::ostringstream os;
    os << "deadlock:";
    for (int i = 0; i < p_; ++i) {
        switch (states_[static_cast<std::size_t>(i)]) {
            case PeState::BlockedOp:
                os << " PE " << (i + 1) << " waits on collective '" << (op_.kind ? op_.kind : "?") << "';";
                break;
            case PeState::BlockedPair:
                os << " PE " << (i + 1) << " waits on sendRecv with PE "
                   << (pairPartner_[static_cast<std::size_t>(i)] + 1) << ";";
                break;
            case PeState::Done:
                os << " PE " << (i + 1) << " already finished;";
                break;
            case PeState::Ready:
                break;
        }
    }
    throw SimError(os.str());
}

inline bool Comm::arrive(const char* kind, const std::type_info& type, int root, const void* in, void* out) {
    auto& slot = eng_->op_;
    if (slot.arrived == 0) {
        slot.kind = kind;
        slot.type = &type;
        slot.root = root;
    } else {
        if (std::string(slot.kind) != kind || *slot.type != type || slot.root != root)
            throw SimError(std::string("collective mismatch: PE ") + std::to_string(peId()) + " entered '" + kind +
                           "' while the pending operation is '" + slot.kind + "'");
    }
    slot.contribs[static_cast<std::size_t>(rank_)] = in;
    slot.outs[static_cast<std::size_t>(rank_)] = out;
    ++slot.arrived;
    if (slot.arrived < eng_->p_) {
        eng_->states_[static_cast<std::size_t>(rank_)] = Engine::PeState::BlockedOp;
        eng_->yield(rank_);
        return false;
    }
    return true;
}

inline void Comm::finish() {
    auto& slot = eng_->op_;
    slot.arrived = 0;
    slot.kind = nullptr;
    slot.type = nullptr;
    slot.root = -1;
    std::fill(slot.contribs.begin(), slot.contribs.end(), nullptr);
    std::fill(slot.outs.begin(), slot.outs.end(), nullptr);
    eng_->wakeOpWaiters();
}

inline void Engine::wakeOpWaiters() {
    for (int i = 0; i < p_; ++i)
        if (states_[static_cast<std::size_t>(i)] == PeState::BlockedOp)
            states_[static_cast<std::size_t>(i)] = PeState::Ready;
}

inline void Comm::fail_(const char* kind, const std::string& what) {
    throw SimError(std::string(kind) + ": " + what);
}

inline void Engine::chargeCollectiveOverhead() {
    if (p_ == 1) return;
    for (int i = 0; i < p_; ++i) ledger_.chargeStartups(i, static_cast<std::uint64_t>(log2p_));
    ledger_.chargeRounds(static_cast<std::uint64_t>(log2p_));
}

inline void Engine::chargeTransfer(int from, int to, std::uint64_t words, Channel ch) {
    ledger_.chargeSend(from, words, ch);
    ledger_.chargeRecv(to, words, ch);
}

inline void Engine::chargeBroadcast(std::uint64_t m, int root, Channel ch) {
    chargeCollectiveOverhead();
    if (p_ == 1 || m == 0) return;
    // binomial tree over ranks relative to root
    for (int t = 0; t < log2p_; ++t) {
        for (int r = 0; r < (1 << t); ++r) {
            int dst = r + (1 << t);
            if (dst >= p_) continue;
            chargeTransfer((r + root) % p_, (dst + root) % p_, m, ch);
        }
    }
}

inline void Engine::chargeReduce(std::uint64_t m, int root, Channel ch) {
    chargeCollectiveOverhead();
    if (p_ == 1 || m == 0) return;
    for (int t = 0; t < log2p_; ++t) {
        for (int r = 0; r < (1 << t); ++r) {
            int src = r + (1 << t);
            if (src >= p_) continue;
            chargeTransfer((src + root) % p_, (r + root) % p_, m, ch);
        }
    }
}

inline void Engine::chargeAllReduce(std::uint64_t m, Channel ch) {
    chargeCollectiveOverhead();
    if (p_ == 1 || m == 0) return;
    // reduce-to-root followed by broadcast, without double-charging startups
    for (int t = 0; t < log2p_; ++t) {
        for (int r = 0; r < (1 << t); ++r) {
            int other = r + (1 << t);
            if (other >= p_) continue;
            chargeTransfer(other, r, m, ch);
            chargeTransfer(r, other, m, ch);
        }
    }
}

inline void Engine::chargePrefixSum(std::uint64_t m, Channel ch) {
    chargeCollectiveOverhead();
    if (p_ == 1 || m == 0) return;
    // hypercube scan: pairwise exchange per dimension where the partner exists
    for (int t = 0; t < log2p_; ++t) {
        for (int r = 0; r < p_; ++r) {
            int partner = r ^ (1 << t);
            if (partner < r || partner >= p_) continue;
            chargeTransfer(r, partner, m, ch);
            chargeTransfer(partner, r, m, ch);
        }
    }
}

inline void Engine::chargeGatherv(const std::vector<std::uint64_t>& sizes, int root, Channel ch) {
    chargeCollectiveOverhead();
    if (p_ == 1) return;
    // binomial gather with accumulated block sizes
    std::vector<std::uint64_t> acc(static_cast<std::size_t>(p_));
    for (int r = 0; r < p_; ++r) acc[static_cast<std::size_t>(r)] = sizes[static_cast<std::size_t>((r + root) % p_)];
    for (int t = 0; t < log2p_; ++t) {
        for (int r = 0; r < p_; ++r) {
            if ((r & ((1 << (t + 1)) - 1)) != (1 << t)) continue;
            int dst = r - (1 << t);
            std::uint64_t w = acc[static_cast<std::size_t>(r)];
            if (w > 0) chargeTransfer((r + root) % p_, (dst + root) % p_, w, ch);
            acc[static_cast<std::size_t>(dst)] += w;
            acc[static_cast<std::size_t>(r)] = 0;
        }
    }
}

inline void Engine::chargeScatterv(const std::vector<std::uint64_t>& sizes, int root, Channel ch) {
    chargeCollectiveOverhead();
    if (p_ == 1) return;
    // mirror of the binomial gather: blocks travel root -> leaves
    std::vector<std::uint64_t> acc(static_cast<std::size_t>(p_));
    for (int r = 0; r < p_; ++r) acc[static_cast<std::size_t>(r)] = sizes[static_cast<std::size_t>((r + root) % p_)];
    struct Move {
        int src, dst;
        std::uint64_t w;
    };
    std::vector<Move> moves;
    for (int t = 0; t < log2p_; ++t) {
        for (int r = 0; r < p_; ++r) {
            if ((r & ((1 << (t + 1)) - 1)) != (1 << t)) continue;
            int dst = r - (1 << t);
            std::uint64_t w = acc[static_cast<std::size_t>(r)];
            if (w > 0) moves.push_back({(dst + root) % p_, (r + root) % p_, w});
            acc[static_cast<std::size_t>(dst)] += w;
            acc[static_cast<std::size_t>(r)] = 0;
        }
    }
    for (auto it = moves.rbegin(); it != moves.rend(); ++it) chargeTransfer(it->src, it->dst, it->w, ch);
}

inline void Engine::chargeAllGatherv(const std::vector<std::uint64_t>& sizes, Channel ch) {
    chargeCollectiveOverhead();
    if (p_ == 1) return;
    // gossiping ring accounting: every PE forwards all blocks except the one
    // whose journey ends at it
    std::uint64_t total = 0;
    for (auto s : sizes) total += s;
    for (int r = 0; r < p_; ++r) {
        chargeTransfer(r, (r + 1) % p_, total - sizes[static_cast<std::size_t>((r + 1) % p_)], ch);
    }
}

inline void Engine::chargeGatherDirect(const std::vector<std::uint64_t>& sizes, int root, Channel ch) {
    for (int i = 0; i < p_; ++i) {
        if (i == root) continue;
        std::uint64_t w = sizes[static_cast<std::size_t>(i)];
        chargeTransfer(i, root, w, ch);
        ledger_.chargeStartups(i, 1);
        ledger_.chargeStartups(root, 1);
    }
    ledger_.chargeRounds(1);
}

inline void Engine::chargeAllToAll(const std::vector<std::vector<std::uint64_t>>& sizes, Channel ch) {
    for (int i = 0; i < p_; ++i) {
        for (int j = 0; j < p_; ++j) {
            if (i == j) continue;
            std::uint64_t w = sizes[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            if (w == 0) continue;
            chargeTransfer(i, j, w, ch);
            ledger_.chargeStartups(i, 1);
            ledger_.chargeStartups(j, 1);
        }
    }
    ledger_.chargeRounds(1);
}

}  // namespace topk::sim
