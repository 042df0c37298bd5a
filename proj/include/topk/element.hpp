#pragma once

#include <cstdint>
#include <limits>
#include <tuple>

namespace topk {

/// Globally uniquely ordered item: a key plus a (pe, index) tie-breaker.
/// The order on (key, pe, idx) is a strict total order as long as no two
/// elements share all three fields.
struct Element {
    double key = 0.0;
    std::uint32_t pe = 0;
    std::uint64_t idx = 0;

    friend bool operator<(const Element& a, const Element& b) {
        return std::tie(a.key, a.pe, a.idx) < std::tie(b.key, b.pe, b.idx);
    }
    friend bool operator<=(const Element& a, const Element& b) { return !(b < a); }
    friend bool operator>(const Element& a, const Element& b) { return b < a; }
    friend bool operator>=(const Element& a, const Element& b) { return !(a < b); }
    friend bool operator==(const Element& a, const Element& b) {
        return a.key == b.key && a.pe == b.pe && a.idx == b.idx;
    }
    friend bool operator!=(const Element& a, const Element& b) { return !(a == b); }

    static Element maxSentinel() {
        return {std::numeric_limits<double>::infinity(),
                std::numeric_limits<std::uint32_t>::max(),
                std::numeric_limits<std::uint64_t>::max()};
    }
    static Element minSentinel() {
        return {-std::numeric_limits<double>::infinity(), 0, 0};
    }
};

/// (key, count) pair used for sample counts and exact counts.
struct CountedKey {
    std::int64_t key = 0;
    std::int64_t count = 0;

    friend bool operator==(const CountedKey& a, const CountedKey& b) {
        return a.key == b.key && a.count == b.count;
    }
};

}  // namespace topk
