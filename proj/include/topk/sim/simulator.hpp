#pragma once

#include <type_traits>
#include <utility>
#include <vector>

#include "topk/sim/comm.hpp"
#include "topk/sim/cost.hpp"

namespace topk::sim {

/// Runs one SPMD program on p simulated PEs and returns each PE's result
/// together with the complete cost ledger. Identical (program, p, seed)
/// yields bit-identical results and ledger.
template <class F>
auto runSpmd(int p, std::uint64_t seed, const CostModel& cost, F&& program)
    -> std::pair<std::vector<std::invoke_result_t<F&, Comm&>>, CostLedger> {
    using R = std::invoke_result_t<F&, Comm&>;
    static_assert(!std::is_void_v<R>, "use runSpmdVoid for programs without a result");
    std::vector<R> results(static_cast<std::size_t>(p));
    Engine eng(p, seed, cost);
    eng.run([&](Comm& c) { results[static_cast<std::size_t>(c.rank())] = program(c); });
    return {std::move(results), std::move(eng.ledger())};
}

template <class F>
CostLedger runSpmdVoid(int p, std::uint64_t seed, const CostModel& cost, F&& program) {
    Engine eng(p, seed, cost);
    eng.run([&](Comm& c) { program(c); });
    return std::move(eng.ledger());
}

}  // namespace topk::sim
