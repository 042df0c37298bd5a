#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "topk/oracle.hpp"
#include "topk/sim/simulator.hpp"
#include "topk/sumagg.hpp"

using namespace topk;

namespace {

const sim::CostModel kCost{1.0, 1.0};

std::vector<std::vector<CountedKey>> zipfWeighted(int p, std::int64_t keysPerPe, double s, std::mt19937_64& rng) {
    // key i gets weight ~ i^-s scaled to integers, spread over the PEs
    std::vector<std::vector<CountedKey>> streams(static_cast<std::size_t>(p));
    const std::int64_t u = keysPerPe * p;
    for (std::int64_t i = 1; i <= u; ++i) {
        const std::int64_t w = static_cast<std::int64_t>(std::llround(1e6 * std::pow(static_cast<double>(i), -s)));
        if (w == 0) continue;
        // split the weight into a few randomly placed shards
        const int shards = 1 + static_cast<int>(rng() % 3);
        std::int64_t left = w;
        for (int j = 0; j < shards; ++j) {
            const std::int64_t part = j + 1 == shards ? left : left / 2;
            left -= part;
            if (part > 0) streams[rng() % static_cast<std::uint64_t>(p)].push_back({i, part});
        }
    }
    return streams;
}

std::vector<std::int64_t> keysOf(const std::vector<CountedKey>& v) {
    std::vector<std::int64_t> keys;
    for (const auto& kv : v) keys.push_back(kv.key);
    return keys;
}

}  // namespace

TEST_CASE("localAggregate folds duplicate keys and matches a sequential oracle") {
    CHECK(localAggregate({{5, 1}, {5, 2}}) == std::vector<CountedKey>{{5, 3}});
    CHECK(localAggregate({}).empty());
    CHECK_THROWS_AS(localAggregate({{1, -2}}), std::invalid_argument);
    std::mt19937_64 rng(11);
    std::vector<CountedKey> stream;
    std::map<std::int64_t, std::int64_t> fold;
    for (int i = 0; i < 5000; ++i) {
        CountedKey kv{static_cast<std::int64_t>(rng() % 300), static_cast<std::int64_t>(rng() % 50)};
        stream.push_back(kv);
        fold[kv.key] += kv.count;
    }
    auto got = localAggregate(stream);
    REQUIRE(got.size() == fold.size());
    for (const auto& kv : got) CHECK(kv.count == fold[kv.key]);
}

TEST_CASE("weightedSample deviates from v/vAvg by less than 1 per key, every run") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<CountedKey> table;
        for (int i = 0; i < 40; ++i)
            table.push_back({i, static_cast<std::int64_t>(rng() % 1000)});
        const double vAvg = 1.0 + static_cast<double>(rng() % 97);
        auto sample = weightedSample(table, vAvg, rng);
        std::map<std::int64_t, std::int64_t> got;
        for (const auto& kv : sample) got[kv.key] = kv.count;
        for (const auto& kv : table) {
            const double expected = static_cast<double>(kv.count) / vAvg;
            CHECK(std::abs(static_cast<double>(got[kv.key]) - expected) < 1.0);
        }
    }
}

TEST_CASE("per-key global sample deviation is at most p") {
    const int p = 16;
    std::mt19937_64 seedRng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const double vAvg = 3.7;
        double expected = 0;
        std::int64_t got = 0;
        for (int r = 0; r < p; ++r) {
            std::mt19937_64 rng(seedRng());
            const std::int64_t v = static_cast<std::int64_t>(seedRng() % 500);
            expected += static_cast<double>(v) / vAvg;
            auto sample = weightedSample({{1, v}}, vAvg, rng);
            if (!sample.empty()) got += sample[0].count;
        }
        CHECK(std::abs(static_cast<double>(got) - expected) <= static_cast<double>(p));
    }
}

TEST_CASE("values that are exact multiples of vAvg sample deterministically") {
    std::mt19937_64 rng(19);
    const double vAvg = 25.0;
    std::vector<CountedKey> table = {{1, 100}, {2, 250}, {3, 0}, {4, 25}};
    for (int trial = 0; trial < 20; ++trial) {
        auto sample = weightedSample(table, vAvg, rng);
        CHECK(sample == std::vector<CountedKey>{{1, 4}, {2, 10}, {4, 1}});
    }
}

TEST_CASE("Bernoulli-part deviations obey the Hoeffding tail") {
    // X = sum of p Bernoulli parts; P(|X - mu| >= t) <= 2 exp(-2 t^2 / p)
    const int p = 16;
    const double t = 5.0;
    const double bound = 2.0 * std::exp(-2.0 * t * t / p);
    std::mt19937_64 rng(23);
    int exceed = 0;
    const int trials = 4000;
    for (int trial = 0; trial < trials; ++trial) {
        double mu = 0;
        std::int64_t x = 0;
        for (int r = 0; r < p; ++r) {
            // weight with a nontrivial fractional part
            const std::int64_t v = 10 + static_cast<std::int64_t>(rng() % 90);
            const double vAvg = 7.3;
            mu += static_cast<double>(v) / vAvg;
            auto sample = weightedSample({{1, v}}, vAvg, rng);
            if (!sample.empty()) x += sample[0].count;
        }
        if (std::abs(static_cast<double>(x) - mu) >= t) ++exceed;
    }
    const double sigma = std::sqrt(bound * (1 - bound) * trials);
    CHECK(static_cast<double>(exceed) <= bound * trials + 3 * sigma + 1);
}

TEST_CASE("all weight on one key: always first, estimate within p * vAvg") {
    const int p = 8;
    std::vector<std::vector<CountedKey>> streams(p);
    for (int r = 0; r < p; ++r) streams[static_cast<std::size_t>(r)] = {{42, 10000}, {7, 3}};
    auto [results, ledger] = sim::runSpmd(p, 31, kCost, [&](sim::Comm& c) {
        return sumPacTopK(c, streams[static_cast<std::size_t>(c.rank())], 2, {0.05, 0.05});
    });
    const std::int64_t totalWeight = p * 10003;
    for (const auto& res : results) {
        REQUIRE(!res.topK.empty());
        CHECK(res.topK[0].key == 42);
        CHECK(std::abs(res.estimates[0] - static_cast<double>(p) * 10000.0) <
              static_cast<double>(p) * res.vAvg);
        CHECK(res.sampleTarget >= 1);
        CHECK(res.vAvg == static_cast<double>(totalWeight) / static_cast<double>(res.sampleTarget));
    }
}

TEST_CASE("sumPacTopK approximation error stays within budget almost always") {
    std::mt19937_64 rng(37);
    const int p = 8;
    const double eps = 0.02;
    int bad = 0;
    const int trials = 60;
    for (int trial = 0; trial < trials; ++trial) {
        auto streams = zipfWeighted(p, 64, 1.0, rng);
        auto [results, ledger] = sim::runSpmd(p, 7000 + static_cast<std::uint64_t>(trial), kCost, [&](sim::Comm& c) {
            return sumPacTopK(c, streams[static_cast<std::size_t>(c.rank())], 8, {eps, 0.05});
        });
        std::int64_t totalWeight = 0;
        for (const auto& s : streams)
            for (const auto& kv : s) totalWeight += kv.count;
        const std::int64_t err = oracle::sumErrorCount(streams, keysOf(results[0].topK));
        if (static_cast<double>(err) > eps * static_cast<double>(totalWeight)) ++bad;
    }
    CHECK(bad <= 8);  // delta = 0.05 plus generous slack
}

TEST_CASE("sumEcTopK reports exact fold-oracle sums") {
    std::mt19937_64 rng(41);
    const int p = 8;
    auto streams = zipfWeighted(p, 128, 1.0, rng);
    std::map<std::int64_t, std::int64_t> fold;
    for (const auto& s : streams)
        for (const auto& kv : s) fold[kv.key] += kv.count;
    auto [ecResults, ecLedger] = sim::runSpmd(p, 43, kCost, [&](sim::Comm& c) {
        return sumEcTopK(c, streams[static_cast<std::size_t>(c.rank())], 8, {1e-3, 0.05});
    });
    for (const auto& res : ecResults) {
        CHECK(res.topK == ecResults[0].topK);
        REQUIRE(res.topK.size() == 8);
        CHECK(res.kStarUsed >= 8);
        for (std::size_t i = 0; i < res.topK.size(); ++i) {
            CHECK(res.exactFlags[i]);
            CHECK(res.topK[i].count == fold[res.topK[i].key]);
        }
    }
}

TEST_CASE("sumEcTopK beats sumPac volume when sampling volume dominates") {
    // near-flat weights make every sample a distinct pair, and one PE holding
    // 80% of the weight makes each algorithm's bottleneck its sample volume;
    // the exact variant then profits from its smaller sample target.
    std::mt19937_64 rng(41);
    const int p = 16;
    std::vector<std::vector<CountedKey>> streams(p);
    const std::int64_t u = 1 << 18;
    for (std::int64_t i = 1; i <= u; ++i) {
        const std::int64_t w = i <= 16 ? 100000 : 20 + static_cast<std::int64_t>(rng() % 10);
        const int dst = rng() % 1000 < 800 ? 0 : static_cast<int>(rng() % static_cast<std::uint64_t>(p));
        streams[static_cast<std::size_t>(dst)].push_back({i, w});
    }
    const ErrorBudget tight{1e-3, 0.05};
    auto [ecResults, ecLedger] = sim::runSpmd(p, 43, kCost, [&](sim::Comm& c) {
        return sumEcTopK(c, streams[static_cast<std::size_t>(c.rank())], 8, tight);
    });
    auto [pacResults, pacLedger] = sim::runSpmd(p, 43, kCost, [&](sim::Comm& c) {
        return sumPacTopK(c, streams[static_cast<std::size_t>(c.rank())], 8, tight);
    });
    CHECK(ecLedger.bottleneckWords() < pacLedger.bottleneckWords());
    CHECK(ecResults[0].skewWarning);
    // the 16 heavy keys dominate; exact counting must find 8 of them
    for (const auto& kv : ecResults[0].topK) {
        CHECK(kv.key <= 16);
        CHECK(kv.count == 100000);
    }
}

TEST_CASE("doubling every weight doubles every estimate exactly") {
    std::mt19937_64 rng(47);
    const int p = 8;
    auto streams = zipfWeighted(p, 64, 1.0, rng);
    auto doubled = streams;
    for (auto& s : doubled)
        for (auto& kv : s) kv.count *= 2;
    auto run = [&](const std::vector<std::vector<CountedKey>>& data) {
        auto [results, ledger] = sim::runSpmd(p, 53, kCost, [&](sim::Comm& c) {
            return sumPacTopK(c, data[static_cast<std::size_t>(c.rank())], 8, {0.02, 0.05});
        });
        return results[0];
    };
    auto base = run(streams);
    auto twice = run(doubled);
    REQUIRE(base.topK.size() == twice.topK.size());
    CHECK(keysOf(base.topK) == keysOf(twice.topK));
    CHECK(twice.vAvg == 2.0 * base.vAvg);
    for (std::size_t i = 0; i < base.estimates.size(); ++i) CHECK(twice.estimates[i] == 2.0 * base.estimates[i]);
}

TEST_CASE("skewed local weight raises the warning flag; balanced input does not") {
    const int p = 8;
    std::vector<std::vector<CountedKey>> skewed(p), balanced(p);
    for (std::int64_t i = 0; i < 200; ++i) skewed[0].push_back({i, 50});
    for (int r = 0; r < p; ++r)
        for (std::int64_t i = 0; i < 25; ++i) balanced[static_cast<std::size_t>(r)].push_back({r * 25 + i, 50});
    auto [skewRes, l1] = sim::runSpmd(p, 59, kCost, [&](sim::Comm& c) {
        return sumPacTopK(c, skewed[static_cast<std::size_t>(c.rank())], 4, {0.05, 0.05});
    });
    auto [balRes, l2] = sim::runSpmd(p, 59, kCost, [&](sim::Comm& c) {
        return sumPacTopK(c, balanced[static_cast<std::size_t>(c.rank())], 4, {0.05, 0.05});
    });
    for (const auto& res : skewRes) CHECK(res.skewWarning);
    for (const auto& res : balRes) CHECK(!res.skewWarning);
}

TEST_CASE("zero total weight yields an empty result") {
    const int p = 4;
    auto [results, ledger] = sim::runSpmd(p, 61, kCost, [&](sim::Comm& c) {
        return sumPacTopK(c, std::vector<CountedKey>{{static_cast<std::int64_t>(c.rank()), 0}}, 3, {0.05, 0.05});
    });
    for (const auto& res : results) CHECK(res.topK.empty());
}

TEST_CASE("identical (program, p, seed) yields identical results and ledger") {
    std::mt19937_64 rng(67);
    const int p = 8;
    auto streams = zipfWeighted(p, 64, 1.0, rng);
    auto runOnce = [&] {
        return sim::runSpmd(p, 71, kCost, [&](sim::Comm& c) {
            return sumPacTopK(c, streams[static_cast<std::size_t>(c.rank())], 8, {0.02, 0.05});
        });
    };
    auto [r1, l1] = runOnce();
    auto [r2, l2] = runOnce();
    CHECK(l1 == l2);
    for (int i = 0; i < p; ++i) CHECK(r1[static_cast<std::size_t>(i)].topK == r2[static_cast<std::size_t>(i)].topK);
}
