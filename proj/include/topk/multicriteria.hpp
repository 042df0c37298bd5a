#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "topk/sim/comm.hpp"

namespace topk {

struct ScoredObject {
    std::int64_t objectId = 0;
    std::vector<double> scores;  // one per criterion
};

/// Monotone aggregation of the m per-criterion scores.
struct ScoringFn {
    std::string name;
    std::function<double(const std::vector<double>&)> fn;
    double operator()(const std::vector<double>& xs) const { return fn(xs); }
};

ScoringFn sumScore();
ScoringFn weightedSumScore(std::vector<double> weights);
ScoringFn minScore();

/// One PE's objects with per-criterion descending score lists and an
/// object index for local random accesses.
struct ScoreLists {
    int m = 0;
    std::vector<ScoredObject> objects;
    std::vector<std::vector<std::size_t>> lists;  // per criterion: object positions, score descending
    std::unordered_map<std::int64_t, std::size_t> index;

    static ScoreLists build(std::vector<ScoredObject> objs, int m);
    const ScoredObject& byId(std::int64_t id) const { return objects[index.at(id)]; }
};

struct TaResult {
    std::vector<std::int64_t> topK;  // descending by score, ties by objectId
    std::uint64_t scannedRows = 0;   // K: main-loop iterations
};

/// Sequential threshold algorithm over one PE's lists.
TaResult taReference(const ScoreLists& lists, const ScoringFn& t, std::uint64_t k);

struct RdtaResult {
    std::vector<std::int64_t> topK;
    int rounds = 0;
};

/// Exact distributed top-k assuming random object placement: local TA for
/// kBar candidates, global threshold verification, kBar doubling on failure.
RdtaResult rdtaTopK(sim::Comm& c, const ScoreLists& local, const ScoringFn& t, std::uint64_t k);

struct DtaScanResult {
    double tMin = 0;
    std::vector<std::vector<std::int64_t>> prefixes;  // per criterion: local object ids in the cut
    bool exhausted = false;
    int rounds = 0;
    std::uint64_t finalK = 0;
};

/// Approximate distributed scan: per-criterion amsSelect cuts at ranks
/// [K, 2K], K doubling until the estimated hit count reaches 2k. With
/// probeMultiK, each round evaluates the cuts for {K, 2K, 4K}.
DtaScanResult dtaScan(sim::Comm& c, const ScoreLists& local, const ScoringFn& t, std::uint64_t k,
                      bool probeMultiK = false);

/// Local hit-count estimate: per list, y samples with replacement; samples
/// already present in an earlier list are rejected, the rest count as hits
/// when their full score reaches tMin.
double hitEstimator(const ScoreLists& local, const std::vector<std::vector<std::int64_t>>& prefixes,
                    const ScoringFn& t, double tMin, int y, std::mt19937_64& rng);

struct DtaFinishResult {
    std::vector<std::int64_t> topK;  // on every PE, descending by score
    bool shortfall = false;          // fewer than k hits found
};

/// Deduplicates the prefixes, keeps hits, and extracts the exact top-k
/// among them by distributed selection.
DtaFinishResult dtaFinish(sim::Comm& c, const ScoreLists& local, const DtaScanResult& scan, const ScoringFn& t,
                          std::uint64_t k);

/// Plain-text instance format: header "m numObjects", then one line per
/// object: objectId owningPe score_1 .. score_m.
std::vector<std::vector<ScoredObject>> readInstance(std::istream& in);
void writeInstance(std::ostream& out, const std::vector<std::vector<ScoredObject>>& perPe, int m);

}  // namespace topk
