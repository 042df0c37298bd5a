#include "topk/multicriteria.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "topk/element.hpp"
#include "topk/selection.hpp"

namespace topk {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct IdScore {
    std::int64_t id = 0;
    double score = 0;
};

bool betterThan(const IdScore& a, const IdScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
}

}  // namespace

ScoringFn sumScore() {
    return {"sum", [](const std::vector<double>& xs) {
                double s = 0;
                for (double x : xs) s += x;
                return s;
            }};
}

ScoringFn weightedSumScore(std::vector<double> weights) {
    for (double w : weights)
        if (w < 0) throw std::invalid_argument("weightedSumScore: weights must be non-negative");
    return {"wsum", [w = std::move(weights)](const std::vector<double>& xs) {
                if (xs.size() != w.size()) throw std::invalid_argument("weightedSumScore: arity mismatch");
                double s = 0;
                for (std::size_t i = 0; i < xs.size(); ++i) s += w[i] * xs[i];
                return s;
            }};
}

ScoringFn minScore() {
    return {"min", [](const std::vector<double>& xs) {
                double s = std::numeric_limits<double>::infinity();
                for (double x : xs) s = std::min(s, x);
                return s;
            }};
}

ScoreLists ScoreLists::build(std::vector<ScoredObject> objs, int m) {
    if (m < 1) throw std::invalid_argument("ScoreLists: m must be >= 1");
    ScoreLists out;
    out.m = m;
    out.objects = std::move(objs);
    out.index.reserve(out.objects.size());
    for (std::size_t i = 0; i < out.objects.size(); ++i) {
        if (static_cast<int>(out.objects[i].scores.size()) != m)
            throw std::invalid_argument("ScoreLists: object with wrong score arity");
        if (!out.index.emplace(out.objects[i].objectId, i).second)
            throw std::invalid_argument("ScoreLists: duplicate objectId");
    }
    out.lists.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        auto& list = out.lists[static_cast<std::size_t>(i)];
        list.resize(out.objects.size());
        for (std::size_t j = 0; j < list.size(); ++j) list[j] = j;
        std::sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
            const double sa = out.objects[a].scores[static_cast<std::size_t>(i)];
            const double sb = out.objects[b].scores[static_cast<std::size_t>(i)];
            if (sa != sb) return sa > sb;
            return out.objects[a].objectId < out.objects[b].objectId;
        });
    }
    return out;
}

namespace {

struct LocalTa {
    std::vector<IdScore> top;  // descending, the kLocal most relevant
    double tau = kNegInf;      // threshold bound on unscanned objects
    bool exhausted = false;
    std::uint64_t scannedRows = 0;
};

LocalTa localTa(const ScoreLists& L, const ScoringFn& t, std::uint64_t k) {
    const std::uint64_t n = L.objects.size();
    LocalTa out;
    if (k == 0 || n == 0) {
        out.exhausted = n == 0;
        return out;
    }
    std::unordered_set<std::int64_t> seen;
    std::vector<IdScore> scored;
    std::vector<double> x(static_cast<std::size_t>(L.m), 0.0);
    for (std::uint64_t d = 0; d < n; ++d) {
        ++out.scannedRows;
        for (int i = 0; i < L.m; ++i) {
            const ScoredObject& o = L.objects[L.lists[static_cast<std::size_t>(i)][d]];
            x[static_cast<std::size_t>(i)] = o.scores[static_cast<std::size_t>(i)];
            if (seen.insert(o.objectId).second) scored.push_back({o.objectId, t(o.scores)});
        }
        out.tau = t(x);
        std::uint64_t atLeast = 0;
        for (const auto& s : scored) atLeast += s.score >= out.tau ? 1 : 0;
        if (atLeast >= k) {
            std::sort(scored.begin(), scored.end(), betterThan);
            scored.resize(k);
            out.top = std::move(scored);
            return out;
        }
    }
    out.exhausted = true;
    out.tau = kNegInf;
    std::sort(scored.begin(), scored.end(), betterThan);
    if (scored.size() > k) scored.resize(k);
    out.top = std::move(scored);
    return out;
}

}  // namespace

TaResult taReference(const ScoreLists& lists, const ScoringFn& t, std::uint64_t k) {
    if (k > lists.objects.size()) throw std::invalid_argument("taReference: k exceeds object count");
    LocalTa ta = localTa(lists, t, k);
    TaResult out;
    out.scannedRows = ta.scannedRows;
    out.topK.reserve(ta.top.size());
    for (const auto& s : ta.top) out.topK.push_back(s.id);
    return out;
}

RdtaResult rdtaTopK(sim::Comm& c, const ScoreLists& local, const ScoringFn& t, std::uint64_t k) {
    const std::uint64_t localN = local.objects.size();
    const std::uint64_t globalN = c.allReduceSum<std::uint64_t>(localN);
    if (k > globalN) throw std::invalid_argument("rdtaTopK: k exceeds global object count");
    RdtaResult res;
    if (k == 0) return res;
    std::uint64_t kBar = (k + static_cast<std::uint64_t>(c.numPes()) - 1) / static_cast<std::uint64_t>(c.numPes()) +
                         static_cast<std::uint64_t>(sim::ceilLog2(c.numPes()));
    bool active = true;
    LocalTa lt;
    double hiddenBound = kNegInf;  // upper bound on local objects not yet reported
    std::map<std::int64_t, double> candidates;
    while (true) {
        ++res.rounds;
        if (active) {
            lt = localTa(local, t, std::min<std::uint64_t>(kBar, localN));
            hiddenBound = localN > lt.top.size() ? lt.top.back().score : kNegInf;
        }
        auto blocks = c.allGather(lt.top);
        for (const auto& b : blocks)
            for (const auto& s : b) candidates[s.id] = s.score;
        const double tauMax = c.allReduceMax(hiddenBound);
        // strictly-above makes the check tie-safe: hidden objects may equal
        // tauMax and win the id tie-break
        std::uint64_t above = 0;
        for (const auto& kv : candidates) above += kv.second > tauMax ? 1 : 0;
        if (above >= k || tauMax == kNegInf) break;
        std::vector<IdScore> ranked;
        ranked.reserve(candidates.size());
        for (const auto& kv : candidates) ranked.push_back({kv.first, kv.second});
        std::sort(ranked.begin(), ranked.end(), betterThan);
        const double kthBest = ranked.size() >= k ? ranked[k - 1].score : kNegInf;
        if (hiddenBound < kthBest) active = false;  // nothing hidden here can matter
        kBar *= 2;
    }
    std::vector<IdScore> ranked;
    ranked.reserve(candidates.size());
    for (const auto& kv : candidates) ranked.push_back({kv.first, kv.second});
    std::sort(ranked.begin(), ranked.end(), betterThan);
    ranked.resize(std::min<std::size_t>(ranked.size(), k));
    for (const auto& s : ranked) res.topK.push_back(s.id);
    return res;
}

double hitEstimator(const ScoreLists& local, const std::vector<std::vector<std::int64_t>>& prefixes,
                    const ScoringFn& t, double tMin, int y, std::mt19937_64& rng) {
    if (y < 1) throw std::invalid_argument("hitEstimator: y must be >= 1");
    std::vector<std::unordered_set<std::int64_t>> membership(prefixes.size());
    for (std::size_t i = 0; i < prefixes.size(); ++i)
        membership[i] = std::unordered_set<std::int64_t>(prefixes[i].begin(), prefixes[i].end());
    double total = 0;
    for (std::size_t i = 0; i < prefixes.size(); ++i) {
        const auto& cut = prefixes[i];
        if (cut.empty()) continue;
        int rejected = 0, hits = 0;
        for (int s = 0; s < y; ++s) {
            const std::int64_t id = cut[rng() % cut.size()];
            bool dup = false;
            for (std::size_t j = 0; j < i && !dup; ++j) dup = membership[j].count(id) > 0;
            if (dup) {
                ++rejected;
            } else if (t(local.byId(id).scores) >= tMin) {
                ++hits;
            }
        }
        const double dy = static_cast<double>(y);
        total += static_cast<double>(cut.size()) * (1.0 - rejected / dy) * (hits / dy);
    }
    return total;
}

DtaScanResult dtaScan(sim::Comm& c, const ScoreLists& local, const ScoringFn& t, std::uint64_t k, bool probeMultiK) {
    const int m = local.m;
    const std::uint64_t localN = local.objects.size();
    const std::uint64_t N = c.allReduceSum<std::uint64_t>(localN);
    if (k < 1 || k > N) throw std::invalid_argument("dtaScan: need 1 <= k <= global object count");
    // descending score lists as ascending negated-key runs for the selector
    std::vector<std::vector<Element>> asc(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        auto& run = asc[static_cast<std::size_t>(i)];
        run.reserve(localN);
        for (std::size_t r = 0; r < localN; ++r) {
            const auto& o = local.objects[local.lists[static_cast<std::size_t>(i)][r]];
            run.push_back(Element{-o.scores[static_cast<std::size_t>(i)], static_cast<std::uint32_t>(c.rank()),
                                  static_cast<std::uint64_t>(r)});
        }
    }
    DtaScanResult res;
    std::uint64_t K = std::max<std::uint64_t>(
        1, (k + static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(c.numPes()) - 1) /
               (static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(c.numPes())));
    while (true) {
        ++res.rounds;
        const int probes = probeMultiK ? 3 : 1;
        bool done = false;
        for (int pr = 0; pr < probes && !done; ++pr) {
            const std::uint64_t Kp = K << pr;
            const std::uint64_t kLo = std::min<std::uint64_t>(Kp, N);
            const std::uint64_t kHi = std::min<std::uint64_t>(2 * Kp, N);
            res.prefixes.assign(static_cast<std::size_t>(m), {});
            std::vector<double> x(static_cast<std::size_t>(m));
            for (int i = 0; i < m; ++i) {
                VectorRunView view(asc[static_cast<std::size_t>(i)]);
                AmsResult sel = amsSelect(c, view, kLo, kHi, N);
                auto& cut = res.prefixes[static_cast<std::size_t>(i)];
                cut.reserve(sel.prefixLen);
                for (std::uint64_t r = 0; r < sel.prefixLen; ++r)
                    cut.push_back(local.objects[local.lists[static_cast<std::size_t>(i)][r]].objectId);
                const double lastKey =
                    sel.prefixLen > 0 ? asc[static_cast<std::size_t>(i)][sel.prefixLen - 1].key : kNegInf;
                x[static_cast<std::size_t>(i)] = -c.allReduceMax(lastKey);
            }
            res.tMin = t(x);
            res.finalK = Kp;
            const int y = std::max(8, static_cast<int>(std::ceil(2.0 * std::log2(static_cast<double>(Kp) + 2.0))));
            const double mine = hitEstimator(local, res.prefixes, t, res.tMin, y, c.rng());
            const double H = c.allReduceSum(mine);
            if (H >= 2.0 * static_cast<double>(k)) {
                done = true;
            } else if (2 * Kp >= N) {
                res.exhausted = true;  // cuts already cover the full lists
                done = true;
            }
        }
        if (done) return res;
        K *= probeMultiK ? 8 : 2;
    }
}

DtaFinishResult dtaFinish(sim::Comm& c, const ScoreLists& local, const DtaScanResult& scan, const ScoringFn& t,
                          std::uint64_t k) {
    // deduplicate the local cuts, keep objects whose full score is a hit
    std::set<std::int64_t> ids;
    for (const auto& cut : scan.prefixes) ids.insert(cut.begin(), cut.end());
    std::vector<IdScore> hits;
    for (std::int64_t id : ids) {
        const double s = t(local.byId(id).scores);
        if (s >= scan.tMin) hits.push_back({id, s});
    }
    std::vector<Element> elems;
    elems.reserve(hits.size());
    for (std::size_t i = 0; i < hits.size(); ++i)
        elems.push_back(Element{-hits[i].score, static_cast<std::uint32_t>(c.rank()), static_cast<std::uint64_t>(i)});
    const std::uint64_t totalHits = c.allReduceSum<std::uint64_t>(hits.size());
    DtaFinishResult res;
    res.shortfall = totalHits < k;
    const std::uint64_t take = std::min<std::uint64_t>(k, totalHits);
    auto mine = selectUnsorted(c, elems, take);
    std::vector<IdScore> share;
    share.reserve(mine.size());
    for (const auto& e : mine) share.push_back(hits[e.idx]);
    auto blocks = c.allGather(std::move(share));
    std::vector<IdScore> ranked;
    for (const auto& b : blocks) ranked.insert(ranked.end(), b.begin(), b.end());
    std::sort(ranked.begin(), ranked.end(), betterThan);
    for (const auto& s : ranked) res.topK.push_back(s.id);
    return res;
}

std::vector<std::vector<ScoredObject>> readInstance(std::istream& in) {
    int m = 0;
    std::uint64_t count = 0;
    if (!(in >> m >> count)) throw std::invalid_argument("instance: bad header");
    if (m < 1) throw std::invalid_argument("instance: m must be >= 1");
    std::vector<std::vector<ScoredObject>> perPe;
    for (std::uint64_t i = 0; i < count; ++i) {
        std::int64_t id = 0;
        int pe = 0;
        if (!(in >> id >> pe) || pe < 0) throw std::invalid_argument("instance: bad object line");
        ScoredObject o;
        o.objectId = id;
        o.scores.resize(static_cast<std::size_t>(m));
        for (auto& s : o.scores)
            if (!(in >> s)) throw std::invalid_argument("instance: bad score");
        if (static_cast<std::size_t>(pe) >= perPe.size()) perPe.resize(static_cast<std::size_t>(pe) + 1);
        perPe[static_cast<std::size_t>(pe)].push_back(std::move(o));
    }
    return perPe;
}

void writeInstance(std::ostream& out, const std::vector<std::vector<ScoredObject>>& perPe, int m) {
    std::uint64_t count = 0;
    for (const auto& v : perPe) count += v.size();
    out << m << ' ' << count << '\n';
    for (std::size_t pe = 0; pe < perPe.size(); ++pe)
        for (const auto& o : perPe[pe]) {
            out << o.objectId << ' ' << pe;
            for (double s : o.scores) out << ' ' << s;
            out << '\n';
        }
}

}  // namespace topk
