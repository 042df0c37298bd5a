#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace topk {

/// Relative error bound eps and failure probability delta of an
/// (eps, delta)-approximation; the absolute error bound is eps * n.
struct ErrorBudget {
    double eps;
    double delta;
};

struct SamplePlan {
    double rho = 1.0;                // sampling probability, clamped to (0, 1]
    double expectedSampleSize = 0;   // rho * n before clamping
    std::int64_t kStar = 0;          // exact-count cutoff (EC/PEC plans)
    bool fullScan = false;           // rho had to be clamped to 1
};

void validate(const ErrorBudget& b);

/// Uniform deviate in the open interval (0,1).
double uniformUnitOpen(std::mt19937_64& rng);

/// Geometric deviate X >= 1 with P(X = i) = (1-q)^(i-1) * q, by inverse
/// transform in constant time.
std::uint64_t geometricDeviate(double q, std::mt19937_64& rng);

/// Indices of a Bernoulli(rho) sample of 0..localSize-1, ascending, in time
/// proportional to the output size (geometric skip values).
std::vector<std::uint64_t> bernoulliSkipSample(std::uint64_t localSize, double rho, std::mt19937_64& rng);

/// Sample size for the sampling-only top-k frequency approximation:
/// rho*n = (4/eps^2) * max((3/k) ln(4n/delta), 2 ln(2k/delta)).
SamplePlan pacSampleSize(std::uint64_t n, std::int64_t k, const ErrorBudget& budget);

/// Plan for sampling followed by exact counting of the kStar most sampled
/// keys: kStar = max(k, (1/eps) sqrt((2 log2 p / p) ln(n/delta))) and
/// rho*n = (2 / (eps^2 kStar)) ln(n/delta).
SamplePlan ecPlan(std::uint64_t n, std::int64_t k, int p, const ErrorBudget& budget);

/// Sample-count threshold t such that exactly counting every sample key with
/// count >= t keeps the true top-k with probability >= 1-delta. Uses the
/// high-probability lower bound E[sHatK] >= sHatK - sqrt(2 sHatK ln(1/delta))
/// before applying the gap criterion. Returns 0 ("count everything sampled")
/// when the bound is non-positive.
double pecKStarThreshold(double sHatK, std::int64_t k, double delta);

struct ZipfPlan {
    double rho = 1.0;
    double expectedKStar = 0;
    bool fullScan = false;
};

/// For Zipf(s) inputs: rho = (4/x_k) ln(k/delta) with x_k = n k^-s / H_{n,s};
/// the expected exact-count cutoff is k * (2 + sqrt 2)^(1/s).
ZipfPlan zipfPlan(std::uint64_t n, std::int64_t k, double s, double delta);

/// Generalized harmonic number H_{n,s} = sum_{i=1..n} i^-s.
double generalizedHarmonic(std::uint64_t n, double s);

/// Number of samples contributed by an aggregated count v with expected
/// count-per-sample vAvg: floor(v/vAvg) plus a Bernoulli(frac(v/vAvg)) extra.
/// Always within 1 of v/vAvg.
std::int64_t weightedSampleCount(double v, double vAvg, std::mt19937_64& rng);

}  // namespace topk
