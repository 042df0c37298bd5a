#include "topk/sampling.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace topk {

void validate(const ErrorBudget& b) {
    if (!(b.eps > 0)) throw std::invalid_argument("ErrorBudget: eps must be > 0");
    if (!(b.delta > 0 && b.delta < 1)) throw std::invalid_argument("ErrorBudget: delta must be in (0,1)");
}

double uniformUnitOpen(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

namespace {

SamplePlan clampPlan(double rhoN, std::uint64_t n) {
    SamplePlan plan;
    plan.expectedSampleSize = rhoN;
    double rho = rhoN / static_cast<double>(n);
    if (rho >= 1.0) {
        plan.rho = 1.0;
        plan.fullScan = true;
    } else {
        plan.rho = rho;
    }
    return plan;
}

}  // namespace

std::uint64_t geometricDeviate(double q, std::mt19937_64& rng) {
    if (!(q > 0.0) || q > 1.0) throw std::invalid_argument("geometricDeviate: q must be in (0,1]");
    if (q == 1.0) return 1;
    double u = uniformUnitOpen(rng);
    double x = std::floor(std::log(u) / std::log1p(-q));
    if (x >= 9.2e18) return std::numeric_limits<std::uint64_t>::max();
    return 1 + static_cast<std::uint64_t>(x);
}

std::vector<std::uint64_t> bernoulliSkipSample(std::uint64_t localSize, double rho, std::mt19937_64& rng) {
    if (!(rho > 0.0) || rho > 1.0) throw std::invalid_argument("bernoulliSkipSample: rho must be in (0,1]");
    std::vector<std::uint64_t> out;
    if (localSize == 0) return out;
    if (rho == 1.0) {
        out.resize(localSize);
        for (std::uint64_t i = 0; i < localSize; ++i) out[i] = i;
        return out;
    }
    std::uint64_t pos = 0;
    while (true) {
        std::uint64_t skip = geometricDeviate(rho, rng);
        if (localSize - pos < skip) break;  // overflow-safe bounds check
        pos += skip;
        out.push_back(pos - 1);
        if (pos == localSize) break;
    }
    return out;
}

SamplePlan pacSampleSize(std::uint64_t n, std::int64_t k, const ErrorBudget& budget) {
    validate(budget);
    if (k < 1 || static_cast<std::uint64_t>(k) > n) throw std::invalid_argument("pacSampleSize: need n >= k >= 1");
    const double eps = budget.eps, delta = budget.delta;
    const double dn = static_cast<double>(n), dk = static_cast<double>(k);
    double rhoN = 4.0 / (eps * eps) *
                  std::max(3.0 / dk * std::log(4.0 * dn / delta), 2.0 * std::log(2.0 * dk / delta));
    return clampPlan(rhoN, n);
}

SamplePlan ecPlan(std::uint64_t n, std::int64_t k, int p, const ErrorBudget& budget) {
    validate(budget);
    if (k < 1 || static_cast<std::uint64_t>(k) > n) throw std::invalid_argument("ecPlan: need n >= k >= 1");
    if (p < 1) throw std::invalid_argument("ecPlan: p must be >= 1");
    const double eps = budget.eps, delta = budget.delta;
    const double dn = static_cast<double>(n);
    const double log2p = std::log2(static_cast<double>(p));
    double root = 1.0 / eps * std::sqrt(2.0 * log2p / static_cast<double>(p) * std::log(dn / delta));
    SamplePlan plan;
    std::int64_t kStar = std::max<std::int64_t>(k, static_cast<std::int64_t>(std::ceil(root)));
    double rhoN = 2.0 / (eps * eps * static_cast<double>(kStar)) * std::log(dn / delta);
    plan = clampPlan(rhoN, n);
    plan.kStar = kStar;
    return plan;
}

double pecKStarThreshold(double sHatK, std::int64_t k, double delta) {
    if (sHatK < 0) throw std::invalid_argument("pecKStarThreshold: sHatK must be >= 0");
    if (sHatK == 0) return 0.0;
    double expLower = sHatK - std::sqrt(2.0 * sHatK * std::log(1.0 / delta));
    if (expLower <= 0) return 0.0;
    double t = expLower - std::sqrt(2.0 * expLower * std::log(static_cast<double>(k) / delta));
    return t > 0 ? t : 0.0;
}

double generalizedHarmonic(std::uint64_t n, double s) {
    double h = 0.0;
    for (std::uint64_t i = n; i >= 1; --i) h += std::pow(static_cast<double>(i), -s);
    return h;
}

ZipfPlan zipfPlan(std::uint64_t n, std::int64_t k, double s, double delta) {
    if (!(s > 0)) throw std::invalid_argument("zipfPlan: s must be > 0");
    if (k < 1 || static_cast<std::uint64_t>(k) > n) throw std::invalid_argument("zipfPlan: need n >= k >= 1");
    const double xk = static_cast<double>(n) * std::pow(static_cast<double>(k), -s) / generalizedHarmonic(n, s);
    ZipfPlan plan;
    plan.expectedKStar = static_cast<double>(k) * std::pow(2.0 + std::sqrt(2.0), 1.0 / s);
    double rho = 4.0 / xk * std::log(static_cast<double>(k) / delta);
    if (rho >= 1.0) {
        plan.rho = 1.0;
        plan.fullScan = true;
    } else {
        plan.rho = rho;
    }
    return plan;
}

std::int64_t weightedSampleCount(double v, double vAvg, std::mt19937_64& rng) {
    if (!(vAvg > 0)) throw std::invalid_argument("weightedSampleCount: vAvg must be > 0");
    if (v < 0) throw std::invalid_argument("weightedSampleCount: v must be >= 0");
    double q = v / vAvg;
    double base = std::floor(q);
    double frac = q - base;
    std::int64_t count = static_cast<std::int64_t>(base);
    if (frac > 0 && uniformUnitOpen(rng) < frac) ++count;
    return count;
}

}  // namespace topk
