#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace topk::harness {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};
class InvariantError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Distribution {
    enum class Kind { Zipf, NegativeBinomial, Uniform, FromFile };
    Kind kind = Kind::Zipf;
    double s = 1.0;               // zipf exponent
    std::int64_t u = 1 << 20;     // universe size (zipf, uniform)
    std::int64_t r = 1000;        // negative binomial successes
    double q = 0.05;              // negative binomial success probability
    std::string path;             // fromFile source
};

/// "zipf:s=1.0,u=1048576", "negativeBinomial:r=1000,q=0.05", "uniform:u=4096",
/// "fromFile:path=..."; omitted parameters keep their defaults.
Distribution parseDistribution(const std::string& spec);

enum class Placement { Uniform, Skewed, PerPeRandomParams };
Placement parsePlacement(const std::string& name);

/// Constant-time discrete sampling over fixed weights.
class AliasTable {
  public:
    explicit AliasTable(const std::vector<double>& weights);
    std::size_t sample(std::mt19937_64& rng) const;

  private:
    std::vector<double> accept_;
    std::vector<std::size_t> alias_;
};

/// Per-PE key streams, deterministic per seed. Uniform placement draws each
/// PE's stream independently; skewed deals the globally sorted draw into
/// contiguous blocks; perPeRandomParams re-draws each PE's universe and
/// exponent (Zipf only).
std::vector<std::vector<std::int64_t>> generate(const Distribution& dist, int p, std::int64_t nPerPe,
                                                Placement placement, std::uint64_t seed);

struct ExperimentConfig {
    std::string algo = "pac";
    int p = 8;
    std::int64_t nPerPe = 1 << 10;
    std::int64_t k = 8;
    double eps = 0.01;
    double delta = 0.05;
    Distribution dist;
    Placement placement = Placement::Uniform;
    std::uint64_t seed = 1;
    int trials = 1;
    std::string out;
};

/// Line-based key=value config; '#' starts a comment.
ExperimentConfig parseConfigFile(const std::string& path);

struct ExperimentRow {
    std::string algo;
    int p = 0;
    std::int64_t nPerPe = 0;
    std::int64_t k = 0;
    double eps = 0;
    double delta = 0;
    std::uint64_t seed = 0;
    int trial = 0;
    std::uint64_t startups = 0;
    std::uint64_t bottleneckWords = 0;
    std::uint64_t totalWords = 0;
    double absError = 0;
    double relError = 0;
    bool correct = false;
    std::uint64_t rounds = 0;
    std::string flags = "-";

    static std::string header();
    std::string toCsv() const;
};

/// One row per trial. Throws ConfigError for unknown algorithms or invalid
/// parameters, InvariantError when a hard postcondition fails mid-run.
std::vector<ExperimentRow> runExperiment(const ExperimentConfig& cfg);

/// Appends rows to the file at cfg.out (or stdout when empty), writing the
/// header when the file does not exist yet.
void writeCsv(const ExperimentConfig& cfg, const std::vector<ExperimentRow>& rows);

}  // namespace topk::harness
