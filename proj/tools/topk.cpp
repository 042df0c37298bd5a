#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "topk/harness.hpp"

namespace {

using topk::harness::ConfigError;
using topk::harness::ExperimentConfig;
using topk::harness::InvariantError;

struct CliOverrides {
    std::string config;
    std::string algo, dist, placement, out, pes;
    std::int64_t nPerPe = 0, k = 0;
    double eps = 0, delta = 0;
    std::uint64_t seed = 0;
    int trials = 0;
};

void addCommon(CLI::App* cmd, CliOverrides& o) {
    cmd->add_option("--config", o.config, "key=value config file; flags override it");
    cmd->add_option("--algo", o.algo, "algorithm name");
    cmd->add_option("--pes", o.pes, "simulated PE count (sweep: comma-separated list)");
    cmd->add_option("--n-per-pe", o.nPerPe, "local input size");
    cmd->add_option("--k", o.k, "output size");
    cmd->add_option("--eps", o.eps, "relative error bound");
    cmd->add_option("--delta", o.delta, "failure probability");
    cmd->add_option("--dist", o.dist, "input distribution, e.g. zipf:s=1.0,u=1048576");
    cmd->add_option("--placement", o.placement, "uniform | skewed | perPeRandomParams");
    cmd->add_option("--seed", o.seed, "base random seed");
    cmd->add_option("--trials", o.trials, "trials per configuration");
    cmd->add_option("--out", o.out, "output file (CSV for run/sweep); stdout when omitted");
}

std::vector<int> parsePeList(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t pos = 0;
        const long v = std::stol(item, &pos);
        if (pos != item.size() || v < 1) throw ConfigError("invalid PE count '" + item + "'");
        out.push_back(static_cast<int>(v));
    }
    if (out.empty()) throw ConfigError("empty PE list");
    return out;
}

ExperimentConfig buildConfig(const CLI::App* cmd, const CliOverrides& o) {
    ExperimentConfig cfg;
    if (cmd->count("--config")) cfg = topk::harness::parseConfigFile(o.config);
    if (cmd->count("--algo")) cfg.algo = o.algo;
    if (cmd->count("--pes")) cfg.p = parsePeList(o.pes)[0];
    if (cmd->count("--n-per-pe")) cfg.nPerPe = o.nPerPe;
    if (cmd->count("--k")) cfg.k = o.k;
    if (cmd->count("--eps")) cfg.eps = o.eps;
    if (cmd->count("--delta")) cfg.delta = o.delta;
    if (cmd->count("--dist")) cfg.dist = topk::harness::parseDistribution(o.dist);
    if (cmd->count("--placement")) cfg.placement = topk::harness::parsePlacement(o.placement);
    if (cmd->count("--seed")) cfg.seed = o.seed;
    if (cmd->count("--trials")) cfg.trials = o.trials;
    if (cmd->count("--out")) cfg.out = o.out;
    return cfg;
}

// round-robin layout: reloading with fromFile and the same PE count
// reproduces the per-PE streams
void emitStreams(std::ostream& os, const std::vector<std::vector<std::int64_t>>& data) {
    std::size_t maxLen = 0;
    for (const auto& s : data) maxLen = std::max(maxLen, s.size());
    for (std::size_t i = 0; i < maxLen; ++i)
        for (const auto& s : data)
            if (i < s.size()) os << s[i] << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"communication-efficient top-k: generators and experiment runner"};
    app.require_subcommand(1);
    CliOverrides o;
    CLI::App* gen = app.add_subcommand("gen", "write a generated input to a file");
    CLI::App* run = app.add_subcommand("run", "run one configuration, append CSV rows");
    CLI::App* sweep = app.add_subcommand("sweep", "run one configuration per PE count in --pes");
    addCommon(gen, o);
    addCommon(run, o);
    addCommon(sweep, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const CLI::App* cmd = app.get_subcommands().front();
        ExperimentConfig cfg = buildConfig(cmd, o);
        if (cmd == gen) {
            auto data = topk::harness::generate(cfg.dist, cfg.p, cfg.nPerPe, cfg.placement, cfg.seed);
            if (cfg.out.empty()) {
                emitStreams(std::cout, data);
            } else {
                std::ofstream out(cfg.out);
                if (!out) throw ConfigError("cannot open output file '" + cfg.out + "'");
                emitStreams(out, data);
            }
        } else if (cmd == run) {
            topk::harness::writeCsv(cfg, topk::harness::runExperiment(cfg));
        } else {
            std::vector<int> pes = cmd->count("--pes") ? parsePeList(o.pes) : std::vector<int>{cfg.p};
            for (int p : pes) {
                cfg.p = p;
                topk::harness::writeCsv(cfg, topk::harness::runExperiment(cfg));
            }
        }
    } catch (const InvariantError& e) {
        std::cerr << "invariant violation: " << e.what() << '\n';
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "invariant violation: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
