// relisim: run crude / importance-sampling reliability campaigns from a JSON config.
//
// Exit codes: 0 success, 1 other failure, 2 configuration error, 3 divergence abort.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "relisim/error.hpp"
#include "relisim/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

unsigned default_workers() {
    if (const char* env = std::getenv("RELISIM_WORKERS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
        std::cerr << "relisim: ignoring invalid RELISIM_WORKERS='" << env << "'\n";
    }
    return 1;
}

void print_summary(const relisim::RunArtifact& artifact) {
    for (const auto& run : artifact.runs) {
        const auto& r = run.result.report;
        std::printf("%-10s %-8s P_F=%.6g  P_S=%.6g  stderr=%.3g  M=%zu  excluded=%zu\n", relisim::to_string(r.mode),
                    relisim::to_string(r.topology), r.failure, r.reliability, r.std_error, r.sample_count, r.excluded);
        if (run.result.martingale) {
            const auto& mc = *run.result.martingale;
            std::printf("           weight mean=%.6g  z=%.3f  %s\n", mc.mean, mc.z, mc.pass ? "ok" : "CHECK FAILED");
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-variant reliability estimation for stochastic delay systems"};

    std::string config_path;
    relisim::Overrides overrides;
    unsigned workers = default_workers();
    std::size_t dump = 0;
    bool quiet = false;

    app.add_option("--config", config_path, "Experiment configuration (JSON)")->required();
    app.add_option("--seed", overrides.seed, "Master seed (overrides the config)");
    app.add_option("--samples", overrides.samples, "Samples per campaign (overrides the config)")
        ->check(CLI::PositiveNumber);
    app.add_option("--mode", overrides.mode, "Campaigns to run")->check(CLI::IsMember({"crude", "importance", "both"}));
    app.add_option("--out", overrides.out_dir, "Output directory (overrides the config)");
    app.add_option("--workers", workers, "Worker threads (default: $RELISIM_WORKERS or 1)")->check(CLI::PositiveNumber);
    app.add_option("--dump-trajectories", dump, "Write the first N trajectories of each campaign");
    app.add_flag("-q,--quiet", quiet, "Do not print the summary");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    relisim::ExperimentConfig config;
    try {
        config = relisim::load_config(config_path, overrides);
    } catch (const relisim::ConfigError& e) {
        std::cerr << "relisim: config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const relisim::DomainError& e) {
        std::cerr << "relisim: config error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        const auto artifact = relisim::run_experiment(config, workers);
        relisim::emit_report(artifact, config.formats, config.out_dir);
        relisim::emit_diagnostics(artifact, config.out_dir);
        if (dump > 0) relisim::dump_trajectories(config, dump, config.out_dir);
        if (!quiet) print_summary(artifact);
        if (artifact.aborted) {
            std::cerr << "relisim: campaign aborted: " << *artifact.aborted << "\n";
            return kExitDivergence;
        }
    } catch (const relisim::StepError& e) {
        std::cerr << "relisim: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "relisim: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
