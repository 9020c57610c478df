#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "relisim/campaign.hpp"

namespace relisim {

enum class ReportFormat { csv, jsonl };

/// Command-line overrides applied on top of a configuration file.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    std::optional<std::string> mode;  // crude | importance | both
    std::optional<std::string> out_dir;
};

/**
 * A validated experiment: model, history, integrator, topology and campaign plan.
 *
 * `resolved` is the configuration with every default filled in; it is what the
 * manifest echoes and parsing it again yields the same experiment.
 */
struct ExperimentConfig {
    nlohmann::ordered_json resolved;
    std::string name;
    // Owned through shared_ptr so control functionals can refer to the topology.
    std::shared_ptr<SystemTopology> topology;
    std::shared_ptr<SystemModel> model;
    std::optional<InitialSegment> initial;
    IntegratorConfig integrator;
    std::vector<EstimatorMode> campaigns;
    std::size_t crude_samples = 0;
    std::size_t importance_samples = 0;
    std::uint64_t seed = 0;
    Quantity report_as = Quantity::failure;
    std::filesystem::path out_dir = "relisim-out";
    std::vector<ReportFormat> formats;

    std::string manifest_id() const;
};

/// Parses and validates a configuration; ConfigError names the line (syntax) or field path.
ExperimentConfig parse_config(const std::string& text, const Overrides& overrides = {});
ExperimentConfig parse_config(const nlohmann::ordered_json& document, const Overrides& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {});

struct CampaignRun {
    EstimatorMode mode;
    CampaignResult result;
};

struct RunArtifact {
    std::string manifest_id;
    nlohmann::ordered_json manifest;
    std::vector<CampaignRun> runs;
    /// Set when a campaign hit the divergence limit; later campaigns were not run.
    std::optional<std::string> aborted;
    double wall_seconds = 0.0;
};

/// Runs every requested campaign in order, stopping at the first divergence abort.
RunArtifact run_experiment(const ExperimentConfig& config, unsigned workers = 1);

/// One report row, fixed field order, reals printed with 17 significant digits.
std::string report_csv_header();
std::string report_csv_row(const std::string& manifest_id, const EstimateReport& report);
std::string report_json_line(const std::string& manifest_id, const EstimateReport& report);

/// Writes manifest.json, and reports.csv / reports.jsonl per requested format, into `dir`.
/// Returns the files written. Throws IoError when the directory cannot be written.
std::vector<std::filesystem::path> emit_report(const RunArtifact& artifact, const std::vector<ReportFormat>& formats,
                                               const std::filesystem::path& dir);

/// Non-deterministic run facts (wall time, martingale z-scores, exclusions) as diagnostics.json.
std::filesystem::path emit_diagnostics(const RunArtifact& artifact, const std::filesystem::path& dir);

/// Re-simulates trajectories 0..count-1 of each campaign and writes trajectories_<mode>.csv.
std::vector<std::filesystem::path> dump_trajectories(const ExperimentConfig& config, std::size_t count,
                                                     const std::filesystem::path& dir);

/// Formats a real with 17 significant digits.
std::string format_real(double v);

}  // namespace relisim
