#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "relisim/dynamics.hpp"
#include "relisim/estimators.hpp"
#include "relisim/girsanov.hpp"
#include "relisim/limit_state.hpp"

namespace relisim {

/// One Monte Carlo campaign: M trajectories of one model under one measure.
struct CampaignSettings {
    IntegratorConfig integrator;
    EstimatorMode mode = EstimatorMode::crude;
    std::size_t samples = 1000;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    Quantity report_as = Quantity::failure;
    /// Campaigns abort when more than this fraction of trajectories diverge.
    double max_excluded_fraction = 0.01;
};

struct CampaignResult {
    EstimateReport report;
    /// Kept trajectories only, in index order.
    IndicatorMatrix components;
    std::vector<std::uint8_t> system;
    std::vector<double> weights;  // importance campaigns only
    std::vector<std::size_t> excluded_indices;
    std::optional<MartingaleCheck> martingale;
    double wall_seconds = 0.0;
};

/**
 * Runs trajectories 0..M-1, trajectory j driven by the Gaussian stream (seed, j).
 *
 * Work is split across `workers` threads but each trajectory's record is written
 * to its own slot and reduced in index order, so results do not depend on the
 * worker count. Throws DivergenceAbort past the exclusion limit.
 */
CampaignResult run_campaign(const SystemModel& model, const InitialSegment& initial, const SystemTopology& topology,
                            const CampaignSettings& settings);

}  // namespace relisim
