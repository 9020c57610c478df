#include "relisim/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

#include "relisim/error.hpp"

namespace relisim {

namespace {

constexpr std::size_t kChunk = 256;

struct Slots {
    std::vector<std::uint8_t> diverged;
    std::vector<std::uint8_t> failed;  // M x K
    std::vector<double> weight;
};

void simulate_range(const SystemModel& model, const InitialSegment& initial, const SystemTopology& topology,
                    const CampaignSettings& settings, std::span<const double> prehistory, std::atomic<std::size_t>& next,
                    std::atomic<bool>& stop, Slots& slots) {
    const bool controlled = settings.mode == EstimatorMode::importance;
    const std::size_t k_count = topology.components.size();
    EulerMaruyama integrator(model, settings.integrator, initial);
    FailureTracker tracker(topology, prehistory);
    BrownianIncrements noise;
    const auto observer = [&](double t, std::span<const double> x) { tracker.observe(x, t); };

    while (!stop.load(std::memory_order_relaxed)) {
        const std::size_t begin = next.fetch_add(kChunk);
        if (begin >= settings.samples) break;
        const std::size_t end = std::min(begin + kChunk, settings.samples);
        for (std::size_t j = begin; j < end; ++j) {
            fill_gaussian_increments({settings.seed, j, model.m, settings.integrator.step}, integrator.steps(), noise);
            tracker.reset();
            const auto outcome = integrator.run(noise, controlled, observer);
            if (outcome.diverged) {
                slots.diverged[j] = 1;
                continue;
            }
            const auto rec = tracker.record();
            std::copy(rec.component_failed.begin(), rec.component_failed.end(),
                      slots.failed.begin() + static_cast<std::ptrdiff_t>(j * k_count));
            if (controlled) slots.weight[j] = outcome.weight.ratio();
        }
    }
}

}  // namespace

CampaignResult run_campaign(const SystemModel& model, const InitialSegment& initial, const SystemTopology& topology,
                            const CampaignSettings& settings) {
    const auto started = std::chrono::steady_clock::now();
    topology.validate();
    settings.integrator.validate();
    if (settings.samples == 0) throw DomainError("campaign needs at least one sample");
    if (settings.mode == EstimatorMode::importance && !model.has_control())
        throw DomainError("importance sampling campaign needs a control");

    const std::size_t k_count = topology.components.size();
    const double horizon = resolve_memory_horizon(model, settings.integrator);
    std::vector<double> prehistory(k_count);
    for (std::size_t k = 0; k < k_count; ++k)
        prehistory[k] = prehistory_max(initial, topology.components[k], settings.integrator.step, horizon);

    Slots slots;
    slots.diverged.assign(settings.samples, 0);
    slots.failed.assign(settings.samples * k_count, 0);
    slots.weight.assign(settings.mode == EstimatorMode::importance ? settings.samples : 0, 0.0);

    const unsigned workers = std::max(1u, std::min<unsigned>(settings.workers,
                                                             static_cast<unsigned>((settings.samples + kChunk - 1) / kChunk)));
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        try {
            simulate_range(model, initial, topology, settings, prehistory, next, stop, slots);
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            stop = true;
        }
    };
    if (workers == 1) {
        body();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
    }
    if (error) std::rethrow_exception(error);

    CampaignResult result;
    for (std::size_t j = 0; j < settings.samples; ++j)
        if (slots.diverged[j]) result.excluded_indices.push_back(j);
    const std::size_t excluded = result.excluded_indices.size();
    if (static_cast<double>(excluded) > settings.max_excluded_fraction * static_cast<double>(settings.samples))
        throw DivergenceAbort(excluded, settings.samples);
    if (excluded == settings.samples) throw DivergenceAbort(excluded, settings.samples);

    const std::size_t kept = settings.samples - excluded;
    result.components = IndicatorMatrix(kept, k_count);
    if (settings.mode == EstimatorMode::importance) result.weights.reserve(kept);
    for (std::size_t j = 0, r = 0; j < settings.samples; ++j) {
        if (slots.diverged[j]) continue;
        for (std::size_t k = 0; k < k_count; ++k) result.components.at(r, k) = slots.failed[j * k_count + k];
        if (settings.mode == EstimatorMode::importance) result.weights.push_back(slots.weight[j]);
        ++r;
    }
    result.system = system_indicators(result.components, topology.mode);
    if (settings.mode == EstimatorMode::importance) {
        result.report = is_estimate(result.weights, result.system, settings.report_as);
        result.martingale = martingale_check(result.weights, 3.0);
    } else {
        result.report = crude_estimate(result.system, settings.report_as);
    }
    result.report.topology = topology.mode;
    result.report.excluded = excluded;
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

}  // namespace relisim
