#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relisim/girsanov.hpp"
#include "relisim/history.hpp"
#include "relisim/rng.hpp"

namespace relisim {

/// Functional of the history segment and time, writing its value into `out`.
using SegmentFunctional = std::function<void(const HistoryBuffer& x, double t, std::span<double> out)>;

/**
 * dx = b(x_t) dt + sigma(x_t) (u(x_t) dt + dw~)
 *
 * drift writes n values, diffusion writes the n x m matrix row-major, control
 * (when present) writes m values: the drift shift expressed in noise coordinates.
 */
struct SystemModel {
    std::size_t n = 1;
    std::size_t m = 1;
    SegmentFunctional drift;
    SegmentFunctional diffusion;
    SegmentFunctional control;
    /// Longest history offset the functionals read; negative when unknown.
    double max_delay = -1.0;
    std::string name;

    bool has_control() const noexcept { return static_cast<bool>(control); }
};

struct IntegratorConfig {
    double step = 0.01;
    double t_end = 1.0;
    std::size_t record_stride = 1;
    /// Truncation depth of the stored history; resolved from the model when unset.
    std::optional<double> memory_horizon;

    /// Number of Euler steps; throws DomainError unless t_end/step is an integer within 1e-9.
    std::size_t steps() const;
    void validate() const;
};

/// Memory horizon used for a run: explicit value, else 10x the model's longest delay, else t_end.
double resolve_memory_horizon(const SystemModel& model, const IntegratorConfig& config);

struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;
    bool controlled = false;
    bool diverged = false;
    std::optional<double> weight_final;
    double step = 0.0;
    double memory_horizon = 0.0;
};

/// States whose any component exceeds this magnitude mark a trajectory as diverged.
inline constexpr double kOverflowGuard = 1e150;

/**
 * Reusable Euler-Maruyama integrator for one worker.
 *
 * Owns the history buffer and scratch space for one trajectory at a time.
 */
class EulerMaruyama {
public:
    using Observer = std::function<void(double t, std::span<const double> x)>;

    struct Outcome {
        bool diverged = false;
        double diverged_at = 0.0;
        WeightProcess weight;
    };

    EulerMaruyama(const SystemModel& model, const IntegratorConfig& config, const InitialSegment& initial);

    /// Integrate over [0, t_end] with the given increments. The observer sees x(0) and every
    /// subsequent grid state in order. Controlled runs accumulate the likelihood-ratio weight.
    Outcome run(const BrownianIncrements& noise, bool controlled, const Observer& observer = {});

    /// Next state from the buffer head. After a controlled step, last_control() holds the u value used.
    void step(double t, std::span<const double> dw, bool controlled, std::span<double> x_next);

    HistoryBuffer& history() noexcept { return buffer_; }
    std::span<const double> last_control() const noexcept { return control_; }
    double horizon() const noexcept { return buffer_.horizon(); }
    std::size_t steps() const noexcept { return steps_; }

private:
    const SystemModel& model_;
    IntegratorConfig config_;
    std::size_t steps_;
    HistoryBuffer buffer_;
    std::vector<double> drift_;
    std::vector<double> diffusion_;
    std::vector<double> control_;
    std::vector<double> next_;
};

/// x(t) + b(x_t) h + sigma(x_t) dw, with h the buffer's step.
Vector euler_step_uncontrolled(const SystemModel& model, const HistoryBuffer& buffer, double t,
                               std::span<const double> dw);
/// x~(t) + [b(x~_t) + sigma(x~_t) u(x~_t)] h + sigma(x~_t) dw~.
Vector euler_step_controlled(const SystemModel& model, const HistoryBuffer& buffer, double t,
                             std::span<const double> dw_tilde);

/// Full path on the time grid (every `record_stride`-th state plus the final one).
Trajectory simulate_trajectory(const SystemModel& model, const IntegratorConfig& config,
                               const InitialSegment& initial, const BrownianIncrements& noise, bool controlled);

}  // namespace relisim
