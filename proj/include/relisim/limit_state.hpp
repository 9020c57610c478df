#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "relisim/dynamics.hpp"
#include "relisim/history.hpp"

namespace relisim {

/// Scalar performance measure g(x(t), t) with safe limit g*. Failure: g* - max g <= 0.
struct LimitState {
    std::function<double(std::span<const double> x, double t)> g;
    double g_star = 0.0;
    std::string label;
};

enum class Topology { single, series, parallel };

const char* to_string(Topology topology) noexcept;

struct SystemTopology {
    Topology mode = Topology::single;
    std::vector<LimitState> components;

    void validate() const;
};

struct FailureRecord {
    std::vector<double> g_max;
    std::vector<std::uint8_t> component_failed;
    bool system_failed = false;
};

/// Maximum of g over the pre-history window [-horizon, 0) sampled at `step`. Identical for
/// every trajectory sharing an initial segment, so campaigns compute it once.
double prehistory_max(const InitialSegment& initial, const LimitState& ls, double step, double horizon);

/// Maximum of g over the trajectory's stored grid and the discretized pre-history window.
double running_max(const Trajectory& traj, const InitialSegment& initial, const LimitState& ls);

/// Series: any component fails. Parallel: all fail. Single: the one component.
int failure_indicator(std::span<const std::uint8_t> component_failed, Topology mode);
int failure_indicator(const FailureRecord& rec, const SystemTopology& topology);

/// Product of the entries (works iff all work).
int structure_series(std::span<const int> x);
/// 1 - prod(1 - x_i) (works iff any works).
int structure_parallel(std::span<const int> x);

/// Online g-maximum across the components of a topology, fed state by state.
class FailureTracker {
public:
    FailureTracker(const SystemTopology& topology, std::span<const double> prehistory);

    void reset();
    void observe(std::span<const double> x, double t);
    FailureRecord record() const;
    std::span<const double> g_max() const noexcept { return g_max_; }

private:
    const SystemTopology& topology_;
    std::vector<double> prehistory_;
    std::vector<double> g_max_;
};

}  // namespace relisim
