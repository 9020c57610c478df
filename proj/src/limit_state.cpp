#include "relisim/limit_state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "relisim/error.hpp"

namespace relisim {

namespace {

double eval_g(const LimitState& ls, std::span<const double> x, double t) {
    const double v = ls.g(x, t);
    if (!std::isfinite(v)) throw EvaluationError(ls.label, t);
    return v;
}

void check_binary(std::span<const int> x) {
    for (int v : x) {
        if (v != 0 && v != 1) throw DomainError("structure function inputs must be 0 or 1");
    }
}

}  // namespace

const char* to_string(Topology topology) noexcept {
    switch (topology) {
        case Topology::single: return "single";
        case Topology::series: return "series";
        case Topology::parallel: return "parallel";
    }
    return "single";
}

void SystemTopology::validate() const {
    if (components.empty()) throw DomainError("topology needs at least one component");
    if (mode == Topology::single && components.size() != 1)
        throw DomainError("single topology must have exactly one component");
    for (const auto& c : components) {
        if (!c.g) throw DomainError("limit state '" + c.label + "' has no function");
        if (!std::isfinite(c.g_star)) throw DomainError("limit state '" + c.label + "' threshold must be finite");
    }
}

double prehistory_max(const InitialSegment& initial, const LimitState& ls, double step, double horizon) {
    if (!(step > 0.0)) throw DomainError("pre-history step must be positive");
    const auto points = static_cast<std::size_t>(std::floor(horizon / step + 1e-9));
    double best = -std::numeric_limits<double>::infinity();
    Vector x(initial.dimension());
    for (std::size_t j = 1; j <= points; ++j) {
        const double theta = -static_cast<double>(j) * step;
        initial.eval(theta, x);
        best = std::max(best, eval_g(ls, x, theta));
    }
    return best;
}

double running_max(const Trajectory& traj, const InitialSegment& initial, const LimitState& ls) {
    if (traj.diverged) throw DomainError("running maximum is undefined on a diverged trajectory");
    double best = prehistory_max(initial, ls, traj.step, traj.memory_horizon);
    for (std::size_t k = 0; k < traj.states.size(); ++k) best = std::max(best, eval_g(ls, traj.states[k], traj.times[k]));
    return best;
}

int failure_indicator(std::span<const std::uint8_t> failed, Topology mode) {
    if (failed.empty()) throw DomainError("failure record is empty");
    switch (mode) {
        case Topology::single:
            if (failed.size() != 1) throw DomainError("single topology expects one component");
            return failed[0] ? 1 : 0;
        case Topology::series:
            return std::any_of(failed.begin(), failed.end(), [](std::uint8_t f) { return f != 0; }) ? 1 : 0;
        case Topology::parallel:
            return std::all_of(failed.begin(), failed.end(), [](std::uint8_t f) { return f != 0; }) ? 1 : 0;
    }
    return 0;
}

int failure_indicator(const FailureRecord& rec, const SystemTopology& topology) {
    if (rec.component_failed.size() != topology.components.size())
        throw DomainError("failure record arity differs from topology");
    return failure_indicator(rec.component_failed, topology.mode);
}

int structure_series(std::span<const int> x) {
    check_binary(x);
    int out = 1;
    for (int v : x) out *= v;
    return out;
}

int structure_parallel(std::span<const int> x) {
    check_binary(x);
    int down = 1;
    for (int v : x) down *= 1 - v;
    return 1 - down;
}

FailureTracker::FailureTracker(const SystemTopology& topology, std::span<const double> prehistory)
    : topology_(topology), prehistory_(prehistory.begin(), prehistory.end()) {
    if (prehistory_.size() != topology.components.size())
        throw DomainError("pre-history maxima must match the number of components");
    reset();
}

void FailureTracker::reset() { g_max_ = prehistory_; }

void FailureTracker::observe(std::span<const double> x, double t) {
    for (std::size_t k = 0; k < g_max_.size(); ++k) g_max_[k] = std::max(g_max_[k], eval_g(topology_.components[k], x, t));
}

FailureRecord FailureTracker::record() const {
    FailureRecord rec;
    rec.g_max = g_max_;
    rec.component_failed.resize(g_max_.size());
    for (std::size_t k = 0; k < g_max_.size(); ++k)
        rec.component_failed[k] = topology_.components[k].g_star - g_max_[k] <= 0.0 ? 1 : 0;
    rec.system_failed = failure_indicator(rec.component_failed, topology_.mode) == 1;
    return rec;
}

}  // namespace relisim
