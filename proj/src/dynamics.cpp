#include "relisim/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "relisim/error.hpp"

namespace relisim {

namespace {

void check_finite(std::span<const double> v, double t, const char* functional) {
    for (double x : v) {
        if (!std::isfinite(x)) throw StepError(t, functional);
    }
}

void check_model(const SystemModel& model) {
    if (model.n == 0 || model.m == 0) throw DomainError("model dimensions must be positive");
    if (!model.drift) throw DomainError("model has no drift functional");
    if (!model.diffusion) throw DomainError("model has no diffusion functional");
}

// Shared kernel so that a zero control reproduces the uncontrolled update bit for bit:
// both paths evaluate x + drift_eff*h + sigma*dw in the same order, and b + 0.0 == b.
void euler_kernel(const SystemModel& model, const HistoryBuffer& buffer, double t, std::span<const double> dw,
                  bool controlled, std::span<double> drift, std::span<double> diffusion, std::span<double> control,
                  std::span<double> x_next) {
    const std::size_t n = model.n;
    const std::size_t m = model.m;
    if (dw.size() != m) throw DomainError("increment dimension differs from model noise dimension");
    const double h = buffer.step();

    model.drift(buffer, t, drift);
    check_finite(drift, t, "drift");
    model.diffusion(buffer, t, diffusion);
    check_finite(diffusion, t, "diffusion");
    if (controlled) {
        if (!model.has_control()) throw DomainError("controlled step requested on a model without control");
        model.control(buffer, t, control);
        check_finite(control, t, "control");
        for (std::size_t i = 0; i < n; ++i) {
            double shift = 0.0;
            for (std::size_t j = 0; j < m; ++j) shift += diffusion[i * m + j] * control[j];
            drift[i] += shift;
        }
    }
    const auto x = buffer.head();
    for (std::size_t i = 0; i < n; ++i) {
        double noise = 0.0;
        for (std::size_t j = 0; j < m; ++j) noise += diffusion[i * m + j] * dw[j];
        x_next[i] = x[i] + drift[i] * h + noise;
    }
}

bool out_of_bounds(std::span<const double> x) {
    return std::any_of(x.begin(), x.end(), [](double v) { return !(std::abs(v) <= kOverflowGuard); });
}

Vector standalone_step(const SystemModel& model, const HistoryBuffer& buffer, double t, std::span<const double> dw,
                       bool controlled) {
    check_model(model);
    if (buffer.dimension() != model.n) throw DomainError("history dimension differs from model state dimension");
    Vector drift(model.n), diffusion(model.n * model.m), control(model.m), next(model.n);
    euler_kernel(model, buffer, t, dw, controlled, drift, diffusion, control, next);
    return next;
}

}  // namespace

std::size_t IntegratorConfig::steps() const {
    if (!(step > 0.0) || !std::isfinite(step)) throw DomainError("integrator step must be positive");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw DomainError("t_end must be positive");
    const double ratio = t_end / step;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, rounded))
        throw DomainError("t_end must be an integer multiple of the step");
    return static_cast<std::size_t>(rounded);
}

void IntegratorConfig::validate() const {
    (void)steps();
    if (record_stride == 0) throw DomainError("record stride must be positive");
    if (memory_horizon && (!(*memory_horizon > 0.0) || !std::isfinite(*memory_horizon)))
        throw DomainError("memory horizon must be positive");
}

double resolve_memory_horizon(const SystemModel& model, const IntegratorConfig& config) {
    if (config.memory_horizon) return *config.memory_horizon;
    if (model.max_delay > 0.0) return 10.0 * model.max_delay;
    return config.t_end;
}

EulerMaruyama::EulerMaruyama(const SystemModel& model, const IntegratorConfig& config, const InitialSegment& initial)
    : model_(model),
      config_(config),
      steps_(config.steps()),
      buffer_(initial, config.step, resolve_memory_horizon(model, config),
              resolve_memory_horizon(model, config) < config.t_end) {
    check_model(model);
    config.validate();
    if (initial.dimension() != model.n) throw DomainError("initial segment dimension differs from model state dimension");
    drift_.resize(model.n);
    diffusion_.resize(model.n * model.m);
    control_.resize(model.m);
    next_.resize(model.n);
}

void EulerMaruyama::step(double t, std::span<const double> dw, bool controlled, std::span<double> x_next) {
    euler_kernel(model_, buffer_, t, dw, controlled, drift_, diffusion_, control_, x_next);
}

EulerMaruyama::Outcome EulerMaruyama::run(const BrownianIncrements& noise, bool controlled,
                                          const Observer& observer) {
    if (noise.dimension != model_.m) throw DomainError("noise dimension differs from model noise dimension");
    if (noise.count() < steps_) throw DomainError("not enough Brownian increments for the integration grid");
    buffer_.reset();
    Outcome outcome;
    if (observer) observer(0.0, buffer_.head());
    for (std::size_t k = 0; k < steps_; ++k) {
        const double t = static_cast<double>(k) * config_.step;
        const auto dw = noise.at(k);
        step(t, dw, controlled, next_);
        if (controlled) outcome.weight.step(control_, dw, config_.step);
        if (out_of_bounds(next_)) {
            outcome.diverged = true;
            outcome.diverged_at = static_cast<double>(k + 1) * config_.step;
            return outcome;
        }
        buffer_.append(next_);
        if (observer) observer(static_cast<double>(k + 1) * config_.step, buffer_.head());
    }
    return outcome;
}

Vector euler_step_uncontrolled(const SystemModel& model, const HistoryBuffer& buffer, double t,
                               std::span<const double> dw) {
    return standalone_step(model, buffer, t, dw, false);
}

Vector euler_step_controlled(const SystemModel& model, const HistoryBuffer& buffer, double t,
                             std::span<const double> dw_tilde) {
    return standalone_step(model, buffer, t, dw_tilde, true);
}

Trajectory simulate_trajectory(const SystemModel& model, const IntegratorConfig& config,
                               const InitialSegment& initial, const BrownianIncrements& noise, bool controlled) {
    EulerMaruyama integrator(model, config, initial);
    Trajectory traj;
    traj.controlled = controlled;
    traj.step = config.step;
    traj.memory_horizon = integrator.horizon();
    const std::size_t steps = integrator.steps();
    std::size_t k = 0;
    const auto outcome = integrator.run(noise, controlled, [&](double t, std::span<const double> x) {
        if (k % config.record_stride == 0 || k == steps) {
            traj.times.push_back(t);
            traj.states.emplace_back(x.begin(), x.end());
        }
        ++k;
    });
    traj.diverged = outcome.diverged;
    if (controlled) traj.weight_final = outcome.weight.ratio();
    return traj;
}

}  // namespace relisim
