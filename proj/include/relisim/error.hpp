#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace relisim {

/// Precondition violated by a caller-supplied value (bad dimension, out of range, ...).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A quantity fell outside the range where it can be evaluated reliably.
class RangeError : public std::range_error {
public:
    using std::range_error::range_error;
};

/// A model functional produced a non-finite value during an integration step.
class StepError : public std::runtime_error {
public:
    StepError(double time, std::string functional)
        : std::runtime_error("non-finite output from " + functional + " at t=" + std::to_string(time)),
          time_(time), functional_(std::move(functional)) {}

    double time() const noexcept { return time_; }
    const std::string& functional() const noexcept { return functional_; }

private:
    double time_;
    std::string functional_;
};

/// A limit-state function returned a non-finite value.
class EvaluationError : public std::runtime_error {
public:
    EvaluationError(const std::string& component, double time)
        : std::runtime_error("limit state '" + component + "' is non-finite at t=" + std::to_string(time)),
          component_(component) {}

    const std::string& component() const noexcept { return component_; }

private:
    std::string component_;
};

/// Configuration could not be parsed or validated. `where` is a line number or a field path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& where, const std::string& what)
        : std::runtime_error(where.empty() ? what : where + ": " + what), where_(where) {}

    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

/// More trajectories diverged than a campaign tolerates.
class DivergenceAbort : public std::runtime_error {
public:
    DivergenceAbort(std::size_t excluded, std::size_t total)
        : std::runtime_error(std::to_string(excluded) + " of " + std::to_string(total) +
                             " trajectories diverged (limit 1%)"),
          excluded_(excluded), total_(total) {}

    std::size_t excluded() const noexcept { return excluded_; }
    std::size_t total() const noexcept { return total_; }

private:
    std::size_t excluded_;
    std::size_t total_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace relisim
