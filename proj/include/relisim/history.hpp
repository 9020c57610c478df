#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace relisim {

using Vector = std::vector<double>;

/**
 * Prescribed path xi(theta) on theta <= 0 that seeds a delay system.
 *
 * Three closed-form families are supported:
 *  - constant:     xi(theta) = value0
 *  - exponential:  xi(theta) = asymptote + (value0 - asymptote) * exp(decay_rate * theta)
 *  - tabulated:    piecewise constant, left-continuous over ascending knots; constant
 *                  continuation left of the first knot; xi(0) = value0.
 */
class InitialSegment {
public:
    enum class Kind { constant, exponential, tabulated };

    struct Knot {
        double theta;
        Vector value;
    };

    static InitialSegment constant(Vector value0);
    static InitialSegment exponential(Vector value0, double decay_rate, Vector asymptote = {});
    static InitialSegment tabulated(Vector value0, std::vector<Knot> table);

    Kind kind() const noexcept { return kind_; }
    std::size_t dimension() const noexcept { return value0_.size(); }
    const Vector& value0() const noexcept { return value0_; }
    double decay_rate() const noexcept { return decay_rate_; }
    const Vector& asymptote() const noexcept { return asymptote_; }
    const std::vector<Knot>& table() const noexcept { return table_; }

    void eval(double theta, std::span<double> out) const;
    Vector eval(double theta) const;
    double component(double theta, std::size_t i) const;

private:
    InitialSegment() = default;
    void validate() const;

    Kind kind_ = Kind::constant;
    Vector value0_;
    double decay_rate_ = 0.0;
    Vector asymptote_;
    std::vector<Knot> table_;
};

/**
 * Discretized history x(t + theta) of one trajectory on the integrator grid.
 *
 * Grid entry k holds x(k * step). Lookups are piecewise constant and
 * left-continuous: the value at time s >= 0 is the entry with the largest
 * k * step <= s. Times before 0 are answered by the initial segment.
 *
 * With truncation enabled, entries older than `horizon` behind the head are
 * released; lookups that reach past the retained window return the oldest
 * retained entry.
 */
class HistoryBuffer {
public:
    HistoryBuffer(InitialSegment initial, double step, double horizon, bool truncate = false);

    std::size_t dimension() const noexcept { return n_; }
    double step() const noexcept { return step_; }
    double horizon() const noexcept { return horizon_; }
    bool truncating() const noexcept { return truncate_; }
    const InitialSegment& initial() const noexcept { return initial_; }

    /// Number of grid entries appended since construction (including x(0)).
    std::size_t size() const noexcept { return first_index_ + count_; }
    /// Entries currently held in memory.
    std::size_t retained() const noexcept { return count_; }
    /// Time of the newest entry.
    double now() const noexcept { return static_cast<double>(size() - 1) * step_; }

    void append(std::span<const double> x_next);

    /// Current state x(now).
    std::span<const double> head() const noexcept;

    /// x(now + theta) written into `out` (length n).
    void eval(double theta, std::span<double> out) const;
    Vector eval(double theta) const;
    /// Component i of x(now + theta).
    double component(double theta, std::size_t i) const;

    /// Restart from x(0) = xi(0) without reallocating.
    void reset();

private:
    std::span<const double> entry(std::size_t index) const noexcept;
    std::size_t grid_index(double time) const noexcept;

    InitialSegment initial_;
    std::size_t n_;
    double step_;
    double horizon_;
    bool truncate_;
    std::size_t keep_;  // entries kept when truncating
    std::vector<double> data_;
    std::size_t offset_ = 0;       // first live entry in data_, in entries
    std::size_t first_index_ = 0;  // grid index of the first live entry
    std::size_t count_ = 0;
};

/// x(now + theta) for a buffer integrated up to `now`.
Vector segment_eval(const HistoryBuffer& buffer, double now, double theta);

}  // namespace relisim
