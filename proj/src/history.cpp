#include "relisim/history.hpp"

#include <algorithm>
#include <cmath>

#include "relisim/error.hpp"

namespace relisim {

namespace {

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Relative slack when mapping a time onto the grid, so that k*h lands on k.
constexpr double kGridSlack = 1e-9;

}  // namespace

InitialSegment InitialSegment::constant(Vector value0) {
    InitialSegment s;
    s.kind_ = Kind::constant;
    s.value0_ = std::move(value0);
    s.validate();
    return s;
}

InitialSegment InitialSegment::exponential(Vector value0, double decay_rate, Vector asymptote) {
    InitialSegment s;
    s.kind_ = Kind::exponential;
    s.value0_ = std::move(value0);
    s.decay_rate_ = decay_rate;
    s.asymptote_ = asymptote.empty() ? Vector(s.value0_.size(), 0.0) : std::move(asymptote);
    s.validate();
    return s;
}

InitialSegment InitialSegment::tabulated(Vector value0, std::vector<Knot> table) {
    InitialSegment s;
    s.kind_ = Kind::tabulated;
    s.value0_ = std::move(value0);
    s.table_ = std::move(table);
    s.validate();
    return s;
}

void InitialSegment::validate() const {
    if (value0_.empty()) throw DomainError("initial segment needs a non-empty value");
    if (!all_finite(value0_)) throw DomainError("initial value must be finite");
    switch (kind_) {
        case Kind::constant:
            break;
        case Kind::exponential:
            if (!(decay_rate_ >= 0.0) || !std::isfinite(decay_rate_))
                throw DomainError("decay rate must be finite and >= 0");
            if (asymptote_.size() != value0_.size() || !all_finite(asymptote_))
                throw DomainError("asymptote must be finite with the dimension of the initial value");
            break;
        case Kind::tabulated: {
            if (table_.empty()) throw DomainError("tabulated initial segment needs at least one knot");
            double prev = -INFINITY;
            for (const auto& knot : table_) {
                if (!std::isfinite(knot.theta) || knot.theta > 0.0)
                    throw DomainError("table knots must satisfy theta <= 0");
                if (!(knot.theta > prev)) throw DomainError("table knots must be strictly ascending in theta");
                if (knot.value.size() != value0_.size() || !all_finite(knot.value))
                    throw DomainError("table values must be finite with the dimension of the initial value");
                prev = knot.theta;
            }
            if (table_.back().theta == 0.0 && table_.back().value != value0_)
                throw DomainError("table knot at theta = 0 disagrees with the initial value");
            break;
        }
    }
}

double InitialSegment::component(double theta, std::size_t i) const {
    if (!std::isfinite(theta)) throw DomainError("history offset must be finite");
    if (theta > 0.0) throw DomainError("initial segment is defined on theta <= 0 only");
    if (theta == 0.0) return value0_[i];
    switch (kind_) {
        case Kind::constant:
            return value0_[i];
        case Kind::exponential:
            return asymptote_[i] + (value0_[i] - asymptote_[i]) * std::exp(decay_rate_ * theta);
        case Kind::tabulated: {
            auto it = std::upper_bound(table_.begin(), table_.end(), theta,
                                       [](double th, const Knot& k) { return th < k.theta; });
            if (it == table_.begin()) return table_.front().value[i];
            return std::prev(it)->value[i];
        }
    }
    return value0_[i];
}

void InitialSegment::eval(double theta, std::span<double> out) const {
    if (out.size() != value0_.size()) throw DomainError("output length differs from segment dimension");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = component(theta, i);
}

Vector InitialSegment::eval(double theta) const {
    Vector out(value0_.size());
    eval(theta, out);
    return out;
}

HistoryBuffer::HistoryBuffer(InitialSegment initial, double step, double horizon, bool truncate)
    : initial_(std::move(initial)), n_(initial_.dimension()), step_(step), horizon_(horizon), truncate_(truncate) {
    if (!(step > 0.0) || !std::isfinite(step)) throw DomainError("history step must be positive");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("memory horizon must be positive");
    keep_ = static_cast<std::size_t>(std::floor(horizon / step + kGridSlack)) + 1;
    reset();
}

void HistoryBuffer::reset() {
    data_.assign(initial_.value0().begin(), initial_.value0().end());
    offset_ = 0;
    first_index_ = 0;
    count_ = 1;
}

void HistoryBuffer::append(std::span<const double> x_next) {
    if (x_next.size() != n_) throw DomainError("appended state has the wrong dimension");
    data_.insert(data_.end(), x_next.begin(), x_next.end());
    ++count_;
    if (truncate_ && count_ > keep_) {
        const std::size_t drop = count_ - keep_;
        offset_ += drop;
        first_index_ += drop;
        count_ = keep_;
        // Compact once the dead prefix outgrows the live window.
        if (offset_ > keep_) {
            data_.erase(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>(offset_ * n_));
            offset_ = 0;
        }
    }
}

std::span<const double> HistoryBuffer::entry(std::size_t index) const noexcept {
    const std::size_t local = index < first_index_ ? 0 : index - first_index_;
    return {data_.data() + (offset_ + local) * n_, n_};
}

std::span<const double> HistoryBuffer::head() const noexcept { return entry(size() - 1); }

std::size_t HistoryBuffer::grid_index(double time) const noexcept {
    const auto k = static_cast<std::size_t>(std::floor(time / step_ + kGridSlack));
    return std::min(k, size() - 1);
}

double HistoryBuffer::component(double theta, std::size_t i) const {
    if (!std::isfinite(theta)) throw DomainError("history offset must be finite");
    if (theta > 0.0) throw DomainError("history offset must satisfy theta <= 0");
    if (theta == 0.0) return head()[i];
    const double time = now() + theta;
    if (time < -kGridSlack * step_) return initial_.component(time, i);
    return entry(grid_index(std::max(time, 0.0)))[i];
}

void HistoryBuffer::eval(double theta, std::span<double> out) const {
    if (out.size() != n_) throw DomainError("output length differs from history dimension");
    if (!std::isfinite(theta)) throw DomainError("history offset must be finite");
    if (theta > 0.0) throw DomainError("history offset must satisfy theta <= 0");
    const double time = now() + theta;
    if (theta != 0.0 && time < -kGridSlack * step_) {
        initial_.eval(time, out);
        return;
    }
    const auto src = theta == 0.0 ? head() : entry(grid_index(std::max(time, 0.0)));
    std::copy(src.begin(), src.end(), out.begin());
}

Vector HistoryBuffer::eval(double theta) const {
    Vector out(n_);
    eval(theta, out);
    return out;
}

Vector segment_eval(const HistoryBuffer& buffer, double now, double theta) {
    if (!std::isfinite(now) || std::abs(now - buffer.now()) > kGridSlack * buffer.step() * (1.0 + buffer.size()))
        throw DomainError("buffer is not integrated up to the requested time");
    return buffer.eval(theta);
}

}  // namespace relisim
