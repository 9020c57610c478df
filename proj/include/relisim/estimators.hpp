#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "relisim/limit_state.hpp"

namespace relisim {

enum class EstimatorMode { crude, importance };
enum class Quantity { failure, reliability };

const char* to_string(EstimatorMode mode) noexcept;
const char* to_string(Quantity quantity) noexcept;

/**
 * Point estimate with its Monte Carlo error.
 *
 * `variance` is the variance of the estimator itself (already divided by the
 * sample count), so `std_error == sqrt(variance)` and the 95% interval is
 * estimate +/- 1.96 std_error. Reliability and failure share the variance.
 */
struct EstimateReport {
    Quantity report_as = Quantity::failure;
    EstimatorMode mode = EstimatorMode::crude;
    Topology topology = Topology::single;
    double failure = 0.0;          // raw; can exceed [0, 1] under importance sampling
    double failure_clamped = 0.0;  // failure clamped to [0, 1]
    double reliability = 1.0;      // 1 - failure
    std::size_t sample_count = 0;
    std::size_t failures = 0;  // samples whose indicator is 1
    double variance = 0.0;
    double std_error = 0.0;
    std::size_t excluded = 0;

    double estimate() const noexcept { return report_as == Quantity::failure ? failure : reliability; }
    double ci_low() const noexcept { return estimate() - 1.96 * std_error; }
    double ci_high() const noexcept { return estimate() + 1.96 * std_error; }
};

/// Dense M x K table of 0/1 component failure indicators.
class IndicatorMatrix {
public:
    IndicatorMatrix() = default;
    IndicatorMatrix(std::size_t rows, std::size_t cols);
    /// Throws DomainError on ragged rows or non-binary entries.
    static IndicatorMatrix from_rows(const std::vector<std::vector<int>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::uint8_t& at(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    std::uint8_t at(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
    std::span<const std::uint8_t> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<std::uint8_t> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint8_t> data_;
};

EstimateReport crude_estimate(std::span<const std::uint8_t> indicators, Quantity report_as = Quantity::failure);
EstimateReport is_estimate(std::span<const double> weights, std::span<const std::uint8_t> indicators,
                           Quantity report_as = Quantity::failure);

/// Per-sample system indicators: union of component events (series) or intersection (parallel).
std::vector<std::uint8_t> system_indicators(const IndicatorMatrix& components, Topology mode);

EstimateReport series_estimate(const IndicatorMatrix& components,
                               std::optional<std::span<const double>> weights = std::nullopt,
                               Quantity report_as = Quantity::failure);
EstimateReport parallel_estimate(const IndicatorMatrix& components,
                                 std::optional<std::span<const double>> weights = std::nullopt,
                                 Quantity report_as = Quantity::failure);

struct VarianceLawCheck {
    bool pass = false;
    double predicted = 0.0;          // p(1-p)/M
    double observed = 0.0;           // variance of batch means at M
    double ratio = 0.0;              // observed / predicted
    double observed_doubled = 0.0;   // variance of batch means at 2M
    double halving_ratio = 0.0;      // observed_doubled / observed
};

/**
 * Empirical check of Var(P_F hat) = p(1-p)/M on `batches` Bernoulli(p) batches.
 *
 * Each batch draws 2M samples; its first M give the size-M mean and all 2M give
 * the size-2M mean, so the two variance estimates share their noise. Passes iff
 * the size-M variance is within [0.5, 2] of the prediction and the size-2M
 * variance is smaller.
 */
VarianceLawCheck variance_law_check(double p_target, std::size_t samples, std::size_t batches,
                                    std::uint64_t seed = 0x5eed'0001ULL);

}  // namespace relisim
