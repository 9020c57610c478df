#include "relisim/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "relisim/error.hpp"
#include "relisim/rng.hpp"

namespace relisim {

namespace {

void check_indicators(std::span<const std::uint8_t> indicators) {
    if (indicators.empty()) throw DomainError("estimator needs at least one sample");
    for (auto v : indicators) {
        if (v > 1) throw DomainError("indicators must be 0 or 1");
    }
}

// Mean and population variance of per-sample terms (two passes, index order). Crude and
// importance estimates share this so that unit weights reproduce the crude result exactly.
EstimateReport from_terms(std::span<const double> terms, std::size_t failures, Quantity report_as,
                          EstimatorMode mode) {
    const double m = static_cast<double>(terms.size());
    double sum = 0.0;
    for (double v : terms) sum += v;
    const double mean = sum / m;
    double ss = 0.0;
    for (double v : terms) ss += (v - mean) * (v - mean);

    EstimateReport r;
    r.report_as = report_as;
    r.mode = mode;
    r.failure = mean;
    r.failure_clamped = std::clamp(mean, 0.0, 1.0);
    r.reliability = 1.0 - mean;
    r.sample_count = terms.size();
    r.failures = failures;
    r.variance = ss / m / m;
    r.std_error = std::sqrt(r.variance);
    return r;
}

}  // namespace

const char* to_string(EstimatorMode mode) noexcept {
    return mode == EstimatorMode::crude ? "crude" : "importance";
}

const char* to_string(Quantity quantity) noexcept {
    return quantity == Quantity::failure ? "failure" : "reliability";
}

IndicatorMatrix::IndicatorMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0) {}

IndicatorMatrix IndicatorMatrix::from_rows(const std::vector<std::vector<int>>& rows) {
    if (rows.empty()) throw DomainError("indicator matrix needs at least one row");
    const std::size_t k = rows.front().size();
    if (k == 0) throw DomainError("indicator matrix needs at least one column");
    IndicatorMatrix out(rows.size(), k);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != k) throw DomainError("ragged indicator matrix");
        for (std::size_t c = 0; c < k; ++c) {
            const int v = rows[r][c];
            if (v != 0 && v != 1) throw DomainError("indicators must be 0 or 1");
            out.at(r, c) = static_cast<std::uint8_t>(v);
        }
    }
    return out;
}

EstimateReport crude_estimate(std::span<const std::uint8_t> indicators, Quantity report_as) {
    check_indicators(indicators);
    std::vector<double> terms(indicators.begin(), indicators.end());
    const auto failures = static_cast<std::size_t>(std::count(indicators.begin(), indicators.end(), 1));
    return from_terms(terms, failures, report_as, EstimatorMode::crude);
}

EstimateReport is_estimate(std::span<const double> weights, std::span<const std::uint8_t> indicators,
                           Quantity report_as) {
    check_indicators(indicators);
    if (weights.size() != indicators.size()) throw DomainError("weights and indicators differ in length");
    std::vector<double> terms(weights.size());
    std::size_t failures = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
            throw DomainError("importance weights must be finite and non-negative");
        terms[i] = indicators[i] ? weights[i] : 0.0;
        failures += indicators[i];
    }
    return from_terms(terms, failures, report_as, EstimatorMode::importance);
}

std::vector<std::uint8_t> system_indicators(const IndicatorMatrix& components, Topology mode) {
    if (components.rows() == 0 || components.cols() == 0) throw DomainError("empty indicator matrix");
    std::vector<std::uint8_t> out(components.rows());
    for (std::size_t r = 0; r < components.rows(); ++r)
        out[r] = static_cast<std::uint8_t>(failure_indicator(components.row(r), mode));
    return out;
}

namespace {

EstimateReport composed_estimate(const IndicatorMatrix& components, std::optional<std::span<const double>> weights,
                                 Quantity report_as, Topology mode) {
    const auto system = system_indicators(components, mode);
    auto r = weights ? is_estimate(*weights, system, report_as) : crude_estimate(system, report_as);
    r.topology = mode;
    return r;
}

}  // namespace

EstimateReport series_estimate(const IndicatorMatrix& components, std::optional<std::span<const double>> weights,
                               Quantity report_as) {
    return composed_estimate(components, weights, report_as, Topology::series);
}

EstimateReport parallel_estimate(const IndicatorMatrix& components, std::optional<std::span<const double>> weights,
                                 Quantity report_as) {
    return composed_estimate(components, weights, report_as, Topology::parallel);
}

VarianceLawCheck variance_law_check(double p_target, std::size_t samples, std::size_t batches, std::uint64_t seed) {
    if (!(p_target >= 0.0 && p_target < 1.0)) throw DomainError("target probability must lie in [0, 1)");
    if (samples == 0 || batches < 2) throw DomainError("variance check needs M >= 1 and at least two batches");
    if (p_target > 0.0 && p_target * static_cast<double>(samples) < 5.0)
        throw DomainError("variance check needs M * p >= 5 expected failures per batch");

    std::vector<double> means(batches), means_doubled(batches);
    for (std::size_t b = 0; b < batches; ++b) {
        GaussianStream stream(seed, b);
        std::size_t hits = 0;
        std::size_t hits_first = 0;
        for (std::size_t i = 0; i < 2 * samples; ++i) {
            hits += stream.next_uniform() < p_target ? 1 : 0;
            if (i + 1 == samples) hits_first = hits;
        }
        means[b] = static_cast<double>(hits_first) / static_cast<double>(samples);
        means_doubled[b] = static_cast<double>(hits) / static_cast<double>(2 * samples);
    }
    auto sample_variance = [](const std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        return ss / static_cast<double>(v.size() - 1);
    };

    VarianceLawCheck out;
    out.predicted = p_target * (1.0 - p_target) / static_cast<double>(samples);
    out.observed = sample_variance(means);
    out.observed_doubled = sample_variance(means_doubled);
    if (out.predicted == 0.0) {
        out.ratio = out.observed == 0.0 ? 1.0 : INFINITY;
        out.halving_ratio = std::numeric_limits<double>::quiet_NaN();
        out.pass = out.observed == 0.0 && out.observed_doubled == 0.0;
        return out;
    }
    out.ratio = out.observed / out.predicted;
    out.halving_ratio = out.observed > 0.0 ? out.observed_doubled / out.observed : INFINITY;
    out.pass = out.ratio >= 0.5 && out.ratio <= 2.0 && out.observed_doubled < out.observed;
    return out;
}

}  // namespace relisim
