#pragma once

#include <functional>
#include <span>

namespace relisim {

/// Failure time T ~ Normal(mu, sigma^2).
struct NormalFailureModel {
    double mu = 0.0;
    double sigma = 1.0;

    void validate() const;
};

/// P_S(t) = 1 - int_0^t pdf. The pdf must integrate to 1 over [0, inf) within 1e-6.
double reliability_from_pdf(const std::function<double(double)>& pdf, double t);

double normal_pdf(const NormalFailureModel& model, double t);
/// Phi((t - mu) / sigma), evaluated as erfc(-z / sqrt 2) / 2.
double normal_cdf(const NormalFailureModel& model, double t);
/// 1 - Phi((t - mu) / sigma) without cancellation.
double normal_reliability(const NormalFailureModel& model, double t);
/// pdf / (1 - cdf); beyond z = 8 through a continued fraction for the Mills ratio.
double normal_hazard(const NormalFailureModel& model, double t);

/// prod p_i for independent components in series.
double series_reliability(std::span<const double> p);
/// 1 - prod(1 - p_i) for independent components in parallel.
double parallel_reliability(std::span<const double> p);

}  // namespace relisim
