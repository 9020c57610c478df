#include "relisim/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "relisim/error.hpp"
#include "relisim/quadrature.hpp"

namespace relisim {

namespace {

constexpr double kQuadTol = 1e-10;
constexpr double kNormTol = 1e-6;
constexpr double kSurvivalFloor = 1e-300;
constexpr double kTailSwitch = 8.0;

void check_probabilities(std::span<const double> p) {
    for (double v : p) {
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("component reliabilities must lie in [0, 1]");
    }
}

// Q(z) / phi(z) = 1 / (z + 1 / (z + 2 / (z + 3 / (z + ...)))), evaluated from the tail up.
double mills_ratio(double z) {
    double tail = z;
    for (int k = 80; k >= 1; --k) tail = z + k / tail;
    return 1.0 / tail;
}

}  // namespace

void NormalFailureModel::validate() const {
    if (!std::isfinite(mu)) throw DomainError("normal model mean must be finite");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("normal model sigma must be positive");
}

double reliability_from_pdf(const std::function<double(double)>& pdf, double t) {
    if (!(t >= 0.0)) throw DomainError("reliability time must be >= 0");
    auto checked = [&](double x) {
        const double v = pdf(x);
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("pdf must be finite and non-negative");
        return v;
    };
    const auto total = integrate_to_infinity(checked, 0.0, kQuadTol);
    if (std::abs(total.value - 1.0) > kNormTol) throw DomainError("pdf does not integrate to 1 over [0, inf)");
    if (t == 0.0) return 1.0;
    if (std::isinf(t)) return 0.0;
    // Same substitution as the normalization check, so mass near 0 is resolved even for huge t.
    auto mapped = [&](double s) {
        const double one_minus = 1.0 - s;
        const double v = checked(s / one_minus);
        return v == 0.0 ? 0.0 : v / (one_minus * one_minus);
    };
    const double upper = t / (1.0 + t);
    const double mass = integrate(mapped, 0.0, upper, kQuadTol).value;
    return std::clamp(1.0 - mass, 0.0, 1.0);
}

double normal_pdf(const NormalFailureModel& model, double t) {
    model.validate();
    const double z = (t - model.mu) / model.sigma;
    return std::exp(-0.5 * z * z) / (model.sigma * std::sqrt(2.0 * std::numbers::pi));
}

double normal_cdf(const NormalFailureModel& model, double t) {
    model.validate();
    const double z = (t - model.mu) / model.sigma;
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double normal_reliability(const NormalFailureModel& model, double t) {
    model.validate();
    const double z = (t - model.mu) / model.sigma;
    return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

double normal_hazard(const NormalFailureModel& model, double t) {
    const double survival = normal_reliability(model, t);
    if (survival < kSurvivalFloor)
        throw RangeError("survival probability below 1e-300; hazard evaluation is limited to z < ~37");
    const double z = (t - model.mu) / model.sigma;
    if (z > kTailSwitch) return 1.0 / (model.sigma * mills_ratio(z));
    return normal_pdf(model, t) / survival;
}

double series_reliability(std::span<const double> p) {
    check_probabilities(p);
    double out = 1.0;
    for (double v : p) out *= v;
    return out;
}

double parallel_reliability(std::span<const double> p) {
    check_probabilities(p);
    double down = 1.0;
    for (double v : p) down *= 1.0 - v;
    return 1.0 - down;
}

}  // namespace relisim
