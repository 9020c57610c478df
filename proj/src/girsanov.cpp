#include "relisim/girsanov.hpp"

#include <cmath>
#include <limits>

#include "relisim/error.hpp"

namespace relisim {

WeightProcess::WeightProcess(double y0) : y0_(y0) {
    if (!(y0 > 0.0) || !std::isfinite(y0)) throw DomainError("initial weight y0 must be positive and finite");
}

void WeightProcess::step(std::span<const double> u, std::span<const double> dw_tilde, double step) {
    if (u.size() != dw_tilde.size()) throw DomainError("control and increment dimensions differ");
    if (!(step > 0.0)) throw DomainError("weight step must be positive");
    double dot = 0.0;
    double norm2 = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        if (!std::isfinite(u[j])) throw StepError(std::numeric_limits<double>::quiet_NaN(), "control");
        dot += u[j] * dw_tilde[j];
        norm2 += u[j] * u[j];
    }
    stochastic_integral_ -= dot;
    quad_term_ += 0.5 * norm2 * step;
}

double WeightProcess::ratio() const noexcept { return std::exp(log_weight()); }

WeightProcess weight_step(WeightProcess wp, std::span<const double> u, std::span<const double> dw_tilde,
                          double step) {
    wp.step(u, dw_tilde, step);
    return wp;
}

double weight_sde_step(double y, std::span<const double> u, std::span<const double> dw_tilde) {
    if (u.size() != dw_tilde.size()) throw DomainError("control and increment dimensions differ");
    double dot = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) dot += u[j] * dw_tilde[j];
    return y - y * dot;
}

MartingaleCheck martingale_check(std::span<const double> weights, double tol_sigma) {
    if (weights.empty()) throw DomainError("martingale check needs at least one weight");
    MartingaleCheck out;
    out.count = weights.size();
    double sum = 0.0;
    bool any_positive = false;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("weights must be finite and non-negative");
        any_positive = any_positive || w > 0.0;
        sum += w;
    }
    const double m = static_cast<double>(weights.size());
    out.mean = sum / m;
    if (!any_positive) {
        out.diagnostic = "all weights are zero; the control is pathological";
        out.z = -std::numeric_limits<double>::infinity();
        return out;
    }
    double ss = 0.0;
    for (double w : weights) ss += (w - out.mean) * (w - out.mean);
    const double var = weights.size() > 1 ? ss / (m - 1.0) : 0.0;
    out.std_error = std::sqrt(var / m);
    const double gap = out.mean - 1.0;
    if (out.std_error > 0.0) {
        out.z = gap / out.std_error;
    } else {
        out.z = gap == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), gap);
    }
    out.pass = std::abs(gap) <= tol_sigma * out.std_error;
    return out;
}

}  // namespace relisim
