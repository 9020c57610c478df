#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace relisim {

/**
 * Running likelihood ratio dP/dQ along a controlled trajectory:
 *
 *   log y(t)/y0 = -sum_j int u_j dw~_j  -  1/2 int |u|^2 ds
 *
 * kept as its two parts so that log_weight() == stochastic_integral - quad_term
 * holds exactly at every step.
 */
class WeightProcess {
public:
    explicit WeightProcess(double y0 = 1.0);

    /// Accumulate one Euler step of length `step` with control `u` and tilted increment `dw_tilde`.
    void step(std::span<const double> u, std::span<const double> dw_tilde, double step);

    double y0() const noexcept { return y0_; }
    double stochastic_integral() const noexcept { return stochastic_integral_; }
    double quad_term() const noexcept { return quad_term_; }
    double log_weight() const noexcept { return stochastic_integral_ - quad_term_; }
    /// y(t)/y0; always >= 0.
    double ratio() const noexcept;
    double y() const noexcept { return y0_ * ratio(); }

private:
    double y0_;
    double stochastic_integral_ = 0.0;
    double quad_term_ = 0.0;
};

/// Functional form of WeightProcess::step.
WeightProcess weight_step(WeightProcess wp, std::span<const double> u, std::span<const double> dw_tilde, double step);

/// One Euler step of the weight SDE dy = -y (u . dw~). Cross-check only; can go negative.
double weight_sde_step(double y, std::span<const double> u, std::span<const double> dw_tilde);

struct MartingaleCheck {
    bool pass = false;
    double mean = 0.0;
    double std_error = 0.0;
    double z = 0.0;
    std::size_t count = 0;
    std::string diagnostic;  // non-empty when the weights are degenerate
};

/// Tests E_Q[y/y0] = 1: pass iff |mean - 1| <= tol_sigma * stderr.
MartingaleCheck martingale_check(std::span<const double> weights, double tol_sigma);

}  // namespace relisim
