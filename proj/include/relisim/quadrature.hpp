#pragma once

#include <functional>

namespace relisim {

struct QuadratureResult {
    double value = 0.0;
    double abs_error = 0.0;
    int evaluations = 0;
};

/// Adaptive Gauss-Kronrod (7/15) on [a, b], bisecting the worst interval until the
/// summed error estimate drops below `abs_tol` or `max_intervals` is reached.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                           int max_intervals = 2000);

/// Integral over [a, infinity) through the substitution x = a + s / (1 - s).
QuadratureResult integrate_to_infinity(const std::function<double(double)>& f, double a, double abs_tol,
                                       int max_intervals = 2000);

}  // namespace relisim
