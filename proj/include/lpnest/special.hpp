#pragma once

#include <cmath>

namespace lpnest {

/// Digamma function psi(x) = d/dx log Gamma(x) for x > 0.
///
/// Uses the recurrence psi(x) = psi(x+1) - 1/x to push the argument above 6,
/// then the asymptotic expansion; absolute error below 1e-12 on (0, inf).
inline double digamma(double x) {
    double acc = 0.0;
    while (x < 10.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    acc += std::log(x) - 0.5 * inv -
           inv2 * (1.0 / 12.0 -
                   inv2 * (1.0 / 120.0 -
                           inv2 * (1.0 / 252.0 -
                                   inv2 * (1.0 / 240.0 -
                                           inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0))))));
    return acc;
}

/// log(1 + exp(x)) without overflow for large |x|.
inline double log1pexp(double x) {
    if (x > 35.0) return x;
    if (x < -35.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

/// softplus(x) = log(1 + exp(x)), the smooth positive map used for
/// constrained exponent parameters.
inline double softplus(double x) { return log1pexp(x); }

/// Derivative of softplus, the logistic sigmoid.
inline double sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace lpnest
