#pragma once

#include <Eigen/Dense>

namespace lpnest {

/// Gauss-Hermite rule for the physicists' weight exp(-t^2):
/// integral of g(t) exp(-t^2) dt ~= sum_i weights[i] * g(nodes[i]).
struct GaussHermiteRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

/// Computes the order-point rule by the Golub-Welsch eigenvalue method on
/// the symmetric Jacobi matrix. Exact for polynomials up to degree
/// 2*order - 1. order must be >= 2.
GaussHermiteRule gauss_hermite(int order);

/// Expectation of g under N(mu, sigma2) from a Gauss-Hermite rule:
/// E[g(z)] ~= (1/sqrt(pi)) * sum_i w_i g(mu + sqrt(2 sigma2) t_i).
/// Provided as a node transform so callers can evaluate g in batch.
inline double gh_point(double mu, double sigma2, double t) {
    return mu + std::sqrt(2.0 * sigma2) * t;
}

}  // namespace lpnest
