#include "lpnest/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace lpnest {

GaussHermiteRule gauss_hermite(int order) {
    if (order < 2) throw std::invalid_argument("gauss_hermite: order must be >= 2");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        const double off = std::sqrt(k / 2.0);
        jacobi(k, k - 1) = off;
        jacobi(k - 1, k) = off;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    const double sqrt_pi = std::sqrt(M_PI);
    GaussHermiteRule rule;
    rule.nodes = solver.eigenvalues();
    rule.weights.resize(order);
    for (int i = 0; i < order; ++i) {
        const double v0 = solver.eigenvectors()(0, i);
        rule.weights[i] = sqrt_pi * v0 * v0;
    }
    return rule;
}

}  // namespace lpnest
