#pragma once

#include <Eigen/Dense>

#include "lpnest/distribution.hpp"

namespace lpnest {

/// Per-datapoint diagonal Gaussian posteriors q(z|x_n); rows index datapoints.
struct GaussianMixtureQ {
    Eigen::MatrixXd mu;
    Eigen::MatrixXd logvar;
};

/// Uniform tensor-product grid over [lo, hi]^K used for the quadrature.
struct GridSpec {
    double lo = -8.0;
    double hi = 8.0;
    int points = 241;
};

struct KlDecomposition {
    double mi_term = 0.0;
    double tc_term = 0.0;
    double dimwise_term = 0.0;
    double total_kl = 0.0;
    double captured_mass = 0.0;
};

/// Integrates the three-term KL split (index-code MI, total correlation,
/// dimension-wise KL) and the directly integrated total against the aggregate
/// posterior q(z) = (1/N) sum_n q(z|x_n). Requires K <= 2, N <= 8 and a flat
/// prior tree (which factorizes over coordinates). Throws when the grid
/// captures less than 0.999 of the aggregate posterior mass.
KlDecomposition kl_decomposition_check(const GaussianMixtureQ& q,
                                       const LpNestedDistribution& prior, const GridSpec& grid);

}  // namespace lpnest
