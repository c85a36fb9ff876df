#pragma once

#include "lpnest/rng.hpp"
#include "lpnest/tree.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace lpnest {

/// Parameters of the radial density psi0 over v0 = f(z):
/// psi0(v0) = p0 v0^{n-1} / (Gamma(n/p0) s^{n/p0}) * exp(-v0^{p0} / s).
struct RadialParams {
    double p0 = 2.0;
    double s = 2.0;
    int n = 1;

    RadialParams(double p0_in, double s_in, int n_in);
};

/// L^p-nested symmetric distribution: tree-defined f(z) plus the
/// generalized-Chi radial density. The root exponent and dimension of the
/// radial part always mirror the tree.
struct LpNestedDistribution {
    LpTree tree;
    RadialParams radial;

    LpNestedDistribution(LpTree tree_in, double s);
};

/// Flat-tree special case of the exponential-power (generalized Gaussian)
/// ICA prior; tau of the unnormalized form exp(-tau ||z||_p^p) is 1/s.
struct GeneralizedGaussianSpec {
    double p = 2.0;
    double s = 2.0;

    double tau() const { return 1.0 / s; }

    /// The corresponding normalized distribution on n dimensions.
    LpNestedDistribution distribution(int n) const;
};

/// log S_f(1) of Eq. 7 for the unit radius; finite for dimensions far beyond
/// Gamma-overflow range because everything stays in log space.
double log_surface_area(const LpTree& tree);

/// log S_f(R) = (n-1) log R + log S_f(1).
double log_surface_area(const LpTree& tree, double R);

/// S_f(R) itself; overflows to +inf for very large n, use the log form there.
double surface_area(const LpTree& tree, double R);

/// Derivative of log S_f(1) with respect to each inner-node exponent, in
/// node_counts pre-order.
std::vector<double> grad_log_surface_area_exponents(const LpTree& tree);

/// log psi0(v0); v0 must be >= 0. At v0 = 0 the value is the correct limit
/// (-inf when n > 1).
double log_radial_density(double v0, const RadialParams& radial);

/// log p(z) of Eq. 6 in the cancelled closed form
/// log p0 - lgamma(n/p0) - (n/p0) log s - f(z)^{p0}/s - log S_f(1),
/// which is finite at z = 0 and exact elsewhere.
double log_density(const LpNestedDistribution& dist, const Eigen::VectorXd& z);

/// d log p / dz = -(p0/s) f^{p0-1} grad_f(z); zero subgradient at kinks.
Eigen::VectorXd grad_log_density(const LpNestedDistribution& dist, const Eigen::VectorXd& z);

/// d log p / dp_i for every inner node in node_counts pre-order, including
/// the root exponent (index 0). Covers both the f(z)^{p0}/s term and the
/// normalizer.
std::vector<double> grad_log_density_exponents(const LpNestedDistribution& dist,
                                               const Eigen::VectorXd& z);

enum class SampleMode {
    /// Algorithm 1 verbatim, including the step-1 Beta(n,1) radius that
    /// step 5 supersedes.
    verbatim,
    /// Skips the step-1 draw (v0 = 1); identical in distribution because
    /// step 4 renormalizes whatever radius step 1 produced.
    fast,
};

/// count i.i.d. rows from the distribution via the exact sampling algorithm.
Eigen::MatrixXd sample(const LpNestedDistribution& dist, Rng& rng, int count,
                       SampleMode mode = SampleMode::verbatim);

/// p = 2 / (1 + kappa): exponent of the generalized Gaussian with kurtosis
/// parameter kappa > -1.
double kurtosis_to_p(double kappa);

}  // namespace lpnest
