#pragma once

#include "lpnest/quadrature.hpp"
#include "lpnest/rng.hpp"

#include <Eigen/Dense>
#include <vector>

namespace lpnest {

/// Over-complete linear ICA generative model: z_k ~ Student-t(0, sigma, v)
/// i.i.d., x ~ N(W z, diag(D)).
struct IcaModel {
    Eigen::MatrixXd W;  // L x K
    Eigen::VectorXd D;  // length-L noise variances
    double sigma = 1.0;
    double v = 3.5;
};

/// Per-datapoint factorized Gaussian posteriors q(z_n) with means mu and
/// log-variances log_sigma2, both N x K.
struct IcaQ {
    Eigen::MatrixXd mu;
    Eigen::MatrixXd log_sigma2;
};

/// Location-zero Student-t log-density with scale sigma and dof v.
double student_t_log_density(double z, double sigma, double v);

/// d/dz of the same log-density.
double student_t_dlog_density(double z, double sigma, double v);

struct IcaFreeEnergy {
    double value = 0.0;
    double recon = 0.0;
    double kl = 0.0;
};

/// F = recon - beta * KL. The reconstruction is the analytic Gaussian
/// expectation of the quadratic form; the KL is the analytic entropy plus a
/// per-latent cross-entropy with the prior evaluated by Gauss-Hermite
/// quadrature on the supplied rule.
IcaFreeEnergy ica_free_energy(const IcaModel& model, const IcaQ& q, const Eigen::MatrixXd& data,
                              double beta, const GaussHermiteRule& rule);

struct IcaGrads {
    Eigen::MatrixXd w;
    Eigen::MatrixXd mu;
    Eigen::MatrixXd log_sigma2;
};

/// Same value plus analytic gradients with respect to W, mu, log sigma^2.
IcaFreeEnergy ica_free_energy_grads(const IcaModel& model, const IcaQ& q,
                                    const Eigen::MatrixXd& data, double beta,
                                    const GaussHermiteRule& rule, IcaGrads& grads);

/// Joint gradient-ascent controls. The W gradient is rescaled by w_scale
/// (default 1/N) and the log sigma^2 gradient by 1/(s^2/2 + lv_damping)
/// before the shared Armijo factor; positive diagonal preconditioners keep
/// the direction an ascent direction, so every accepted step still increases
/// F. Without them the shared step is throttled by the stiffest block
/// (W curvature ~N/D, mu curvature ~1/D) and the variances crawl, which
/// stalls pruning far short of the optimum.
struct IcaFitOptions {
    int max_iters = 4000;
    int gh_order = 64;
    double armijo_c = 1e-4;
    double init_step = 1e-3;
    double step_growth = 2.0;
    double min_step = 1e-16;
    double w_scale = 0.0;  // <= 0 means 1/N
    double lv_damping = 0.01;
    double rel_tol = 1e-10;
    int patience = 25;
};

struct IcaFitResult {
    IcaModel model;
    IcaQ q;
    std::vector<double> trace;  // F after each accepted step
    int iterations = 0;
    bool stalled = false;  // step-size underflow before max_iters
};

/// Monotone joint gradient ascent on (W, mu, log sigma^2) from the supplied
/// model (the appendix protocol initializes at the true weights) with Armijo
/// backtracking (c = 1e-4, halving). q starts at the Gaussian-linearized
/// posterior of the initial model.
IcaFitResult ica_fit(const IcaModel& init, const Eigen::MatrixXd& data, double beta,
                     const IcaFitOptions& opts = {});

/// Gaussian-linearized posterior init: mu = (W^T D^-1 W + I)^-1 W^T D^-1 x,
/// shared variances from the same precision's inverse diagonal.
IcaQ ica_init_q(const IcaModel& model, const Eigen::MatrixXd& data);

/// The benchmark setup: three unit components at {0, 60, 120} degrees in 2-D,
/// sigma = 1, v = 3.5, D = 0.01 I, N draws with the given seed.
struct IcaBenchmark {
    IcaModel model;
    Eigen::MatrixXd data;  // N x 2
};
IcaBenchmark ica_benchmark(std::uint64_t seed, int N = 2000);

/// Column geometry summary. Components with norm below live_fraction of the
/// largest norm count as pruned and are excluded from the pairwise-angle
/// statistic; line angles are folded into [0, 90] degrees.
struct IcaComponentSummary {
    Eigen::VectorXd norms;
    Eigen::VectorXd angles_deg;
    double min_pairwise_angle_deg = 0.0;  // over live components
    int pruned_count = 0;
    double live_fraction = 0.05;
};
IcaComponentSummary ica_component_summary(const Eigen::MatrixXd& w,
                                          double live_fraction = 0.05);

}  // namespace lpnest
