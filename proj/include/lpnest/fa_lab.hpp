#pragma once

#include "lpnest/rng.hpp"

#include <Eigen/Dense>
#include <vector>

namespace lpnest {

/// Linear-Gaussian factor analysis model x = W z + eps, eps ~ N(0, diag(D)),
/// z ~ N(0, I).
struct FaModel {
    Eigen::MatrixXd W;  // L x K loading weights
    Eigen::VectorXd D;  // length-L observation noise variances, all > 0
};

/// Sufficient statistics of a dataset: empirical mean, empirical covariance
/// (1/N normalization), and the count.
struct DataStats {
    Eigen::VectorXd mu_x;
    Eigen::MatrixXd sigma_x;
    int N = 0;
};

/// Factorized Gaussian posterior family q(z_n) = N(R x_n, diag(sigma_q));
/// recognition weights and variances are shared across data points.
struct MeanFieldQ {
    Eigen::MatrixXd R;        // K x L recognition weights
    Eigen::VectorXd sigma_q;  // length-K posterior variances
};

/// Exact log-likelihood of the weights under the marginal
/// x ~ N(0, W W^T + diag(D)), evaluated from the data statistics:
/// -(N/2) [log det(2 pi Sigma) + trace(Sigma^{-1} (mu mu^T + Sigma_x))].
double fa_log_likelihood(const FaModel& model, const DataStats& stats);

/// Exact posterior N(mean, cov) of z given one observation:
/// cov = (W^T D^{-1} W + I)^{-1}, mean = cov W^T D^{-1} x.
struct FaPosterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};
FaPosterior fa_posterior(const FaModel& model, const Eigen::VectorXd& x);

/// Mean-field family for the beta-weighted objective with M(beta) = 1/beta:
/// Sigma_q^{-1} = diag(M W^T D^{-1} W + I), and means R x matching the
/// beta-modified true posterior means via the full
/// Stilde = (M W^T D^{-1} W + I)^{-1}, R = Stilde M W^T D^{-1}. This pair is
/// the fixed point of coordinate ascent on recon - beta * KL over factorized
/// Gaussians.
MeanFieldQ fa_mean_field(const FaModel& model, double beta);

/// E_q[log p(x|z)] - beta * KL(q || p), from the closed-form trace
/// expressions over DataStats; no per-point loop.
double fa_free_energy(const FaModel& model, const MeanFieldQ& q, const DataStats& stats,
                      double beta);

/// Reconstruction and KL parts of the free energy, for callers that need
/// them separately (the beta sweep reports amplitudes of F/beta).
struct FaFreeEnergyParts {
    double recon = 0.0;
    double kl = 0.0;
};
FaFreeEnergyParts fa_free_energy_parts(const FaModel& model, const MeanFieldQ& q,
                                       const DataStats& stats);

/// One rotation curve: theta grid, constant logL, and F(theta).
struct RotationCurve {
    Eigen::VectorXd theta;
    Eigen::VectorXd logl;
    Eigen::VectorXd free_energy;
};

/// Experiment 1: sweeps W(theta) = W_ML Rot(theta) over the grid, refitting
/// the mean-field q at each point. W_ML must have orthogonal columns (the
/// latent-side rotation keeps W W^T and hence logL exactly constant).
RotationCurve fa_rotation_experiment(const FaModel& model, const DataStats& stats, double beta,
                                     const Eigen::VectorXd& theta_grid);

/// Experiment 2 curve: alpha grid, constant logL, and F(alpha).
struct PruningCurve {
    Eigen::VectorXd alpha;
    Eigen::VectorXd logl;
    Eigen::VectorXd free_energy;
};

/// Experiment 2: the 2-observation / 3-latent family
/// x = (alpha/sqrt2)(1,1) z1 + (b/sqrt2)(1,1) z2 + (rho/sqrt2)(1,-1) z3 + eps
/// with alpha^2 + b^2 = 1, so every alpha implies the same covariance. The
/// stats default to the population model covariance (see fa_pruning_stats).
PruningCurve fa_pruning_experiment(const Eigen::VectorXd& alpha_grid, double rho,
                                   const DataStats& stats, double noise_var = 0.1,
                                   double beta = 1.0);

/// Loading matrix of the pruning family at a given alpha.
Eigen::MatrixXd fa_pruning_weights(double alpha, double rho);

/// Population statistics of the pruning family (mu = 0, Sigma_x = W W^T + D),
/// which make the alpha = 0 bound exactly tight.
DataStats fa_pruning_stats(double rho, double noise_var = 0.1, int N = 200);

/// Experiment 3: rotation curves for several betas. amplitude[b] is the
/// peak-to-trough fluctuation of F_b / beta_b, the appendix's replicated-data
/// normalization under which the amplitude shrinks monotonically in beta
/// (raw F keeps the same argmax but not the monotone amplitude).
struct BetaSweep {
    std::vector<double> betas;
    std::vector<RotationCurve> curves;
    std::vector<double> amplitude;
};
BetaSweep fa_beta_sweep(const FaModel& model, const DataStats& stats,
                        const std::vector<double>& betas, const Eigen::VectorXd& theta_grid);

/// The fixed benchmark: W_ML = [[1.5, 0], [0, 0.7]], D = 0.1 I, N = 200
/// observations drawn from the model with the given seed.
FaModel fa_benchmark_model();
DataStats fa_benchmark_stats(int N = 200, std::uint64_t seed = 7);

}  // namespace lpnest
