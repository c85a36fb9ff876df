#pragma once

#include <vector>

#include <Eigen/Dense>

#include "lpnest/sprites.hpp"
#include "lpnest/vae.hpp"

namespace lpnest {

/// Plug-in mutual information (nats) of the empirical joint distribution of
/// two discrete sequences. Clamped at zero against estimator noise.
double discrete_mutual_information(const std::vector<int>& a, const std::vector<int>& b);

/// Plug-in entropy (nats) of a discrete sequence.
double discrete_entropy(const std::vector<int>& values);

struct MiMatrix {
    /// K×F latent-factor mutual informations in nats.
    Eigen::MatrixXd mi;
    Eigen::VectorXd factor_entropies;
};

/// Mean over factors (with positive entropy) of the normalized gap between
/// the two largest per-factor mutual informations.
double mig_score(const MiMatrix& matrix);

/// Quantile binning into `bins` bins: edges at the j·N/B order statistics.
/// Invariant under strictly monotone transformations of the values.
std::vector<int> quantile_bins(const Eigen::VectorXd& values, int bins);

/// Bins each latent column and computes MI against each factor column.
MiMatrix mi_matrix(const Eigen::MatrixXd& codes, const Eigen::MatrixXi& factors, int bins);

struct ModelEvaluation {
    double mig = 0.0;
    double recon_ll = 0.0;
    MiMatrix mi;
};

/// Encodes the dataset with posterior means, scores MIG over the ground-truth
/// factors, and reports the mean per-image Bernoulli log-likelihood of the
/// posterior-mean reconstructions.
ModelEvaluation evaluate_model(const VaeModel& model, const FactorDataset& dataset,
                               int bins = 20);

}  // namespace lpnest
