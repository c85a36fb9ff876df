#include "lpnest/fa_lab.hpp"

#include <cmath>
#include <stdexcept>

namespace lpnest {

namespace {

constexpr double two_pi = 6.283185307179586476925287;

void check_model(const FaModel& model, const char* where) {
    if (model.W.rows() != model.D.size())
        throw std::invalid_argument(std::string(where) + ": W rows must match D length");
    if ((model.D.array() <= 0.0).any())
        throw std::invalid_argument(std::string(where) + ": noise variances must be positive");
}

/// Second moment matrix S = mu mu^T + Sigma_x, the (1/N) sum of x x^T.
Eigen::MatrixXd second_moment(const DataStats& stats) {
    return stats.mu_x * stats.mu_x.transpose() + stats.sigma_x;
}

Eigen::Matrix2d rotation2(double theta) {
    Eigen::Matrix2d rot;
    rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    return rot;
}

}  // namespace

double fa_log_likelihood(const FaModel& model, const DataStats& stats) {
    check_model(model, "fa_log_likelihood");
    const Eigen::Index l = model.W.rows();
    Eigen::MatrixXd sigma = model.W * model.W.transpose();
    sigma.diagonal() += model.D;
    const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("fa_log_likelihood: model covariance not positive definite");
    double log_det = l * std::log(two_pi);
    for (Eigen::Index i = 0; i < l; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
    const double quad = llt.solve(second_moment(stats)).trace();
    return -0.5 * stats.N * (log_det + quad);
}

FaPosterior fa_posterior(const FaModel& model, const Eigen::VectorXd& x) {
    check_model(model, "fa_posterior");
    const Eigen::MatrixXd wt_dinv = model.W.transpose() * model.D.cwiseInverse().asDiagonal();
    Eigen::MatrixXd precision = wt_dinv * model.W;
    precision.diagonal().array() += 1.0;
    FaPosterior posterior;
    posterior.cov = precision.llt().solve(Eigen::MatrixXd::Identity(model.W.cols(), model.W.cols()));
    posterior.mean = posterior.cov * (wt_dinv * x);
    return posterior;
}

MeanFieldQ fa_mean_field(const FaModel& model, double beta) {
    check_model(model, "fa_mean_field");
    if (!(beta > 0.0)) throw std::invalid_argument("fa_mean_field: beta must be positive");
    const double m = 1.0 / beta;
    const Eigen::MatrixXd wt_dinv = model.W.transpose() * model.D.cwiseInverse().asDiagonal();
    Eigen::MatrixXd precision = m * wt_dinv * model.W;
    precision.diagonal().array() += 1.0;
    const Eigen::MatrixXd stilde =
        precision.llt().solve(Eigen::MatrixXd::Identity(model.W.cols(), model.W.cols()));
    MeanFieldQ q;
    q.R = stilde * (m * wt_dinv);
    q.sigma_q = precision.diagonal().cwiseInverse();
    return q;
}

FaFreeEnergyParts fa_free_energy_parts(const FaModel& model, const MeanFieldQ& q,
                                       const DataStats& stats) {
    check_model(model, "fa_free_energy");
    const Eigen::Index l = model.W.rows();
    const Eigen::MatrixXd s = second_moment(stats);
    const Eigen::MatrixXd residual_map = Eigen::MatrixXd::Identity(l, l) - model.W * q.R;
    const Eigen::MatrixXd dinv = model.D.cwiseInverse().asDiagonal();
    const Eigen::MatrixXd a = model.W.transpose() * dinv * model.W;

    FaFreeEnergyParts parts;
    const double log_det_noise = (model.D.array() * two_pi).log().sum();
    parts.recon = -0.5 * stats.N *
                  ((residual_map.transpose() * dinv * residual_map * s).trace() +
                   log_det_noise + (a.diagonal().array() * q.sigma_q.array()).sum());
    parts.kl = 0.5 * stats.N *
               ((q.sigma_q.array() - 1.0 - q.sigma_q.array().log()).sum() +
                (q.R.transpose() * q.R * s).trace());
    return parts;
}

double fa_free_energy(const FaModel& model, const MeanFieldQ& q, const DataStats& stats,
                      double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("fa_free_energy: beta must be positive");
    const FaFreeEnergyParts parts = fa_free_energy_parts(model, q, stats);
    return parts.recon - beta * parts.kl;
}

RotationCurve fa_rotation_experiment(const FaModel& model, const DataStats& stats, double beta,
                                     const Eigen::VectorXd& theta_grid) {
    check_model(model, "fa_rotation_experiment");
    if (model.W.rows() != 2 || model.W.cols() != 2)
        throw std::invalid_argument("fa_rotation_experiment: benchmark requires L = K = 2");
    const Eigen::MatrixXd gram = model.W.transpose() * model.W;
    if (std::abs(gram(0, 1)) > 1e-9 * std::sqrt(gram(0, 0) * gram(1, 1)))
        throw std::invalid_argument("fa_rotation_experiment: W_ML columns must be orthogonal");
    RotationCurve curve;
    curve.theta = theta_grid;
    curve.logl.resize(theta_grid.size());
    curve.free_energy.resize(theta_grid.size());
    for (Eigen::Index i = 0; i < theta_grid.size(); ++i) {
        FaModel rotated = model;
        rotated.W = model.W * rotation2(theta_grid[i]);
        const MeanFieldQ q = fa_mean_field(rotated, beta);
        curve.logl[i] = fa_log_likelihood(rotated, stats);
        curve.free_energy[i] = fa_free_energy(rotated, q, stats, beta);
    }
    return curve;
}

Eigen::MatrixXd fa_pruning_weights(double alpha, double rho) {
    if (alpha < 0.0 || alpha > 0.5)
        throw std::invalid_argument("fa_pruning_weights: alpha must lie in [0, 1/2]");
    const double b = std::sqrt(1.0 - alpha * alpha);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    Eigen::MatrixXd w(2, 3);
    w << alpha * inv_sqrt2, b * inv_sqrt2, rho * inv_sqrt2,
         alpha * inv_sqrt2, b * inv_sqrt2, -rho * inv_sqrt2;
    return w;
}

DataStats fa_pruning_stats(double rho, double noise_var, int N) {
    const Eigen::MatrixXd w = fa_pruning_weights(0.0, rho);
    DataStats stats;
    stats.mu_x = Eigen::VectorXd::Zero(2);
    stats.sigma_x = w * w.transpose();
    stats.sigma_x.diagonal().array() += noise_var;
    stats.N = N;
    return stats;
}

PruningCurve fa_pruning_experiment(const Eigen::VectorXd& alpha_grid, double rho,
                                   const DataStats& stats, double noise_var, double beta) {
    PruningCurve curve;
    curve.alpha = alpha_grid;
    curve.logl.resize(alpha_grid.size());
    curve.free_energy.resize(alpha_grid.size());
    for (Eigen::Index i = 0; i < alpha_grid.size(); ++i) {
        FaModel model;
        model.W = fa_pruning_weights(alpha_grid[i], rho);
        model.D = Eigen::VectorXd::Constant(2, noise_var);
        const MeanFieldQ q = fa_mean_field(model, beta);
        curve.logl[i] = fa_log_likelihood(model, stats);
        curve.free_energy[i] = fa_free_energy(model, q, stats, beta);
    }
    return curve;
}

BetaSweep fa_beta_sweep(const FaModel& model, const DataStats& stats,
                        const std::vector<double>& betas, const Eigen::VectorXd& theta_grid) {
    BetaSweep sweep;
    sweep.betas = betas;
    for (double beta : betas) {
        RotationCurve curve = fa_rotation_experiment(model, stats, beta, theta_grid);
        const Eigen::VectorXd scaled = curve.free_energy / beta;
        sweep.amplitude.push_back(scaled.maxCoeff() - scaled.minCoeff());
        sweep.curves.push_back(std::move(curve));
    }
    return sweep;
}

FaModel fa_benchmark_model() {
    FaModel model;
    model.W.resize(2, 2);
    model.W << 1.5, 0.0, 0.0, 0.7;
    model.D = Eigen::VectorXd::Constant(2, 0.1);
    return model;
}

DataStats fa_benchmark_stats(int N, std::uint64_t seed) {
    const FaModel model = fa_benchmark_model();
    Rng rng(seed);
    Eigen::MatrixXd data(N, 2);
    for (int row = 0; row < N; ++row) {
        const Eigen::Vector2d z(rng.normal(), rng.normal());
        const Eigen::Vector2d noise(rng.normal(), rng.normal());
        data.row(row) =
            (model.W * z + model.D.cwiseSqrt().asDiagonal() * noise).transpose();
    }
    DataStats stats;
    stats.N = N;
    stats.mu_x = data.colwise().mean();
    const Eigen::MatrixXd centered = data.rowwise() - stats.mu_x.transpose();
    stats.sigma_x = centered.transpose() * centered / static_cast<double>(N);
    return stats;
}

}  // namespace lpnest
