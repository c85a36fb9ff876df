#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lpnest/distribution.hpp"
#include "lpnest/nn.hpp"
#include "lpnest/rng.hpp"

namespace lpnest {

/// ISA prior configuration for a VAE: a depth-two tree with fixed root
/// exponent p0 and one exponent per subspace. When `trainable` is set the
/// subspace exponents are reparameterized as p_k = 1 + softplus(theta_k)
/// and optimized jointly with the networks (p0 stays fixed).
struct IsaPriorConfig {
    std::vector<int> sizes;
    double p0 = 2.1;
    double p_sub = 2.0;
    double s = 2.0;
    bool trainable = false;
};

/// Unconstrained parameter giving subspace exponent p = 1 + softplus(theta).
double exponent_theta_from_p(double p);
double exponent_p_from_theta(double theta);

struct VaeModel {
    Mlp encoder;
    Mlp decoder;
    int latent_dim = 0;
    /// Empty optional means a standard normal prior.
    std::optional<IsaPriorConfig> isa;
    /// One entry per subspace when the prior has trainable exponents, else empty.
    Eigen::VectorXd exponent_theta;

    /// Current subspace exponents (from theta when trainable, else p_sub).
    Eigen::VectorXd subspace_exponents() const;
    /// Materializes the ISA prior at the current exponents.
    LpNestedDistribution prior_distribution() const;
};

/// Builds a model with initialized networks; validates encoder/decoder shapes
/// against the latent dimension and the prior's leaf count.
VaeModel make_vae_model(const MlpSpec& encoder_spec, const MlpSpec& decoder_spec,
                        std::optional<IsaPriorConfig> isa, Rng& rng);

/// Splits the encoder output into per-row means and log-variances.
void encode(const VaeModel& model, const Eigen::MatrixXd& x, Eigen::MatrixXd& mu,
            Eigen::MatrixXd& logvar);

/// z = mu + exp(logvar / 2) ⊙ noise.
Eigen::MatrixXd reparameterize(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& logvar,
                               const Eigen::MatrixXd& noise);

/// Per-row Bernoulli log-likelihood Σ_pixels [x log σ(l) + (1−x) log(1−σ(l))],
/// evaluated in logit space.
Eigen::VectorXd bernoulli_recon_loglik(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& x);

/// ELBO value and gradients, all as per-image means. Gradients are of the
/// ELBO itself (ascent direction).
struct ElboResult {
    double elbo = 0.0;
    double recon = 0.0;
    double kl = 0.0;
    Eigen::VectorXd encoder_grad;
    Eigen::VectorXd decoder_grad;
    Eigen::VectorXd exponent_grad;
};

/// Standard-normal-prior objective: MC reconstruction (one draw) minus
/// beta times the analytic Gaussian KL.
ElboResult elbo_standard(const VaeModel& model, const Eigen::MatrixXd& x, double beta,
                         const Eigen::MatrixXd& noise);
ElboResult elbo_standard(const VaeModel& model, const Eigen::MatrixXd& x, double beta, Rng& rng);

/// ISA-prior objective: MC estimate of recon − beta (log q(z|x) − log p(z))
/// with reparameterized draws; one noise matrix per MC sample.
ElboResult elbo_isa(const VaeModel& model, const Eigen::MatrixXd& x, double beta,
                    const std::vector<Eigen::MatrixXd>& noise);
ElboResult elbo_isa(const VaeModel& model, const Eigen::MatrixXd& x, double beta, int mc_samples,
                    Rng& rng);

struct TrainConfig {
    double beta = 1.0;
    int epochs = 20;
    int batch_size = 2048;
    double lr = 0.001;
    double exponent_lr = 0.001;
    std::uint64_t seed = 0;
    int mc_samples = 1;
};

struct EpochStats {
    int epoch = 0;
    double elbo = 0.0;
    double recon = 0.0;
    double kl = 0.0;
    Eigen::VectorXd exponents;
};

struct TrainResult {
    VaeModel model;
    std::vector<EpochStats> trace;
    bool diverged = false;
};

/// Adam training over shuffled minibatches; epoch stats average the per-batch
/// objectives. A non-finite objective aborts and returns the trace so far.
TrainResult train_vae(VaeModel model, const Eigen::MatrixXd& images, const TrainConfig& config);

/// Encodes the seed image, sweeps coordinate `dim` over `values` around the
/// posterior mean, decodes each point. Rows are sigmoid pixel probabilities.
Eigen::MatrixXd latent_traversal(const VaeModel& model, const Eigen::VectorXd& x, int dim,
                                 const std::vector<double>& values);

/// Serialization of the full model into the nn-core checkpoint container.
Checkpoint vae_to_checkpoint(const VaeModel& model);
VaeModel vae_from_checkpoint(const Checkpoint& checkpoint);

}  // namespace lpnest
