#include "lpnest/vae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lpnest/log.hpp"
#include "lpnest/special.hpp"

namespace lpnest {

namespace {

constexpr double kLogTwoPi = 1.8378770664093453;

Eigen::ArrayXXd softplus_array(const Eigen::MatrixXd& values) {
    return values.array().unaryExpr([](double t) { return log1pexp(t); });
}

LpNestedDistribution build_isa_prior(const IsaPriorConfig& config,
                                     const Eigen::VectorXd& exponents) {
    std::vector<LpTreeNode> groups;
    int dim = 0;
    for (std::size_t k = 0; k < config.sizes.size(); ++k) {
        std::vector<LpTreeNode> leaves;
        for (int j = 0; j < config.sizes[k]; ++j) leaves.push_back(LpTreeNode::leaf(dim++));
        groups.push_back(LpTreeNode::inner(exponents[static_cast<Eigen::Index>(k)],
                                           std::move(leaves)));
    }
    LpTree tree{LpTreeNode::inner(config.p0, std::move(groups))};
    return LpNestedDistribution(std::move(tree), config.s);
}

Eigen::MatrixXd draw_noise(int rows, int cols, Rng& rng) {
    Eigen::MatrixXd noise(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) noise(r, c) = rng.normal();
    return noise;
}

}  // namespace

double exponent_theta_from_p(double p) {
    if (p <= 1.0) throw std::invalid_argument("exponent_theta_from_p: requires p > 1");
    return std::log(std::expm1(p - 1.0));
}

double exponent_p_from_theta(double theta) { return 1.0 + softplus(theta); }

Eigen::VectorXd VaeModel::subspace_exponents() const {
    if (!isa) return {};
    const Eigen::Index groups = static_cast<Eigen::Index>(isa->sizes.size());
    Eigen::VectorXd p(groups);
    if (isa->trainable) {
        for (Eigen::Index k = 0; k < groups; ++k) p[k] = exponent_p_from_theta(exponent_theta[k]);
    } else {
        p.setConstant(isa->p_sub);
    }
    return p;
}

LpNestedDistribution VaeModel::prior_distribution() const {
    if (!isa) throw std::logic_error("prior_distribution: model uses the standard normal prior");
    return build_isa_prior(*isa, subspace_exponents());
}

VaeModel make_vae_model(const MlpSpec& encoder_spec, const MlpSpec& decoder_spec,
                        std::optional<IsaPriorConfig> isa, Rng& rng) {
    VaeModel model{Mlp::initialized(encoder_spec, rng), Mlp::initialized(decoder_spec, rng)};
    model.latent_dim = model.decoder.input_dim();
    if (model.encoder.output_dim() != 2 * model.latent_dim)
        throw std::invalid_argument(
            "make_vae_model: encoder must emit 2K values for decoder input dim K");
    if (isa) {
        if (isa->sizes.empty())
            throw std::invalid_argument("make_vae_model: ISA prior needs at least one subspace");
        const int leaves = std::accumulate(isa->sizes.begin(), isa->sizes.end(), 0);
        if (leaves != model.latent_dim)
            throw std::invalid_argument(
                "make_vae_model: ISA subspace sizes must sum to the latent dimension");
        model.isa = std::move(isa);
        if (model.isa->trainable)
            model.exponent_theta =
                Eigen::VectorXd::Constant(static_cast<Eigen::Index>(model.isa->sizes.size()),
                                          exponent_theta_from_p(2.0));
    }
    return model;
}

void encode(const VaeModel& model, const Eigen::MatrixXd& x, Eigen::MatrixXd& mu,
            Eigen::MatrixXd& logvar) {
    const Eigen::MatrixXd out = model.encoder.forward(x);
    mu = out.leftCols(model.latent_dim);
    logvar = out.rightCols(model.latent_dim);
}

Eigen::MatrixXd reparameterize(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& logvar,
                               const Eigen::MatrixXd& noise) {
    if (mu.rows() != logvar.rows() || mu.cols() != logvar.cols() || mu.rows() != noise.rows() ||
        mu.cols() != noise.cols())
        throw std::invalid_argument("reparameterize: shape mismatch");
    return mu.array() + (logvar.array() / 2.0).exp() * noise.array();
}

Eigen::VectorXd bernoulli_recon_loglik(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& x) {
    if (logits.rows() != x.rows() || logits.cols() != x.cols())
        throw std::invalid_argument("bernoulli_recon_loglik: shape mismatch");
    if ((x.array() < 0.0).any() || (x.array() > 1.0).any())
        throw std::invalid_argument("bernoulli_recon_loglik: pixel values must lie in [0,1]");
    // x log sigma(l) + (1-x) log(1-sigma(l)) = -x softplus(-l) - (1-x) softplus(l)
    const Eigen::ArrayXXd loss =
        x.array() * softplus_array(-logits) + (1.0 - x.array()) * softplus_array(logits);
    return -loss.rowwise().sum().matrix();
}

ElboResult elbo_standard(const VaeModel& model, const Eigen::MatrixXd& x, double beta,
                         const Eigen::MatrixXd& noise) {
    if (model.isa)
        throw std::invalid_argument("elbo_standard: model has an L^p-nested prior");
    const double batch = static_cast<double>(x.rows());
    Mlp::Cache enc_cache;
    const Eigen::MatrixXd enc_out = model.encoder.forward(x, enc_cache);
    const Eigen::MatrixXd mu = enc_out.leftCols(model.latent_dim);
    const Eigen::MatrixXd logvar = enc_out.rightCols(model.latent_dim);
    const Eigen::MatrixXd z = reparameterize(mu, logvar, noise);

    Mlp::Cache dec_cache;
    const Eigen::MatrixXd logits = model.decoder.forward(z, dec_cache);

    ElboResult result;
    result.recon = bernoulli_recon_loglik(logits, x).mean();
    result.kl =
        0.5 * (mu.array().square() + logvar.array().exp() - logvar.array() - 1.0).sum() / batch;
    result.elbo = result.recon - beta * result.kl;

    const Eigen::MatrixXd dlogits =
        (x.array() - logits.array().unaryExpr([](double t) { return sigmoid(t); })).matrix() /
        batch;
    result.decoder_grad = Eigen::VectorXd::Zero(model.decoder.param_count());
    const Eigen::MatrixXd dz = model.decoder.backward(dec_cache, dlogits, result.decoder_grad);

    Eigen::MatrixXd enc_out_grad(x.rows(), 2 * model.latent_dim);
    enc_out_grad.leftCols(model.latent_dim) = dz - (beta / batch) * mu;
    enc_out_grad.rightCols(model.latent_dim) =
        (dz.array() * 0.5 * (z - mu).array() -
         (beta / (2.0 * batch)) * (logvar.array().exp() - 1.0))
            .matrix();
    result.encoder_grad = Eigen::VectorXd::Zero(model.encoder.param_count());
    model.encoder.backward(enc_cache, enc_out_grad, result.encoder_grad);
    return result;
}

ElboResult elbo_standard(const VaeModel& model, const Eigen::MatrixXd& x, double beta, Rng& rng) {
    return elbo_standard(model, x, beta,
                         draw_noise(static_cast<int>(x.rows()), model.latent_dim, rng));
}

ElboResult elbo_isa(const VaeModel& model, const Eigen::MatrixXd& x, double beta,
                    const std::vector<Eigen::MatrixXd>& noise) {
    if (!model.isa) throw std::invalid_argument("elbo_isa: model uses the standard normal prior");
    if (noise.empty()) throw std::invalid_argument("elbo_isa: need at least one noise draw");
    const LpNestedDistribution prior = model.prior_distribution();
    const double batch = static_cast<double>(x.rows());
    const double draws = static_cast<double>(noise.size());
    const double scale = 1.0 / (batch * draws);
    const bool trainable = model.isa->trainable;

    Mlp::Cache enc_cache;
    const Eigen::MatrixXd enc_out = model.encoder.forward(x, enc_cache);
    const Eigen::MatrixXd mu = enc_out.leftCols(model.latent_dim);
    const Eigen::MatrixXd logvar = enc_out.rightCols(model.latent_dim);

    ElboResult result;
    result.decoder_grad = Eigen::VectorXd::Zero(model.decoder.param_count());
    result.encoder_grad = Eigen::VectorXd::Zero(model.encoder.param_count());
    if (trainable) result.exponent_grad = Eigen::VectorXd::Zero(model.exponent_theta.size());
    Eigen::MatrixXd enc_out_grad = Eigen::MatrixXd::Zero(x.rows(), 2 * model.latent_dim);

    for (const Eigen::MatrixXd& eps : noise) {
        const Eigen::MatrixXd z = reparameterize(mu, logvar, eps);
        Mlp::Cache dec_cache;
        const Eigen::MatrixXd logits = model.decoder.forward(z, dec_cache);
        result.recon += bernoulli_recon_loglik(logits, x).sum() * scale;

        // log q(z|x) at the reparameterized point: the quadratic term is eps^2
        const double logq = (-0.5 * (kLogTwoPi + eps.array().square()) - 0.5 * logvar.array())
                                .sum();
        double logp = 0.0;
        Eigen::MatrixXd dlogp_dz(z.rows(), z.cols());
        for (Eigen::Index r = 0; r < z.rows(); ++r) {
            const Eigen::VectorXd row = z.row(r).transpose();
            logp += log_density(prior, row);
            dlogp_dz.row(r) = grad_log_density(prior, row).transpose();
            if (trainable) {
                const std::vector<double> dp = grad_log_density_exponents(prior, row);
                for (Eigen::Index k = 0; k < result.exponent_grad.size(); ++k)
                    result.exponent_grad[k] += beta * scale * dp[static_cast<std::size_t>(k) + 1] *
                                               sigmoid(model.exponent_theta[k]);
            }
        }
        result.kl += (logq - logp) * scale;

        const Eigen::MatrixXd dlogits =
            (x.array() - logits.array().unaryExpr([](double t) { return sigmoid(t); })).matrix() *
            scale;
        const Eigen::MatrixXd dz_recon = model.decoder.backward(dec_cache, dlogits,
                                                                result.decoder_grad);
        // total derivatives at fixed eps: d(logq)/dmu = 0, d(logq)/dlogvar = -1/2
        const Eigen::MatrixXd dz_total = dz_recon + beta * scale * dlogp_dz;
        enc_out_grad.leftCols(model.latent_dim) += dz_total;
        enc_out_grad.rightCols(model.latent_dim) +=
            (dz_total.array() * 0.5 * (z - mu).array() + beta * scale * 0.5).matrix();
    }
    model.encoder.backward(enc_cache, enc_out_grad, result.encoder_grad);
    result.elbo = result.recon - beta * result.kl;
    return result;
}

ElboResult elbo_isa(const VaeModel& model, const Eigen::MatrixXd& x, double beta, int mc_samples,
                    Rng& rng) {
    if (mc_samples < 1) throw std::invalid_argument("elbo_isa: mc_samples must be positive");
    std::vector<Eigen::MatrixXd> noise;
    noise.reserve(static_cast<std::size_t>(mc_samples));
    for (int s = 0; s < mc_samples; ++s)
        noise.push_back(draw_noise(static_cast<int>(x.rows()), model.latent_dim, rng));
    return elbo_isa(model, x, beta, noise);
}

TrainResult train_vae(VaeModel model, const Eigen::MatrixXd& images, const TrainConfig& config) {
    if (images.rows() == 0) throw std::invalid_argument("train_vae: empty dataset");
    if (images.cols() != model.encoder.input_dim())
        throw std::invalid_argument("train_vae: image width must match the encoder input");
    if (config.beta <= 0.0) throw std::invalid_argument("train_vae: beta must be positive");
    if (config.epochs < 1 || config.batch_size < 1)
        throw std::invalid_argument("train_vae: epochs and batch_size must be positive");

    Rng root(config.seed);
    Rng shuffle_rng = root.fork(1);
    Rng noise_rng = root.fork(2);

    AdamState enc_adam(model.encoder.param_count(), config.lr);
    AdamState dec_adam(model.decoder.param_count(), config.lr);
    AdamState theta_adam(model.exponent_theta.size(), config.exponent_lr);

    std::vector<EpochStats> trace;
    const Eigen::Index n = images.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        for (Eigen::Index i = n - 1; i > 0; --i) {
            const Eigen::Index j =
                static_cast<Eigen::Index>(shuffle_rng.uniform() * static_cast<double>(i + 1));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }
        double epoch_elbo = 0.0, epoch_recon = 0.0, epoch_kl = 0.0;
        for (Eigen::Index start = 0; start < n; start += config.batch_size) {
            const Eigen::Index size = std::min<Eigen::Index>(config.batch_size, n - start);
            Eigen::MatrixXd batch(size, images.cols());
            for (Eigen::Index r = 0; r < size; ++r)
                batch.row(r) = images.row(order[static_cast<std::size_t>(start + r)]);

            ElboResult step;
            try {
                step = model.isa ? elbo_isa(model, batch, config.beta, config.mc_samples,
                                            noise_rng)
                                 : elbo_standard(model, batch, config.beta, noise_rng);
            } catch (const std::runtime_error& err) {
                log::error(std::string("train aborting: ") + err.what());
                return {std::move(model), std::move(trace), true};
            }
            if (!std::isfinite(step.elbo)) {
                log::error("train aborting: non-finite objective");
                return {std::move(model), std::move(trace), true};
            }
            const double weight = static_cast<double>(size) / static_cast<double>(n);
            epoch_elbo += weight * step.elbo;
            epoch_recon += weight * step.recon;
            epoch_kl += weight * step.kl;

            adam_step(enc_adam, model.encoder.params(), -step.encoder_grad);
            adam_step(dec_adam, model.decoder.params(), -step.decoder_grad);
            if (model.isa && model.isa->trainable && config.exponent_lr > 0.0)
                adam_step(theta_adam, model.exponent_theta, -step.exponent_grad);
        }
        EpochStats stats;
        stats.epoch = epoch;
        stats.elbo = epoch_elbo;
        stats.recon = epoch_recon;
        stats.kl = epoch_kl;
        stats.exponents = model.subspace_exponents();
        trace.push_back(std::move(stats));
        log::debug("train epoch " + std::to_string(epoch) + " elbo " +
                   std::to_string(epoch_elbo));
    }
    return {std::move(model), std::move(trace), false};
}

Eigen::MatrixXd latent_traversal(const VaeModel& model, const Eigen::VectorXd& x, int dim,
                                 const std::vector<double>& values) {
    if (dim < 0 || dim >= model.latent_dim)
        throw std::invalid_argument("latent_traversal: dim out of range");
    if (values.empty()) throw std::invalid_argument("latent_traversal: no traversal values");
    Eigen::MatrixXd mu, logvar;
    encode(model, x.transpose(), mu, logvar);
    Eigen::MatrixXd stack(static_cast<Eigen::Index>(values.size()), model.decoder.output_dim());
    Eigen::MatrixXd z = mu;
    for (std::size_t i = 0; i < values.size(); ++i) {
        z(0, dim) = values[i];
        const Eigen::MatrixXd logits = model.decoder.forward(z);
        stack.row(static_cast<Eigen::Index>(i)) =
            logits.array().unaryExpr([](double t) { return sigmoid(t); }).matrix();
    }
    return stack;
}

Checkpoint vae_to_checkpoint(const VaeModel& model) {
    Checkpoint checkpoint;
    nlohmann::json prior;
    if (model.isa) {
        prior = {{"type", "isa"},       {"sizes", model.isa->sizes},
                 {"p0", model.isa->p0}, {"p_sub", model.isa->p_sub},
                 {"s", model.isa->s},   {"trainable", model.isa->trainable}};
    } else {
        prior = {{"type", "standard"}};
    }
    std::vector<double> theta(model.exponent_theta.data(),
                              model.exponent_theta.data() + model.exponent_theta.size());
    checkpoint.header = {{"kind", "vae"},
                         {"encoder", mlp_spec_to_json(model.encoder.spec())},
                         {"decoder", mlp_spec_to_json(model.decoder.spec())},
                         {"latent_dim", model.latent_dim},
                         {"prior", std::move(prior)},
                         {"exponent_theta", std::move(theta)}};
    checkpoint.params.reserve(
        static_cast<std::size_t>(model.encoder.param_count() + model.decoder.param_count()));
    for (Eigen::Index i = 0; i < model.encoder.param_count(); ++i)
        checkpoint.params.push_back(static_cast<float>(model.encoder.params()[i]));
    for (Eigen::Index i = 0; i < model.decoder.param_count(); ++i)
        checkpoint.params.push_back(static_cast<float>(model.decoder.params()[i]));
    return checkpoint;
}

VaeModel vae_from_checkpoint(const Checkpoint& checkpoint) {
    if (checkpoint.header.value("kind", "") != "vae")
        throw std::runtime_error("vae_from_checkpoint: not a VAE checkpoint");
    VaeModel model{Mlp(mlp_spec_from_json(checkpoint.header.at("encoder"))),
                   Mlp(mlp_spec_from_json(checkpoint.header.at("decoder")))};
    model.latent_dim = checkpoint.header.at("latent_dim").get<int>();
    const nlohmann::json& prior = checkpoint.header.at("prior");
    if (prior.at("type") == "isa") {
        IsaPriorConfig isa;
        isa.sizes = prior.at("sizes").get<std::vector<int>>();
        isa.p0 = prior.at("p0").get<double>();
        isa.p_sub = prior.at("p_sub").get<double>();
        isa.s = prior.at("s").get<double>();
        isa.trainable = prior.at("trainable").get<bool>();
        model.isa = std::move(isa);
    }
    const std::vector<double> theta =
        checkpoint.header.at("exponent_theta").get<std::vector<double>>();
    model.exponent_theta =
        Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
    const Eigen::Index total = model.encoder.param_count() + model.decoder.param_count();
    if (static_cast<Eigen::Index>(checkpoint.params.size()) != total)
        throw std::runtime_error("vae_from_checkpoint: parameter blob size mismatch");
    for (Eigen::Index i = 0; i < model.encoder.param_count(); ++i)
        model.encoder.params()[i] = checkpoint.params[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 0; i < model.decoder.param_count(); ++i)
        model.decoder.params()[i] =
            checkpoint.params[static_cast<std::size_t>(model.encoder.param_count() + i)];
    return model;
}

}  // namespace lpnest
