#include "lpnest/ica_lab.hpp"

#include <cmath>
#include <stdexcept>

namespace lpnest {

namespace {

constexpr double pi = 3.141592653589793238462643;

void check_shapes(const IcaModel& model, const IcaQ& q, const Eigen::MatrixXd& data,
                  const char* where) {
    if (model.W.rows() != model.D.size())
        throw std::invalid_argument(std::string(where) + ": W rows must match D length");
    if ((model.D.array() <= 0.0).any())
        throw std::invalid_argument(std::string(where) + ": noise variances must be positive");
    if (!(model.sigma > 0.0) || !(model.v > 0.0))
        throw std::invalid_argument(std::string(where) + ": prior needs sigma > 0 and v > 0");
    if (data.cols() != model.W.rows())
        throw std::invalid_argument(std::string(where) + ": data width must match W rows");
    if (q.mu.rows() != data.rows() || q.mu.cols() != model.W.cols() ||
        q.log_sigma2.rows() != q.mu.rows() || q.log_sigma2.cols() != q.mu.cols())
        throw std::invalid_argument(std::string(where) + ": q shape mismatch");
}

/// Shared free-energy evaluation; fills grads when requested.
IcaFreeEnergy evaluate(const IcaModel& model, const IcaQ& q, const Eigen::MatrixXd& data,
                       double beta, const GaussHermiteRule& rule, IcaGrads* grads) {
    check_shapes(model, q, data, "ica_free_energy");
    if (rule.nodes.size() < 2)
        throw std::invalid_argument("ica_free_energy: quadrature order must be >= 2");
    const Eigen::Index n = data.rows();
    const Eigen::Index k = model.W.cols();

    const Eigen::ArrayXXd s2 = q.log_sigma2.array().exp();
    const Eigen::VectorXd dinv = model.D.cwiseInverse();
    const Eigen::VectorXd ck = ((model.W.array().square().colwise() * dinv.array()).colwise().sum())
                                   .transpose();
    const Eigen::MatrixXd residual = data - q.mu * model.W.transpose();

    IcaFreeEnergy out;
    out.recon = -0.5 * (residual.array().square().rowwise() * dinv.transpose().array()).sum() -
                0.5 * (s2.rowwise() * ck.transpose().array()).sum() -
                0.5 * n * (model.D.array() * 2.0 * pi).log().sum();

    const double entropy = 0.5 * (q.log_sigma2.array() + std::log(2.0 * pi) + 1.0).sum();

    // cross-entropy -E_q[log t(z)] per (n, k) via Gauss-Hermite, batched over
    // the node axis; t_const collects the z-independent log-density terms
    const double v = model.v;
    const double vs2 = v * model.sigma * model.sigma;
    const double t_const = std::lgamma((v + 1.0) / 2.0) - std::lgamma(v / 2.0) -
                           0.5 * std::log(vs2 * pi);
    const Eigen::ArrayXXd sd = s2.sqrt();
    const double inv_sqrt_pi = 1.0 / std::sqrt(pi);

    // The node loop dominates the fit runtime, so it runs without per-node
    // temporaries: the z-independent part of log t factors out and only the
    // weighted log1p sums accumulate.
    double weight_total = 0.0;
    double log1p_total = 0.0;
    Eigen::ArrayXXd dce_dmu, dce_dlv, z, work;
    if (grads != nullptr) {
        dce_dmu = Eigen::ArrayXXd::Zero(n, k);
        dce_dlv = Eigen::ArrayXXd::Zero(n, k);
        z.resize(n, k);
        work.resize(n, k);
    }
    for (Eigen::Index j = 0; j < rule.nodes.size(); ++j) {
        const double c = std::sqrt(2.0) * rule.nodes[j];
        const double w = rule.weights[j] * inv_sqrt_pi;
        weight_total += w;
        // log(1 + x) instead of log1p: x >= 0 keeps it exact to rounding and
        // Eigen vectorizes plain log for doubles.
        if (grads == nullptr) {
            log1p_total += w * (1.0 + (q.mu.array() + c * sd).square() / vs2).log().sum();
        } else {
            z = q.mu.array() + c * sd;
            work = z.square();
            log1p_total += w * (1.0 + work / vs2).log().sum();
            work = (v + 1.0) * z / (vs2 + work);  // -dlog_t
            dce_dmu += w * work;
            dce_dlv += (w * c * 0.5) * (work * sd);
        }
    }
    const double ce = 0.5 * (v + 1.0) * log1p_total -
                      t_const * weight_total * static_cast<double>(n * k);
    out.kl = ce - entropy;
    out.value = out.recon - beta * out.kl;

    if (grads != nullptr) {
        grads->w = dinv.asDiagonal() *
                       (data.transpose() * q.mu - model.W * (q.mu.transpose() * q.mu)) -
                   dinv.asDiagonal() * model.W * s2.colwise().sum().matrix().asDiagonal();
        grads->mu = residual * dinv.asDiagonal() * model.W - beta * dce_dmu.matrix();
        grads->log_sigma2 =
            (-0.5 * (s2.rowwise() * ck.transpose().array()) - beta * (dce_dlv - 0.5)).matrix();
    }
    return out;
}

}  // namespace

double student_t_log_density(double z, double sigma, double v) {
    if (!(sigma > 0.0) || !(v > 0.0))
        throw std::invalid_argument("student_t_log_density: sigma and v must be positive");
    const double vs2 = v * sigma * sigma;
    return std::lgamma((v + 1.0) / 2.0) - std::lgamma(v / 2.0) - 0.5 * std::log(vs2 * pi) -
           (v + 1.0) / 2.0 * std::log1p(z * z / vs2);
}

double student_t_dlog_density(double z, double sigma, double v) {
    if (!(sigma > 0.0) || !(v > 0.0))
        throw std::invalid_argument("student_t_dlog_density: sigma and v must be positive");
    const double vs2 = v * sigma * sigma;
    return -(v + 1.0) * z / (vs2 + z * z);
}

IcaFreeEnergy ica_free_energy(const IcaModel& model, const IcaQ& q, const Eigen::MatrixXd& data,
                              double beta, const GaussHermiteRule& rule) {
    return evaluate(model, q, data, beta, rule, nullptr);
}

IcaFreeEnergy ica_free_energy_grads(const IcaModel& model, const IcaQ& q,
                                    const Eigen::MatrixXd& data, double beta,
                                    const GaussHermiteRule& rule, IcaGrads& grads) {
    return evaluate(model, q, data, beta, rule, &grads);
}

IcaQ ica_init_q(const IcaModel& model, const Eigen::MatrixXd& data) {
    const Eigen::Index k = model.W.cols();
    const Eigen::MatrixXd wt_dinv = model.W.transpose() * model.D.cwiseInverse().asDiagonal();
    Eigen::MatrixXd precision = wt_dinv * model.W;
    precision.diagonal().array() += 1.0;
    const Eigen::MatrixXd cov = precision.llt().solve(Eigen::MatrixXd::Identity(k, k));
    IcaQ q;
    q.mu = (cov * wt_dinv * data.transpose()).transpose();
    q.log_sigma2 = Eigen::MatrixXd::Zero(data.rows(), k);
    for (Eigen::Index col = 0; col < k; ++col)
        q.log_sigma2.col(col).setConstant(std::log(cov(col, col)));
    return q;
}

IcaFitResult ica_fit(const IcaModel& init, const Eigen::MatrixXd& data, double beta,
                     const IcaFitOptions& opts) {
    if (!(beta > 0.0)) throw std::invalid_argument("ica_fit: beta must be positive");
    if (!(opts.lv_damping > 0.0))
        throw std::invalid_argument("ica_fit: lv_damping must be positive");
    const GaussHermiteRule rule = gauss_hermite(opts.gh_order);
    const double w_scale =
        opts.w_scale > 0.0 ? opts.w_scale : 1.0 / static_cast<double>(data.rows());

    IcaFitResult result;
    result.model = init;
    result.q = ica_init_q(init, data);

    IcaGrads grads;
    IcaFreeEnergy current =
        ica_free_energy_grads(result.model, result.q, data, beta, rule, grads);
    if (!std::isfinite(current.value))
        throw std::runtime_error("ica_fit: non-finite free energy at initialization");
    result.trace.push_back(current.value);

    double step = opts.init_step;
    int flat_steps = 0;
    for (int iter = 0; iter < opts.max_iters; ++iter) {
        if (!grads.w.allFinite() || !grads.mu.allFinite() || !grads.log_sigma2.allFinite())
            throw std::runtime_error("ica_fit: non-finite gradient");
        const Eigen::MatrixXd dir_w = w_scale * grads.w;
        // Inverse-curvature scaling for the variances (recon curvature in
        // log sigma^2 is ~ck*s^2/2); the damping bounds the scaling where
        // s^2 is tiny.
        const Eigen::ArrayXXd lv_scale =
            1.0 / (0.5 * result.q.log_sigma2.array().exp() + opts.lv_damping);
        const Eigen::MatrixXd dir_lv = (lv_scale * grads.log_sigma2.array()).matrix();
        const double slope = w_scale * grads.w.squaredNorm() + grads.mu.squaredNorm() +
                             (lv_scale * grads.log_sigma2.array().square()).sum();

        IcaModel candidate = result.model;
        IcaQ candidate_q = result.q;
        IcaFreeEnergy next;
        bool accepted = false;
        while (step >= opts.min_step) {
            candidate.W = result.model.W + step * dir_w;
            candidate_q.mu = result.q.mu + step * grads.mu;
            candidate_q.log_sigma2 = result.q.log_sigma2 + step * dir_lv;
            next = ica_free_energy(candidate, candidate_q, data, beta, rule);
            if (std::isfinite(next.value) &&
                next.value >= current.value + opts.armijo_c * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            result.stalled = true;
            break;
        }
        result.model = candidate;
        result.q = candidate_q;
        const double gain = next.value - current.value;
        current = ica_free_energy_grads(result.model, result.q, data, beta, rule, grads);
        result.trace.push_back(current.value);
        result.iterations = iter + 1;
        if (gain < opts.rel_tol * (std::abs(current.value) + 1.0)) {
            if (++flat_steps >= opts.patience) break;
        } else {
            flat_steps = 0;
        }
        step = std::min(step * opts.step_growth, 1.0);
    }
    return result;
}

IcaBenchmark ica_benchmark(std::uint64_t seed, int N) {
    IcaBenchmark bench;
    const double angles[3] = {0.0, pi / 3.0, 2.0 * pi / 3.0};
    bench.model.W.resize(2, 3);
    for (int k = 0; k < 3; ++k) {
        bench.model.W(0, k) = std::cos(angles[k]);
        bench.model.W(1, k) = std::sin(angles[k]);
    }
    bench.model.D = Eigen::VectorXd::Constant(2, 0.01);
    bench.model.sigma = 1.0;
    bench.model.v = 3.5;

    Rng rng(seed);
    bench.data.resize(N, 2);
    const Eigen::VectorXd noise_sd = bench.model.D.cwiseSqrt();
    for (int row = 0; row < N; ++row) {
        Eigen::Vector3d z;
        for (int k = 0; k < 3; ++k) {
            const double chi2 = rng.gamma(bench.model.v / 2.0, 2.0);
            z[k] = bench.model.sigma * rng.normal() * std::sqrt(bench.model.v / chi2);
        }
        Eigen::Vector2d x = bench.model.W * z;
        for (int l = 0; l < 2; ++l) x[l] += noise_sd[l] * rng.normal();
        bench.data.row(row) = x.transpose();
    }
    return bench;
}

IcaComponentSummary ica_component_summary(const Eigen::MatrixXd& w, double live_fraction) {
    IcaComponentSummary summary;
    summary.live_fraction = live_fraction;
    const Eigen::Index k = w.cols();
    summary.norms = w.colwise().norm();
    summary.angles_deg.resize(k);
    for (Eigen::Index col = 0; col < k; ++col) {
        const double deg = std::atan2(w(1, col), w(0, col)) * 180.0 / pi;
        summary.angles_deg[col] = deg < 0.0 ? deg + 180.0 : deg >= 180.0 ? deg - 180.0 : deg;
    }
    const double top = summary.norms.maxCoeff();
    std::vector<Eigen::Index> live;
    for (Eigen::Index col = 0; col < k; ++col) {
        if (summary.norms[col] >= live_fraction * top)
            live.push_back(col);
        else
            ++summary.pruned_count;
    }
    double best = 90.0;
    for (std::size_t a = 0; a + 1 < live.size(); ++a) {
        for (std::size_t b = a + 1; b < live.size(); ++b) {
            const double cosine =
                std::abs(w.col(live[a]).dot(w.col(live[b]))) /
                (summary.norms[live[a]] * summary.norms[live[b]]);
            const double angle = std::acos(std::min(cosine, 1.0)) * 180.0 / pi;
            best = std::min(best, angle);
        }
    }
    summary.min_pairwise_angle_deg = best;
    return summary;
}

}  // namespace lpnest
