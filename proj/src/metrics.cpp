#include "lpnest/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace lpnest {

namespace {

constexpr double kNoiseFloor = 1e-9;

std::map<int, double> frequencies(const std::vector<int>& values) {
    std::map<int, double> freq;
    for (int v : values) freq[v] += 1.0;
    for (auto& [key, count] : freq) count /= static_cast<double>(values.size());
    return freq;
}

}  // namespace

double discrete_entropy(const std::vector<int>& values) {
    if (values.empty()) throw std::invalid_argument("discrete_entropy: empty input");
    double h = 0.0;
    for (const auto& [key, p] : frequencies(values))
        if (p > 0.0) h -= p * std::log(p);
    return std::max(0.0, h);
}

double discrete_mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.empty() || a.size() != b.size())
        throw std::invalid_argument("discrete_mutual_information: sequences must match and be non-empty");
    const std::map<int, double> pa = frequencies(a);
    const std::map<int, double> pb = frequencies(b);
    std::map<std::pair<int, int>, double> joint;
    for (std::size_t i = 0; i < a.size(); ++i) joint[{a[i], b[i]}] += 1.0;
    double mi = 0.0;
    for (const auto& [key, count] : joint) {
        const double pab = count / static_cast<double>(a.size());
        mi += pab * std::log(pab / (pa.at(key.first) * pb.at(key.second)));
    }
    if (mi < -kNoiseFloor)
        throw std::runtime_error("discrete_mutual_information: estimator went negative");
    return std::max(0.0, mi);
}

double mig_score(const MiMatrix& matrix) {
    if (matrix.mi.rows() < 2)
        throw std::invalid_argument("mig_score: need at least two latents");
    if (matrix.mi.cols() != matrix.factor_entropies.size())
        throw std::invalid_argument("mig_score: factor count mismatch");
    double sum = 0.0;
    int counted = 0;
    for (Eigen::Index f = 0; f < matrix.mi.cols(); ++f) {
        const double entropy = matrix.factor_entropies[f];
        if (entropy <= 0.0) continue;
        double best = -1.0, second = -1.0;
        for (Eigen::Index k = 0; k < matrix.mi.rows(); ++k) {
            const double v = matrix.mi(k, f);
            if (v > best) {
                second = best;
                best = v;
            } else if (v > second) {
                second = v;
            }
        }
        sum += (best - second) / entropy;
        ++counted;
    }
    return counted == 0 ? 0.0 : sum / counted;
}

std::vector<int> quantile_bins(const Eigen::VectorXd& values, int bins) {
    if (values.size() == 0) throw std::invalid_argument("quantile_bins: empty input");
    if (bins < 2) throw std::invalid_argument("quantile_bins: need at least two bins");
    std::vector<double> sorted(values.data(), values.data() + values.size());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges;
    for (int j = 1; j < bins; ++j)
        edges.push_back(sorted[static_cast<std::size_t>(j) * sorted.size() / bins]);
    std::vector<int> out(static_cast<std::size_t>(values.size()));
    for (Eigen::Index i = 0; i < values.size(); ++i)
        out[static_cast<std::size_t>(i)] = static_cast<int>(
            std::upper_bound(edges.begin(), edges.end(), values[i]) - edges.begin());
    return out;
}

MiMatrix mi_matrix(const Eigen::MatrixXd& codes, const Eigen::MatrixXi& factors, int bins) {
    if (codes.rows() != factors.rows())
        throw std::invalid_argument("mi_matrix: codes and factors must cover the same points");
    MiMatrix out;
    out.mi.resize(codes.cols(), factors.cols());
    out.factor_entropies.resize(factors.cols());
    std::vector<std::vector<int>> factor_cols(static_cast<std::size_t>(factors.cols()));
    for (Eigen::Index f = 0; f < factors.cols(); ++f) {
        factor_cols[static_cast<std::size_t>(f)].assign(factors.col(f).data(),
                                                        factors.col(f).data() + factors.rows());
        out.factor_entropies[f] = discrete_entropy(factor_cols[static_cast<std::size_t>(f)]);
    }
    for (Eigen::Index k = 0; k < codes.cols(); ++k) {
        const std::vector<int> binned = quantile_bins(codes.col(k), bins);
        for (Eigen::Index f = 0; f < factors.cols(); ++f)
            out.mi(k, f) =
                discrete_mutual_information(binned, factor_cols[static_cast<std::size_t>(f)]);
    }
    return out;
}

ModelEvaluation evaluate_model(const VaeModel& model, const FactorDataset& dataset, int bins) {
    if (model.latent_dim < 2)
        throw std::invalid_argument("evaluate_model: need at least two latents");
    const Eigen::MatrixXd images = dataset.image_batch();
    Eigen::MatrixXd mu, logvar;
    encode(model, images, mu, logvar);
    ModelEvaluation out;
    out.mi = mi_matrix(mu, dataset.factor_matrix(), bins);
    out.mig = mig_score(out.mi);
    const Eigen::MatrixXd logits = model.decoder.forward(mu);
    out.recon_ll = bernoulli_recon_loglik(logits, images).mean();
    return out;
}

}  // namespace lpnest
