#include "lpnest/kl_decomposition.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace lpnest {

namespace {

constexpr double kLogTwoPi = 1.8378770664093453;

/// 1-D marginal of the prior along one coordinate. Flat trees factorize, so
/// every marginal is the generalized Gaussian with the root exponent.
LpNestedDistribution prior_marginal(const LpNestedDistribution& dist) {
    std::vector<LpTreeNode> child;
    child.push_back(LpTreeNode::leaf(0));
    LpTree tree{LpTreeNode::inner(dist.radial.p0, std::move(child))};
    return LpNestedDistribution(std::move(tree), dist.radial.s);
}

bool is_flat(const LpTree& tree) {
    for (const LpTreeNode& child : tree.root.children)
        if (!child.is_leaf()) return false;
    return true;
}

}  // namespace

KlDecomposition kl_decomposition_check(const GaussianMixtureQ& q,
                                       const LpNestedDistribution& prior, const GridSpec& grid) {
    const Eigen::Index n = q.mu.rows();
    const Eigen::Index k = q.mu.cols();
    if (n < 1 || n > 8) throw std::invalid_argument("kl_decomposition_check: need 1 <= N <= 8");
    if (k < 1 || k > 2) throw std::invalid_argument("kl_decomposition_check: need 1 <= K <= 2");
    if (q.logvar.rows() != n || q.logvar.cols() != k)
        throw std::invalid_argument("kl_decomposition_check: mu/logvar shape mismatch");
    if (prior.tree.n != k)
        throw std::invalid_argument("kl_decomposition_check: prior dimension must equal K");
    if (!is_flat(prior.tree))
        throw std::invalid_argument(
            "kl_decomposition_check: prior tree must be flat so the density factorizes");
    if (grid.points < 16 || grid.hi <= grid.lo)
        throw std::invalid_argument("kl_decomposition_check: malformed grid");

    const Eigen::Index m = grid.points;
    const double h = (grid.hi - grid.lo) / static_cast<double>(m - 1);
    Eigen::VectorXd t(m);
    for (Eigen::Index i = 0; i < m; ++i) t[i] = grid.lo + h * static_cast<double>(i);

    // per-datapoint per-coordinate Gaussian log densities on the 1-D grid
    std::vector<std::vector<Eigen::ArrayXd>> lq(static_cast<std::size_t>(n));
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index j = 0; j < k; ++j) {
            const double var = std::exp(q.logvar(a, j));
            lq[static_cast<std::size_t>(a)].push_back(
                -0.5 * (kLogTwoPi + q.logvar(a, j)) -
                (t.array() - q.mu(a, j)).square() / (2.0 * var));
        }

    const LpNestedDistribution marginal = prior_marginal(prior);
    std::vector<Eigen::ArrayXd> lp_dim;
    for (Eigen::Index j = 0; j < k; ++j) {
        Eigen::ArrayXd lp(m);
        Eigen::VectorXd point(1);
        for (Eigen::Index i = 0; i < m; ++i) {
            point[0] = t[i];
            lp[i] = log_density(marginal, point);
        }
        lp_dim.push_back(std::move(lp));
    }

    // aggregate marginals: mixtures of the per-datapoint 1-D Gaussians
    std::vector<Eigen::ArrayXd> qbar_dim;
    for (Eigen::Index j = 0; j < k; ++j) {
        Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(m);
        for (Eigen::Index a = 0; a < n; ++a)
            acc += lq[static_cast<std::size_t>(a)][static_cast<std::size_t>(j)].exp();
        qbar_dim.push_back(acc / static_cast<double>(n));
    }

    KlDecomposition out;
    const double cell = (k == 1) ? h : h * h;
    const Eigen::Index inner = (k == 1) ? 1 : m;

    for (Eigen::Index ia = 0; ia < m; ++ia) {
        for (Eigen::Index ib = 0; ib < inner; ++ib) {
            double qbar = 0.0;
            double joint_lp = lp_dim[0][ia];
            if (k == 2) joint_lp += lp_dim[1][ib];
            double mi_acc = 0.0, total_acc = 0.0;
            std::vector<double> lq_point(static_cast<std::size_t>(n));
            for (Eigen::Index a = 0; a < n; ++a) {
                double l = lq[static_cast<std::size_t>(a)][0][ia];
                if (k == 2) l += lq[static_cast<std::size_t>(a)][1][ib];
                lq_point[static_cast<std::size_t>(a)] = l;
                qbar += std::exp(l);
            }
            qbar /= static_cast<double>(n);
            const double log_qbar = qbar > 0.0 ? std::log(qbar) : 0.0;
            for (Eigen::Index a = 0; a < n; ++a) {
                const double qa = std::exp(lq_point[static_cast<std::size_t>(a)]);
                if (qa <= 0.0) continue;
                mi_acc += qa * (lq_point[static_cast<std::size_t>(a)] - log_qbar);
                total_acc += qa * (lq_point[static_cast<std::size_t>(a)] - joint_lp);
            }
            out.mi_term += cell * mi_acc / static_cast<double>(n);
            out.total_kl += cell * total_acc / static_cast<double>(n);
            out.captured_mass += cell * qbar;
            if (qbar > 0.0) {
                double log_prod = qbar_dim[0][ia] > 0.0 ? std::log(qbar_dim[0][ia]) : 0.0;
                if (k == 2) log_prod += qbar_dim[1][ib] > 0.0 ? std::log(qbar_dim[1][ib]) : 0.0;
                out.tc_term += cell * qbar * (log_qbar - log_prod);
            }
        }
    }

    for (Eigen::Index j = 0; j < k; ++j) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            const double qj = qbar_dim[static_cast<std::size_t>(j)][i];
            if (qj <= 0.0) continue;
            acc += qj * (std::log(qj) - lp_dim[static_cast<std::size_t>(j)][i]);
        }
        out.dimwise_term += h * acc;
    }

    if (out.captured_mass < 0.999)
        throw std::runtime_error("kl_decomposition_check: grid too coarse, captured mass " +
                                 std::to_string(out.captured_mass));
    return out;
}

}  // namespace lpnest
