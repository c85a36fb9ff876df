#include "lpnest/distribution.hpp"

#include "lpnest/special.hpp"

#include <limits>
#include <stdexcept>

namespace lpnest {

namespace {

void check_vector(const LpNestedDistribution& dist, const Eigen::VectorXd& z,
                  const char* where) {
    if (z.size() != dist.tree.n)
        throw std::invalid_argument(std::string(where) + ": dimension mismatch");
    if (!z.allFinite()) throw std::invalid_argument(std::string(where) + ": non-finite input");
}

int leaves_below(const LpTreeNode& node) {
    if (node.is_leaf()) return 1;
    int total = 0;
    for (const LpTreeNode& child : node.children) total += leaves_below(child);
    return total;
}

/// Inner nodes in pre-order, matching the ordering of node_counts.
void inner_preorder(const LpTreeNode& node, std::vector<const LpTreeNode*>& out) {
    if (node.is_leaf()) return;
    out.push_back(&node);
    for (const LpTreeNode& child : node.children) inner_preorder(child, out);
}

/// Fills the absolute coordinate pattern |x| of Algorithm 1 steps 2-3 below
/// node, given the node's radius. Consumes one Dirichlet draw per inner node
/// in pre-order.
void cascade(const LpTreeNode& node, double radius, Rng& rng, Eigen::VectorXd& x) {
    if (node.is_leaf()) {
        x[node.dim] = radius;
        return;
    }
    const Eigen::Index l = static_cast<Eigen::Index>(node.children.size());
    Eigen::VectorXd alpha(l);
    for (Eigen::Index k = 0; k < l; ++k)
        alpha[k] = static_cast<double>(leaves_below(node.children[k])) / node.p;
    const Eigen::VectorXd dir = rng.dirichlet(alpha);
    for (Eigen::Index k = 0; k < l; ++k) {
        const double u_tilde = std::pow(dir[k], 1.0 / node.p);
        cascade(node.children[k], radius * u_tilde, rng, x);
    }
}

}  // namespace

RadialParams::RadialParams(double p0_in, double s_in, int n_in)
    : p0(p0_in), s(s_in), n(n_in) {
    if (!(p0 > 0.0)) throw std::invalid_argument("RadialParams: p0 must be positive");
    if (!(s > 0.0)) throw std::invalid_argument("RadialParams: s must be positive");
    if (n < 1) throw std::invalid_argument("RadialParams: n must be >= 1");
}

LpNestedDistribution::LpNestedDistribution(LpTree tree_in, double s)
    : tree(std::move(tree_in)), radial(tree.root.p, s, tree.n) {}

LpNestedDistribution GeneralizedGaussianSpec::distribution(int n) const {
    std::vector<LpTreeNode> leaves;
    for (int j = 0; j < n; ++j) leaves.push_back(LpTreeNode::leaf(j));
    return LpNestedDistribution(LpTree(LpTreeNode::inner(p, std::move(leaves))), s);
}

double log_surface_area(const LpTree& tree) {
    std::vector<const LpTreeNode*> order;
    inner_preorder(tree.root, order);
    const std::vector<NodeCounts> counts = node_counts(tree);
    double acc = tree.n * std::log(2.0);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const double p = order[i]->p;
        const NodeCounts& record = counts[i];
        for (int below : record.children_leaf_counts) acc += std::lgamma(below / p);
        acc -= (record.l - 1) * std::log(p);
        acc -= std::lgamma(record.n / p);
    }
    return acc;
}

double log_surface_area(const LpTree& tree, double R) {
    if (!(R > 0.0)) throw std::invalid_argument("surface_area: R must be positive");
    return (tree.n - 1) * std::log(R) + log_surface_area(tree);
}

double surface_area(const LpTree& tree, double R) {
    return std::exp(log_surface_area(tree, R));
}

std::vector<double> grad_log_surface_area_exponents(const LpTree& tree) {
    std::vector<const LpTreeNode*> order;
    inner_preorder(tree.root, order);
    const std::vector<NodeCounts> counts = node_counts(tree);
    std::vector<double> grads(order.size(), 0.0);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const double p = order[i]->p;
        const NodeCounts& record = counts[i];
        double g = 0.0;
        for (int below : record.children_leaf_counts)
            g -= digamma(below / p) * below / (p * p);
        g -= (record.l - 1) / p;
        g += digamma(record.n / p) * record.n / (p * p);
        grads[i] = g;
    }
    return grads;
}

double log_radial_density(double v0, const RadialParams& radial) {
    if (v0 < 0.0) throw std::invalid_argument("log_radial_density: v0 must be >= 0");
    const double shape = static_cast<double>(radial.n) / radial.p0;
    const double normalizer =
        std::log(radial.p0) - std::lgamma(shape) - shape * std::log(radial.s);
    if (v0 == 0.0) {
        if (radial.n == 1) return normalizer;
        return -std::numeric_limits<double>::infinity();
    }
    return normalizer + (radial.n - 1) * std::log(v0) - std::pow(v0, radial.p0) / radial.s;
}

double log_density(const LpNestedDistribution& dist, const Eigen::VectorXd& z) {
    check_vector(dist, z, "log_density");
    const RadialParams& radial = dist.radial;
    const double shape = static_cast<double>(radial.n) / radial.p0;
    const double f = eval_f(dist.tree, z);
    return std::log(radial.p0) - std::lgamma(shape) - shape * std::log(radial.s) -
           std::pow(f, radial.p0) / radial.s - log_surface_area(dist.tree);
}

Eigen::VectorXd grad_log_density(const LpNestedDistribution& dist, const Eigen::VectorXd& z) {
    check_vector(dist, z, "grad_log_density");
    const double f = eval_f(dist.tree, z);
    if (!(f > 0.0)) return Eigen::VectorXd::Zero(dist.tree.n);
    const double scale = -dist.radial.p0 / dist.radial.s * std::pow(f, dist.radial.p0 - 1.0);
    return scale * grad_f(dist.tree, z);
}

std::vector<double> grad_log_density_exponents(const LpNestedDistribution& dist,
                                               const Eigen::VectorXd& z) {
    check_vector(dist, z, "grad_log_density_exponents");
    const RadialParams& radial = dist.radial;
    const double f = eval_f(dist.tree, z);
    const std::vector<double> df_dp = grad_f_exponents(dist.tree, z);
    std::vector<double> grads = grad_log_surface_area_exponents(dist.tree);
    for (double& g : grads) g = -g;
    const double fp_deriv =
        f > 0.0 ? radial.p0 / radial.s * std::pow(f, radial.p0 - 1.0) : 0.0;
    for (std::size_t i = 0; i < grads.size(); ++i) grads[i] -= fp_deriv * df_dp[i];
    // root-only terms of the normalizer and the explicit p0 in f^{p0}
    const double shape = radial.n / radial.p0;
    grads[0] += 1.0 / radial.p0 + digamma(shape) * radial.n / (radial.p0 * radial.p0) +
                radial.n / (radial.p0 * radial.p0) * std::log(radial.s);
    if (f > 0.0) grads[0] -= std::pow(f, radial.p0) * std::log(f) / radial.s;
    return grads;
}

Eigen::MatrixXd sample(const LpNestedDistribution& dist, Rng& rng, int count, SampleMode mode) {
    if (count < 1) throw std::invalid_argument("sample: count must be positive");
    const int n = dist.tree.n;
    const double p0 = dist.radial.p0;
    const double shape = static_cast<double>(n) / p0;
    Eigen::MatrixXd out(count, n);
    Eigen::VectorXd x(n);
    for (int row = 0; row < count; ++row) {
        // step 1: v0 ~ Beta(n, 1); the fast path starts from the unit radius
        double v0 = 1.0;
        if (mode == SampleMode::verbatim)
            v0 = std::pow(rng.uniform_pos(), 1.0 / static_cast<double>(n));
        // steps 2-3: Dirichlet directions cascaded from the root down
        cascade(dist.tree.root, v0, rng, x);
        // step 4: normalize onto the unit L^p-nested sphere
        const double f = eval_f(dist.tree, x);
        Eigen::VectorXd u = x / f;
        // step 5: the target radius; f^{p0} ~ Gamma(n/p0, scale s)
        const double radius = std::pow(rng.gamma(shape, dist.radial.s), 1.0 / p0);
        // step 6: independent uniform signs
        for (int j = 0; j < n; ++j) out(row, j) = radius * u[j] * rng.sign();
    }
    return out;
}

double kurtosis_to_p(double kappa) {
    if (!(kappa > -1.0)) throw std::invalid_argument("kurtosis_to_p: kappa must be > -1");
    return 2.0 / (1.0 + kappa);
}

}  // namespace lpnest
