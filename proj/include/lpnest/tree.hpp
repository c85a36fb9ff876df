#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace lpnest {

/// Node of an L^p-nested tree. A node with children is an inner node and
/// carries an exponent p > 0; a node without children is a leaf and carries
/// a 0-based latent-dimension index.
struct LpTreeNode {
    double p = 2.0;
    int dim = -1;
    std::vector<LpTreeNode> children;

    bool is_leaf() const { return children.empty(); }

    static LpTreeNode leaf(int dim) {
        LpTreeNode node;
        node.dim = dim;
        return node;
    }

    static LpTreeNode inner(double p, std::vector<LpTreeNode> kids) {
        LpTreeNode node;
        node.p = p;
        node.children = std::move(kids);
        return node;
    }
};

/// Validated L^p-nested tree defining f(z) over an n-dimensional latent
/// vector. Immutable after construction; all operations on it are pure.
struct LpTree {
    LpTreeNode root;
    int n = 0;

    explicit LpTree(LpTreeNode root_node);
};

/// Per-inner-node counts in pre-order: n_i leaves below the node, l_i
/// children, and the leaf count below each child.
struct NodeCounts {
    int n = 0;
    int l = 0;
    std::vector<int> children_leaf_counts;
};

/// Ordered leaf-index sets V_1 ... V_{l_0} of the root's children.
struct SubspacePartition {
    std::vector<std::vector<int>> subspaces;
};

/// Depth-two ISA tree: root exponent p0 over l_0 subspaces with exponents
/// p_sub[k] and subspace_sizes[k] consecutive leaves each.
LpTree make_isa_tree(const std::vector<int>& subspace_sizes, double p0,
                     const std::vector<double>& p_sub);

/// Counts for every inner node, root first, in pre-order.
std::vector<NodeCounts> node_counts(const LpTree& tree);

/// Subspace index sets of a depth-two tree; rejects deeper trees with
/// "not an ISA tree". Root children that are single leaves form singleton
/// subspaces.
SubspacePartition subspace_partition(const LpTree& tree);

/// JSON form: inner = {"p": <float>, "children": [...]}, leaf = {"dim": <int>}.
/// Exponents are emitted as shortest round-trippable decimals, so the
/// round-trip is lossless at full binary precision.
std::string tree_to_json(const LpTree& tree);
LpTree tree_from_json(const std::string& text);

namespace detail {

/// Nested-norm value of one node. Rescales by the largest child magnitude
/// before powering so large exponents cannot overflow.
template <class Scalar, class Derived>
Scalar eval_node(const LpTreeNode& node, const Eigen::MatrixBase<Derived>& z) {
    if (node.is_leaf()) {
        using std::abs;
        return abs(static_cast<Scalar>(z[node.dim]));
    }
    Scalar top = Scalar(0);
    std::vector<Scalar> values(node.children.size());
    for (std::size_t k = 0; k < node.children.size(); ++k) {
        values[k] = eval_node<Scalar>(node.children[k], z);
        if (values[k] > top) top = values[k];
    }
    if (!(top > Scalar(0))) return Scalar(0);
    Scalar accum = Scalar(0);
    for (const Scalar& value : values) {
        using std::pow;
        accum += pow(value / top, Scalar(node.p));
    }
    using std::pow;
    return top * pow(accum, Scalar(1) / Scalar(node.p));
}

}  // namespace detail

/// f(z): the nested-norm cascade evaluated bottom-up. Non-negative, zero
/// only at z = 0.
template <class Derived>
typename Derived::Scalar eval_f(const LpTree& tree, const Eigen::MatrixBase<Derived>& z) {
    using Scalar = typename Derived::Scalar;
    if (z.size() != tree.n) throw std::invalid_argument("eval_f: dimension mismatch");
    if (!z.allFinite()) throw std::invalid_argument("eval_f: non-finite input");
    return detail::eval_node<Scalar>(tree.root, z);
}

/// Gradient of f with respect to z. At kink points (any coordinate or inner
/// value exactly zero) the zero subgradient is returned.
Eigen::VectorXd grad_f(const LpTree& tree, const Eigen::VectorXd& z);

/// Partial derivatives of f with respect to each inner-node exponent, in the
/// same pre-order as node_counts. Children values are held fixed, matching
/// the tree's recursive definition.
std::vector<double> grad_f_exponents(const LpTree& tree, const Eigen::VectorXd& z);

}  // namespace lpnest
