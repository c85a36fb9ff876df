#include "lpnest/tree.hpp"

#include <algorithm>
#include <json.hpp>

namespace lpnest {

namespace {

void collect_leaf_dims(const LpTreeNode& node, std::vector<int>& dims) {
    if (node.is_leaf()) {
        dims.push_back(node.dim);
        return;
    }
    for (const LpTreeNode& child : node.children) collect_leaf_dims(child, dims);
}

void validate_node(const LpTreeNode& node) {
    if (node.is_leaf()) {
        if (node.dim < 0) throw std::invalid_argument("LpTree: leaf index must be >= 0");
        return;
    }
    if (!(node.p > 0.0) || !std::isfinite(node.p))
        throw std::invalid_argument("LpTree: inner-node exponent must be positive and finite");
    for (const LpTreeNode& child : node.children) validate_node(child);
}

int count_leaves(const LpTreeNode& node) {
    if (node.is_leaf()) return 1;
    int total = 0;
    for (const LpTreeNode& child : node.children) total += count_leaves(child);
    return total;
}

void counts_preorder(const LpTreeNode& node, std::vector<NodeCounts>& out) {
    if (node.is_leaf()) return;
    NodeCounts record;
    record.l = static_cast<int>(node.children.size());
    for (const LpTreeNode& child : node.children) {
        const int below = count_leaves(child);
        record.children_leaf_counts.push_back(below);
        record.n += below;
    }
    out.push_back(std::move(record));
    for (const LpTreeNode& child : node.children) counts_preorder(child, out);
}

/// Child values and the node value, with the same max-rescaled powering as
/// detail::eval_node; returns {value, child values}.
struct NodeEval {
    double value = 0.0;
    std::vector<double> child_values;
};

NodeEval eval_with_children(const LpTreeNode& node, const Eigen::VectorXd& z) {
    NodeEval eval;
    if (node.is_leaf()) {
        eval.value = std::abs(z[node.dim]);
        return eval;
    }
    double top = 0.0;
    eval.child_values.resize(node.children.size());
    for (std::size_t k = 0; k < node.children.size(); ++k) {
        eval.child_values[k] = eval_with_children(node.children[k], z).value;
        top = std::max(top, eval.child_values[k]);
    }
    if (top > 0.0) {
        double accum = 0.0;
        for (double value : eval.child_values) accum += std::pow(value / top, node.p);
        eval.value = top * std::pow(accum, 1.0 / node.p);
    }
    return eval;
}

/// Accumulates df/dz entries below node, where upstream is df/d(node value).
void grad_z_node(const LpTreeNode& node, const Eigen::VectorXd& z, double upstream,
                 Eigen::VectorXd& grad) {
    if (upstream == 0.0) return;
    if (node.is_leaf()) {
        const double v = z[node.dim];
        grad[node.dim] += upstream * (v > 0.0 ? 1.0 : v < 0.0 ? -1.0 : 0.0);
        return;
    }
    const NodeEval eval = eval_with_children(node, z);
    if (!(eval.value > 0.0)) return;
    for (std::size_t k = 0; k < node.children.size(); ++k) {
        const double ratio = eval.child_values[k] / eval.value;
        const double partial = ratio > 0.0 ? std::pow(ratio, node.p - 1.0) : 0.0;
        grad_z_node(node.children[k], z, upstream * partial, grad);
    }
}

/// d(node value)/dp at fixed child values, with max rescaling:
/// v = m * S^{1/p}, S = sum (c_k/m)^p, dv/dp = v * (S'_p/(p S) - log(S)/p^2).
double exponent_partial(const LpTreeNode& node, const NodeEval& eval) {
    if (!(eval.value > 0.0)) return 0.0;
    double top = 0.0;
    for (double value : eval.child_values) top = std::max(top, value);
    double s = 0.0;
    double s_prime = 0.0;
    for (double value : eval.child_values) {
        if (value <= 0.0) continue;
        const double t = value / top;
        const double tp = std::pow(t, node.p);
        s += tp;
        s_prime += tp * std::log(t);
    }
    return eval.value * (s_prime / (node.p * s) - std::log(s) / (node.p * node.p));
}

void grad_p_node(const LpTreeNode& node, const Eigen::VectorXd& z, double upstream,
                 std::vector<double>& grads, std::size_t& cursor) {
    if (node.is_leaf()) return;
    const std::size_t slot = cursor++;
    const NodeEval eval = eval_with_children(node, z);
    grads[slot] = upstream * exponent_partial(node, eval);
    for (std::size_t k = 0; k < node.children.size(); ++k) {
        double partial = 0.0;
        if (eval.value > 0.0 && eval.child_values[k] > 0.0)
            partial = std::pow(eval.child_values[k] / eval.value, node.p - 1.0);
        grad_p_node(node.children[k], z, upstream * partial, grads, cursor);
    }
}

nlohmann::json node_to_json(const LpTreeNode& node) {
    if (node.is_leaf()) return nlohmann::json{{"dim", node.dim}};
    nlohmann::json children = nlohmann::json::array();
    for (const LpTreeNode& child : node.children) children.push_back(node_to_json(child));
    return nlohmann::json{{"p", node.p}, {"children", std::move(children)}};
}

LpTreeNode node_from_json(const nlohmann::json& value) {
    if (!value.is_object()) throw std::invalid_argument("tree JSON: node must be an object");
    if (value.contains("dim")) {
        if (!value["dim"].is_number_integer())
            throw std::invalid_argument("tree JSON: leaf dim must be an integer");
        return LpTreeNode::leaf(value["dim"].get<int>());
    }
    if (!value.contains("p") || !value.contains("children"))
        throw std::invalid_argument("tree JSON: inner node needs \"p\" and \"children\"");
    if (!value["children"].is_array() || value["children"].empty())
        throw std::invalid_argument("tree JSON: children must be a non-empty array");
    std::vector<LpTreeNode> kids;
    for (const nlohmann::json& child : value["children"]) kids.push_back(node_from_json(child));
    return LpTreeNode::inner(value["p"].get<double>(), std::move(kids));
}

}  // namespace

LpTree::LpTree(LpTreeNode root_node) : root(std::move(root_node)) {
    if (root.is_leaf()) throw std::invalid_argument("LpTree: root must be an inner node");
    validate_node(root);
    std::vector<int> dims;
    collect_leaf_dims(root, dims);
    n = static_cast<int>(dims.size());
    std::vector<int> sorted = dims;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < n; ++i) {
        if (sorted[i] != i)
            throw std::invalid_argument(
                "LpTree: leaf indices must form a permutation of 0..n-1");
    }
}

LpTree make_isa_tree(const std::vector<int>& subspace_sizes, double p0,
                     const std::vector<double>& p_sub) {
    if (subspace_sizes.empty()) throw std::invalid_argument("make_isa_tree: empty layout");
    if (subspace_sizes.size() != p_sub.size())
        throw std::invalid_argument("make_isa_tree: sizes and exponents must align");
    if (!(p0 > 0.0)) throw std::invalid_argument("make_isa_tree: p0 must be positive");
    std::vector<LpTreeNode> subspaces;
    int next_dim = 0;
    for (std::size_t k = 0; k < subspace_sizes.size(); ++k) {
        if (subspace_sizes[k] <= 0)
            throw std::invalid_argument("make_isa_tree: subspace sizes must be positive");
        if (!(p_sub[k] > 0.0))
            throw std::invalid_argument("make_isa_tree: subspace exponents must be positive");
        std::vector<LpTreeNode> leaves;
        for (int j = 0; j < subspace_sizes[k]; ++j) leaves.push_back(LpTreeNode::leaf(next_dim++));
        subspaces.push_back(LpTreeNode::inner(p_sub[k], std::move(leaves)));
    }
    return LpTree(LpTreeNode::inner(p0, std::move(subspaces)));
}

std::vector<NodeCounts> node_counts(const LpTree& tree) {
    std::vector<NodeCounts> out;
    counts_preorder(tree.root, out);
    return out;
}

SubspacePartition subspace_partition(const LpTree& tree) {
    SubspacePartition partition;
    for (const LpTreeNode& child : tree.root.children) {
        std::vector<int> dims;
        if (child.is_leaf()) {
            dims.push_back(child.dim);
        } else {
            for (const LpTreeNode& grandchild : child.children) {
                if (!grandchild.is_leaf()) throw std::invalid_argument("not an ISA tree");
                dims.push_back(grandchild.dim);
            }
        }
        partition.subspaces.push_back(std::move(dims));
    }
    return partition;
}

std::string tree_to_json(const LpTree& tree) { return node_to_json(tree.root).dump(); }

LpTree tree_from_json(const std::string& text) {
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& err) {
        throw std::invalid_argument(std::string("tree JSON: ") + err.what());
    }
    return LpTree(node_from_json(parsed));
}

Eigen::VectorXd grad_f(const LpTree& tree, const Eigen::VectorXd& z) {
    if (z.size() != tree.n) throw std::invalid_argument("grad_f: dimension mismatch");
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(tree.n);
    grad_z_node(tree.root, z, 1.0, grad);
    return grad;
}

std::vector<double> grad_f_exponents(const LpTree& tree, const Eigen::VectorXd& z) {
    if (z.size() != tree.n) throw std::invalid_argument("grad_f_exponents: dimension mismatch");
    std::vector<double> grads(node_counts(tree).size(), 0.0);
    std::size_t cursor = 0;
    grad_p_node(tree.root, z, 1.0, grads, cursor);
    return grads;
}

}  // namespace lpnest
