#pragma once

#include "lpnest/rng.hpp"

#include <Eigen/Dense>
#include <json.hpp>
#include <string>
#include <vector>

namespace lpnest {

enum class Activation { identity, tanh, relu };

std::string activation_name(Activation act);
Activation activation_from_name(const std::string& name);

/// Shape of a dense MLP: dims = [input, hidden..., output] and one
/// activation per layer.
struct MlpSpec {
    std::vector<int> dims;
    std::vector<Activation> activations;

    int layer_count() const { return static_cast<int>(activations.size()); }
};

/// Dense multi-layer perceptron over a single flat parameter vector.
/// Layer l computes act_l(X W_l^T + b_l) with W_l of shape (out x in);
/// batches are row-major (one sample per row). The flat layout makes Adam
/// and checkpointing trivial.
class Mlp {
  public:
    explicit Mlp(MlpSpec spec);

    /// Seeded uniform fan-in init: weights and biases from
    /// U(-sqrt(1/fan_in), sqrt(1/fan_in)), drawn in parameter order.
    static Mlp initialized(MlpSpec spec, Rng& rng);

    const MlpSpec& spec() const { return spec_; }
    int input_dim() const { return spec_.dims.front(); }
    int output_dim() const { return spec_.dims.back(); }
    Eigen::Index param_count() const { return params_.size(); }
    const Eigen::VectorXd& params() const { return params_; }
    Eigen::VectorXd& params() { return params_; }

    Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
    Eigen::Map<const Eigen::VectorXd> bias(int layer) const;

    /// Post-activation outputs of every layer; post[0] is the input batch.
    struct Cache {
        std::vector<Eigen::MatrixXd> post;
    };

    Eigen::MatrixXd forward(const Eigen::MatrixXd& batch) const;
    Eigen::MatrixXd forward(const Eigen::MatrixXd& batch, Cache& cache) const;

    /// Exact reverse-mode gradients of the forward map. Accumulates
    /// d(scalar)/d(params) into param_grad (sized like params, zeroed by the
    /// caller when starting fresh) and returns d(scalar)/d(input batch).
    Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& output_grad,
                             Eigen::VectorXd& param_grad) const;

  private:
    MlpSpec spec_;
    Eigen::VectorXd params_;
    std::vector<Eigen::Index> weight_offsets_;
    std::vector<Eigen::Index> bias_offsets_;
};

/// Adam optimizer state over a flat parameter vector.
struct AdamState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    long step = 0;
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(Eigen::Index size, double lr_in = 0.001)
        : m(Eigen::VectorXd::Zero(size)), v(Eigen::VectorXd::Zero(size)), lr(lr_in) {}
};

/// Standard bias-corrected Adam update, minimizing: params -= lr * mhat/(...).
void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads);

/// "NNC1" checkpoint: 4-byte magic, u32 little-endian JSON header length,
/// the header bytes, then the parameter blob as little-endian float32.
struct Checkpoint {
    nlohmann::json header;
    std::vector<float> params;
};

void write_checkpoint(const std::string& path, const Checkpoint& checkpoint);

/// Throws std::runtime_error with distinct messages for a bad magic, an
/// unsupported version, and a truncated payload.
Checkpoint read_checkpoint(const std::string& path);

nlohmann::json mlp_spec_to_json(const MlpSpec& spec);
MlpSpec mlp_spec_from_json(const nlohmann::json& value);

}  // namespace lpnest
