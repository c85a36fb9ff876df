#include "lpnest/nn.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace lpnest {

namespace {

Eigen::MatrixXd apply_activation(Activation act, Eigen::MatrixXd pre) {
    switch (act) {
        case Activation::identity:
            return pre;
        case Activation::tanh:
            return pre.array().tanh().matrix();
        case Activation::relu:
            return pre.cwiseMax(0.0);
    }
    throw std::logic_error("unknown activation");
}

/// act'(pre) expressed through the post-activation value.
Eigen::ArrayXXd activation_slope(Activation act, const Eigen::MatrixXd& post) {
    switch (act) {
        case Activation::identity:
            return Eigen::ArrayXXd::Ones(post.rows(), post.cols());
        case Activation::tanh:
            return 1.0 - post.array().square();
        case Activation::relu:
            return (post.array() > 0.0).cast<double>();
    }
    throw std::logic_error("unknown activation");
}

}  // namespace

std::string activation_name(Activation act) {
    switch (act) {
        case Activation::identity:
            return "identity";
        case Activation::tanh:
            return "tanh";
        case Activation::relu:
            return "relu";
    }
    throw std::logic_error("unknown activation");
}

Activation activation_from_name(const std::string& name) {
    if (name == "identity") return Activation::identity;
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    throw std::invalid_argument("unknown activation name: " + name);
}

Mlp::Mlp(MlpSpec spec) : spec_(std::move(spec)) {
    if (spec_.dims.size() < 2)
        throw std::invalid_argument("Mlp: need at least an input and an output dimension");
    if (spec_.activations.size() + 1 != spec_.dims.size())
        throw std::invalid_argument("Mlp: one activation per layer required");
    for (int dim : spec_.dims)
        if (dim <= 0) throw std::invalid_argument("Mlp: dimensions must be positive");
    Eigen::Index total = 0;
    for (int l = 0; l < spec_.layer_count(); ++l) {
        weight_offsets_.push_back(total);
        total += static_cast<Eigen::Index>(spec_.dims[l + 1]) * spec_.dims[l];
        bias_offsets_.push_back(total);
        total += spec_.dims[l + 1];
    }
    params_ = Eigen::VectorXd::Zero(total);
}

Mlp Mlp::initialized(MlpSpec spec, Rng& rng) {
    Mlp mlp(std::move(spec));
    for (int l = 0; l < mlp.spec_.layer_count(); ++l) {
        const double bound = std::sqrt(1.0 / mlp.spec_.dims[l]);
        const Eigen::Index begin = mlp.weight_offsets_[l];
        const Eigen::Index end = (l + 1 < mlp.spec_.layer_count())
                                     ? mlp.weight_offsets_[l + 1]
                                     : mlp.params_.size();
        for (Eigen::Index i = begin; i < end; ++i)
            mlp.params_[i] = bound * (2.0 * rng.uniform() - 1.0);
    }
    return mlp;
}

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(int layer) const {
    return {params_.data() + weight_offsets_[layer], spec_.dims[layer + 1], spec_.dims[layer]};
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(int layer) const {
    return {params_.data() + bias_offsets_[layer], spec_.dims[layer + 1]};
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& batch) const {
    Cache cache;
    return forward(batch, cache);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& batch, Cache& cache) const {
    if (batch.cols() != input_dim())
        throw std::invalid_argument("Mlp::forward: batch width must equal the input dimension");
    cache.post.clear();
    cache.post.reserve(spec_.layer_count() + 1);
    cache.post.push_back(batch);
    for (int l = 0; l < spec_.layer_count(); ++l) {
        Eigen::MatrixXd pre = cache.post.back() * weight(l).transpose();
        pre.rowwise() += bias(l).transpose();
        // Saturating activations can hide a non-finite affine output, so the
        // check runs before the activation.
        if (!pre.allFinite())
            throw std::runtime_error("Mlp::forward: non-finite output at layer " +
                                     std::to_string(l));
        cache.post.push_back(apply_activation(spec_.activations[l], std::move(pre)));
    }
    return cache.post.back();
}

Eigen::MatrixXd Mlp::backward(const Cache& cache, const Eigen::MatrixXd& output_grad,
                              Eigen::VectorXd& param_grad) const {
    if (cache.post.size() != static_cast<std::size_t>(spec_.layer_count()) + 1)
        throw std::invalid_argument("Mlp::backward: cache does not match this network");
    if (param_grad.size() != params_.size())
        throw std::invalid_argument("Mlp::backward: param_grad has the wrong size");
    Eigen::MatrixXd grad = output_grad;
    for (int l = spec_.layer_count() - 1; l >= 0; --l) {
        const Eigen::MatrixXd delta =
            (grad.array() * activation_slope(spec_.activations[l], cache.post[l + 1])).matrix();
        Eigen::Map<Eigen::MatrixXd> dw(param_grad.data() + weight_offsets_[l],
                                       spec_.dims[l + 1], spec_.dims[l]);
        Eigen::Map<Eigen::VectorXd> db(param_grad.data() + bias_offsets_[l], spec_.dims[l + 1]);
        dw += delta.transpose() * cache.post[l];
        db += delta.colwise().sum().transpose();
        grad = delta * weight(l);
    }
    return grad;
}

void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads) {
    if (params.size() != state.m.size() || grads.size() != state.m.size())
        throw std::invalid_argument("adam_step: size mismatch");
    if (!grads.allFinite()) throw std::runtime_error("adam_step: non-finite gradients");
    state.step += 1;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseProduct(grads);
    const double m_corr = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double v_corr = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    params.array() -= state.lr * (state.m.array() / m_corr) /
                      ((state.v.array() / v_corr).sqrt() + state.eps);
}

void write_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    const std::string header = checkpoint.header.dump();
    const std::uint32_t header_len = static_cast<std::uint32_t>(header.size());
    out.write("NNC1", 4);
    char len_bytes[4];
    for (int i = 0; i < 4; ++i) len_bytes[i] = static_cast<char>((header_len >> (8 * i)) & 0xff);
    out.write(len_bytes, 4);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    static_assert(sizeof(float) == 4);
    for (float value : checkpoint.params) {
        char bytes[4];
        std::uint32_t bits;
        std::memcpy(&bits, &value, 4);
        for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
        out.write(bytes, 4);
    }
    if (!out) throw std::runtime_error("checkpoint: short write to " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[4];
    if (!in.read(magic, 4)) throw std::runtime_error("checkpoint: truncated payload");
    if (std::memcmp(magic, "NNC", 3) != 0)
        throw std::runtime_error("checkpoint: bad magic");
    if (magic[3] != '1') throw std::runtime_error("checkpoint: unsupported version");
    char len_bytes[4];
    if (!in.read(len_bytes, 4)) throw std::runtime_error("checkpoint: truncated payload");
    std::uint32_t header_len = 0;
    for (int i = 0; i < 4; ++i)
        header_len |= static_cast<std::uint32_t>(static_cast<unsigned char>(len_bytes[i]))
                      << (8 * i);
    std::string header(header_len, '\0');
    if (!in.read(header.data(), header_len))
        throw std::runtime_error("checkpoint: truncated payload");
    Checkpoint checkpoint;
    try {
        checkpoint.header = nlohmann::json::parse(header);
    } catch (const nlohmann::json::parse_error& err) {
        throw std::runtime_error(std::string("checkpoint: corrupt header: ") + err.what());
    }
    std::vector<char> blob((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    if (blob.size() % 4 != 0) throw std::runtime_error("checkpoint: truncated payload");
    checkpoint.params.resize(blob.size() / 4);
    for (std::size_t i = 0; i < checkpoint.params.size(); ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b)
            bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(blob[4 * i + b]))
                    << (8 * b);
        float value;
        std::memcpy(&value, &bits, 4);
        checkpoint.params[i] = value;
    }
    return checkpoint;
}

nlohmann::json mlp_spec_to_json(const MlpSpec& spec) {
    nlohmann::json names = nlohmann::json::array();
    for (Activation act : spec.activations) names.push_back(activation_name(act));
    return nlohmann::json{{"dims", spec.dims}, {"activations", std::move(names)}};
}

MlpSpec mlp_spec_from_json(const nlohmann::json& value) {
    MlpSpec spec;
    try {
        spec.dims = value.at("dims").get<std::vector<int>>();
        for (const nlohmann::json& name : value.at("activations"))
            spec.activations.push_back(activation_from_name(name.get<std::string>()));
    } catch (const nlohmann::json::exception& err) {
        throw std::invalid_argument(std::string("mlp_spec_from_json: ") + err.what());
    }
    return spec;
}

}  // namespace lpnest
