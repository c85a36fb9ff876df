#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lpnest/distribution.hpp"
#include "lpnest/fa_lab.hpp"
#include "lpnest/ica_lab.hpp"
#include "lpnest/io.hpp"
#include "lpnest/kl_decomposition.hpp"
#include "lpnest/log.hpp"
#include "lpnest/metrics.hpp"
#include "lpnest/sprites.hpp"
#include "lpnest/tree.hpp"
#include "lpnest/vae.hpp"

namespace {

using nlohmann::json;

/// Raised for anything the user can fix in a config or argument (exit 2);
/// every other exception maps to a runtime failure (exit 3).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& err) {
        throw ConfigError("malformed JSON in " + path + ": " + err.what());
    }
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << content;
    if (!out) throw std::runtime_error("short write to " + path);
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw std::runtime_error("cannot create directory " + path + ": " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

Eigen::VectorXd linspace(double lo, double hi, int points) {
    Eigen::VectorXd grid(points);
    for (int i = 0; i < points; ++i)
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    return grid;
}

std::string csv_row(const std::vector<std::string>& cells) {
    std::string row;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) row += ',';
        row += cells[i];
    }
    row += '\n';
    return row;
}

int run_dist_sample(const std::string& spec_path, int count, std::uint64_t seed,
                    const std::string& mode_name, const std::string& out_path) {
    const json spec = load_json_file(spec_path);
    if (!spec.contains("tree")) throw ConfigError("spec needs a \"tree\" object");
    lpnest::LpTree tree = [&] {
        try {
            return lpnest::tree_from_json(spec.at("tree").dump());
        } catch (const std::invalid_argument& err) {
            throw ConfigError(std::string("invalid tree: ") + err.what());
        }
    }();
    const double s = spec.value("s", 2.0);
    if (count < 1) throw ConfigError("count must be positive");
    lpnest::SampleMode mode;
    if (mode_name == "verbatim")
        mode = lpnest::SampleMode::verbatim;
    else if (mode_name == "fast")
        mode = lpnest::SampleMode::fast;
    else
        throw ConfigError("mode must be verbatim or fast");

    lpnest::LpNestedDistribution dist = [&] {
        try {
            return lpnest::LpNestedDistribution(std::move(tree), s);
        } catch (const std::invalid_argument& err) {
            throw ConfigError(std::string("invalid spec: ") + err.what());
        }
    }();
    lpnest::Rng rng(seed);
    const Eigen::MatrixXd samples = lpnest::sample(dist, rng, count, mode);

    std::string csv;
    std::vector<std::string> header;
    for (int j = 0; j < dist.tree.n; ++j) header.push_back("z" + std::to_string(j));
    csv += csv_row(header);
    for (Eigen::Index r = 0; r < samples.rows(); ++r) {
        std::vector<std::string> cells;
        for (Eigen::Index c = 0; c < samples.cols(); ++c)
            cells.push_back(lpnest::format_double(samples(r, c)));
        csv += csv_row(cells);
    }
    write_text_file(out_path, csv);
    lpnest::log::info("dist-sample wrote " + std::to_string(count) + " rows to " + out_path);
    return 0;
}

int run_fa_lab(const std::string& config_path, const std::string& out_dir) {
    const json config = config_path.empty() ? json::object() : load_json_file(config_path);
    const int n_samples = config.value("n_samples", 200);
    const std::uint64_t seed = config.value("seed", std::uint64_t{7});
    const int theta_points = config.value("theta_points", 181);
    const std::vector<double> betas = config.value("betas", std::vector<double>{1.0, 2.0, 5.0});
    const double rho = config.value("rho", 0.6);
    const double noise_var = config.value("noise_var", 0.1);
    const int alpha_points = config.value("alpha_points", 26);
    if (n_samples < 2 || theta_points < 3 || alpha_points < 2 || betas.empty())
        throw ConfigError("fa-lab: degenerate grid or sample configuration");
    ensure_dir(out_dir);

    const lpnest::FaModel model = lpnest::fa_benchmark_model();
    const lpnest::DataStats stats = lpnest::fa_benchmark_stats(n_samples, seed);
    const Eigen::VectorXd theta_grid = linspace(0.0, std::numbers::pi, theta_points);
    const lpnest::BetaSweep sweep = lpnest::fa_beta_sweep(model, stats, betas, theta_grid);

    std::string rotation_csv;
    {
        std::vector<std::string> header{"theta", "logl"};
        for (double beta : betas) header.push_back("free_energy_beta_" + lpnest::format_double(beta));
        rotation_csv += csv_row(header);
        for (int i = 0; i < theta_points; ++i) {
            std::vector<std::string> cells{lpnest::format_double(theta_grid[i]),
                                           lpnest::format_double(sweep.curves[0].logl[i])};
            for (const lpnest::RotationCurve& curve : sweep.curves)
                cells.push_back(lpnest::format_double(curve.free_energy[i]));
            rotation_csv += csv_row(cells);
        }
    }
    write_text_file(join_path(out_dir, "rotation.csv"), rotation_csv);

    const Eigen::VectorXd alpha_grid = linspace(0.0, 0.5, alpha_points);
    const lpnest::PruningCurve pruning =
        lpnest::fa_pruning_experiment(alpha_grid, rho, lpnest::fa_pruning_stats(rho, noise_var),
                                      noise_var);
    std::string pruning_csv = csv_row({"alpha", "logl", "free_energy"});
    for (int i = 0; i < alpha_points; ++i)
        pruning_csv += csv_row({lpnest::format_double(alpha_grid[i]),
                                lpnest::format_double(pruning.logl[i]),
                                lpnest::format_double(pruning.free_energy[i])});
    write_text_file(join_path(out_dir, "pruning.csv"), pruning_csv);

    json summary;
    summary["logl"] = lpnest::fa_log_likelihood(model, stats);
    summary["betas"] = betas;
    json argmaxes = json::array(), amplitudes = json::array();
    for (std::size_t b = 0; b < betas.size(); ++b) {
        Eigen::Index best = 0;
        sweep.curves[b].free_energy.maxCoeff(&best);
        argmaxes.push_back(theta_grid[best]);
        amplitudes.push_back(sweep.amplitude[b]);
    }
    summary["argmax_theta"] = std::move(argmaxes);
    summary["amplitude"] = std::move(amplitudes);
    Eigen::Index best_alpha = 0;
    pruning.free_energy.maxCoeff(&best_alpha);
    summary["pruning_argmax_alpha"] = alpha_grid[best_alpha];
    write_text_file(join_path(out_dir, "summary.json"), summary.dump(2) + "\n");
    lpnest::log::info("fa-lab wrote rotation.csv, pruning.csv, summary.json to " + out_dir);
    return 0;
}

int run_ica_lab(const std::string& config_path, const std::string& out_dir) {
    const json config = config_path.empty() ? json::object() : load_json_file(config_path);
    const std::vector<std::uint64_t> seeds =
        config.value("seeds", std::vector<std::uint64_t>{1, 2, 3, 4, 5});
    const std::vector<double> betas = config.value("betas", std::vector<double>{1.0, 5.0});
    const int n_samples = config.value("n_samples", 2000);
    lpnest::IcaFitOptions options;
    options.max_iters = config.value("max_iters", options.max_iters);
    options.gh_order = config.value("gh_order", options.gh_order);
    if (seeds.empty() || betas.empty() || n_samples < 2 || options.max_iters < 1)
        throw ConfigError("ica-lab: degenerate configuration");
    ensure_dir(out_dir);

    std::string components_csv =
        csv_row({"seed", "beta", "component", "norm", "angle_deg", "free_energy"});
    json summary = json::array();
    for (std::uint64_t seed : seeds) {
        const lpnest::IcaBenchmark bench = lpnest::ica_benchmark(seed, n_samples);
        for (double beta : betas) {
            const lpnest::IcaFitResult fit =
                lpnest::ica_fit(bench.model, bench.data, beta, options);
            const lpnest::IcaComponentSummary comps =
                lpnest::ica_component_summary(fit.model.W);
            const double free_energy = fit.trace.empty() ? 0.0 : fit.trace.back();
            for (Eigen::Index k = 0; k < comps.norms.size(); ++k)
                components_csv += csv_row({std::to_string(seed), lpnest::format_double(beta),
                                           std::to_string(k),
                                           lpnest::format_double(comps.norms[k]),
                                           lpnest::format_double(comps.angles_deg[k]),
                                           lpnest::format_double(free_energy)});
            json entry;
            entry["seed"] = seed;
            entry["beta"] = beta;
            entry["min_pairwise_angle_deg"] = comps.min_pairwise_angle_deg;
            entry["pruned_count"] = comps.pruned_count;
            entry["iterations"] = fit.iterations;
            entry["free_energy"] = free_energy;
            summary.push_back(std::move(entry));
        }
    }
    write_text_file(join_path(out_dir, "components.csv"), components_csv);
    write_text_file(join_path(out_dir, "summary.json"), summary.dump(2) + "\n");
    lpnest::log::info("ica-lab wrote components.csv, summary.json to " + out_dir);
    return 0;
}

lpnest::MlpSpec mlp_spec_from_dims(int input, const std::vector<int>& hidden, int output,
                                   const std::string& hidden_activation) {
    lpnest::MlpSpec spec;
    spec.dims.push_back(input);
    for (int width : hidden) spec.dims.push_back(width);
    spec.dims.push_back(output);
    const lpnest::Activation act = lpnest::activation_from_name(hidden_activation);
    for (std::size_t l = 0; l + 1 < spec.dims.size(); ++l) spec.activations.push_back(act);
    spec.activations.back() = lpnest::Activation::identity;
    return spec;
}

std::optional<lpnest::IsaPriorConfig> prior_from_json(const json& prior) {
    const std::string type = prior.value("type", "standard");
    if (type == "standard") return std::nullopt;
    if (type != "isa") throw ConfigError("prior type must be standard or isa");
    lpnest::IsaPriorConfig isa;
    if (!prior.contains("sizes")) throw ConfigError("isa prior needs subspace sizes");
    isa.sizes = prior.at("sizes").get<std::vector<int>>();
    isa.p0 = prior.value("p0", 2.1);
    isa.p_sub = prior.value("p_sub", 2.0);
    isa.s = prior.value("s", 2.0);
    isa.trainable = prior.value("trainable", false);
    return isa;
}

int run_train_vae(const std::string& config_path, const std::string& data_path,
                  const std::string& out_dir) {
    const json config = load_json_file(config_path);
    lpnest::TrainConfig train;
    train.beta = config.value("beta", train.beta);
    train.epochs = config.value("epochs", train.epochs);
    train.batch_size = config.value("batch_size", 64);
    train.lr = config.value("lr", train.lr);
    train.exponent_lr = config.value("exponent_lr", train.exponent_lr);
    train.seed = config.value("seed", train.seed);
    train.mc_samples = config.value("mc_samples", train.mc_samples);
    const int latent_dim = config.value("latent_dim", 8);
    const std::vector<int> encoder_hidden =
        config.value("encoder_hidden", std::vector<int>{256, 256});
    const std::vector<int> decoder_hidden =
        config.value("decoder_hidden", std::vector<int>{256, 256});
    const std::string encoder_activation = config.value("encoder_activation", "relu");
    const std::string decoder_activation = config.value("decoder_activation", "tanh");
    const std::optional<lpnest::IsaPriorConfig> isa =
        prior_from_json(config.value("prior", json{{"type", "standard"}}));

    const lpnest::FactorDataset dataset = [&] {
        try {
            return lpnest::load_mspr(data_path);
        } catch (const std::runtime_error& err) {
            throw ConfigError(err.what());
        }
    }();
    const Eigen::MatrixXd images = dataset.image_batch();
    const int pixels = static_cast<int>(images.cols());
    ensure_dir(out_dir);

    lpnest::Rng init_rng(train.seed);
    lpnest::VaeModel model = [&] {
        try {
            return lpnest::make_vae_model(
                mlp_spec_from_dims(pixels, encoder_hidden, 2 * latent_dim, encoder_activation),
                mlp_spec_from_dims(latent_dim, decoder_hidden, pixels, decoder_activation), isa,
                init_rng);
        } catch (const std::invalid_argument& err) {
            throw ConfigError(err.what());
        }
    }();
    const bool trainable = model.isa && model.isa->trainable;

    const lpnest::TrainResult result = lpnest::train_vae(std::move(model), images, train);

    std::string trace_csv;
    {
        std::vector<std::string> header{"epoch", "elbo", "recon_ll", "kl_mc"};
        if (trainable)
            for (std::size_t k = 0; k < result.model.isa->sizes.size(); ++k)
                header.push_back("p_" + std::to_string(k + 1));
        trace_csv += csv_row(header);
        for (const lpnest::EpochStats& stats : result.trace) {
            std::vector<std::string> cells{
                std::to_string(stats.epoch), lpnest::format_double(stats.elbo),
                lpnest::format_double(stats.recon), lpnest::format_double(stats.kl)};
            if (trainable)
                for (Eigen::Index k = 0; k < stats.exponents.size(); ++k)
                    cells.push_back(lpnest::format_double(stats.exponents[k]));
            trace_csv += csv_row(cells);
        }
    }
    write_text_file(join_path(out_dir, "trace.csv"), trace_csv);
    lpnest::write_checkpoint(join_path(out_dir, "model.nnc"),
                             lpnest::vae_to_checkpoint(result.model));
    if (result.diverged) {
        lpnest::log::error("train-vae diverged; trace and last checkpoint written");
        return 3;
    }
    lpnest::log::info("train-vae wrote model.nnc and trace.csv to " + out_dir);
    return 0;
}

int run_eval_mig(const std::string& ckpt_path, const std::string& data_path,
                 const std::string& out_path, int bins) {
    if (bins < 2) throw ConfigError("bins must be at least 2");
    const lpnest::VaeModel model = [&] {
        try {
            return lpnest::vae_from_checkpoint(lpnest::read_checkpoint(ckpt_path));
        } catch (const std::exception& err) {
            throw ConfigError(err.what());
        }
    }();
    const lpnest::FactorDataset dataset = [&] {
        try {
            return lpnest::load_mspr(data_path);
        } catch (const std::runtime_error& err) {
            throw ConfigError(err.what());
        }
    }();
    const lpnest::ModelEvaluation eval = lpnest::evaluate_model(model, dataset, bins);
    json out;
    out["mig"] = eval.mig;
    out["recon_ll"] = eval.recon_ll;
    json mi_rows = json::array();
    for (Eigen::Index k = 0; k < eval.mi.mi.rows(); ++k) {
        json row = json::array();
        for (Eigen::Index f = 0; f < eval.mi.mi.cols(); ++f) row.push_back(eval.mi.mi(k, f));
        mi_rows.push_back(std::move(row));
    }
    out["mi_matrix"] = std::move(mi_rows);
    json entropies = json::array();
    for (Eigen::Index f = 0; f < eval.mi.factor_entropies.size(); ++f)
        entropies.push_back(eval.mi.factor_entropies[f]);
    out["factor_entropies"] = std::move(entropies);
    write_text_file(out_path, out.dump(2) + "\n");
    lpnest::log::info("eval-mig wrote " + out_path);
    return 0;
}

int run_gen_data(const std::string& config_path, const std::string& out_path) {
    lpnest::SpritesConfig config;
    if (!config_path.empty()) {
        const json spec = load_json_file(config_path);
        config.height = spec.value("height", config.height);
        config.width = spec.value("width", config.width);
        config.shapes = spec.value("shapes", config.shapes);
        config.scales = spec.value("scales", config.scales);
        config.x_positions = spec.value("x_positions", config.x_positions);
        config.y_positions = spec.value("y_positions", config.y_positions);
    }
    const lpnest::FactorDataset dataset = [&] {
        try {
            return lpnest::generate_sprites(config);
        } catch (const std::invalid_argument& err) {
            throw ConfigError(err.what());
        }
    }();
    lpnest::save_mspr(out_path, dataset);
    lpnest::log::info("gen-data wrote " + std::to_string(dataset.count()) + " images to " +
                      out_path);
    return 0;
}

int run_kl_decompose(const std::string& config_path, const std::string& out_path) {
    const json config = config_path.empty() ? json::object() : load_json_file(config_path);
    lpnest::GaussianMixtureQ q;
    if (config.contains("mu")) {
        const std::vector<std::vector<double>> mu =
            config.at("mu").get<std::vector<std::vector<double>>>();
        const std::vector<std::vector<double>> logvar =
            config.at("logvar").get<std::vector<std::vector<double>>>();
        if (mu.empty() || mu.size() != logvar.size())
            throw ConfigError("mu and logvar must be non-empty and congruent");
        q.mu.resize(static_cast<Eigen::Index>(mu.size()),
                    static_cast<Eigen::Index>(mu[0].size()));
        q.logvar.resizeLike(q.mu);
        for (std::size_t r = 0; r < mu.size(); ++r) {
            if (mu[r].size() != mu[0].size() || logvar[r].size() != mu[0].size())
                throw ConfigError("mu and logvar rows must have equal lengths");
            for (std::size_t c = 0; c < mu[r].size(); ++c) {
                q.mu(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = mu[r][c];
                q.logvar(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    logvar[r][c];
            }
        }
    } else {
        const int n = config.value("n", 4);
        const int k = config.value("k", 2);
        lpnest::Rng rng(config.value("seed", std::uint64_t{0}));
        q.mu.resize(n, k);
        q.logvar.resize(n, k);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < k; ++c) {
                q.mu(r, c) = 4.0 * rng.uniform() - 2.0;
                q.logvar(r, c) = 2.0 * rng.uniform() - 1.5;
            }
    }

    const json prior_spec = config.value("prior", json{{"type", "standard"}});
    const std::string type = prior_spec.value("type", "standard");
    double p = 2.0, s = 2.0;
    if (type == "flat") {
        p = prior_spec.value("p", 2.0);
        s = prior_spec.value("s", 2.0);
    } else if (type != "standard") {
        throw ConfigError("prior type must be standard or flat");
    }
    std::vector<lpnest::LpTreeNode> leaves;
    for (Eigen::Index j = 0; j < q.mu.cols(); ++j)
        leaves.push_back(lpnest::LpTreeNode::leaf(static_cast<int>(j)));
    const lpnest::LpNestedDistribution prior(
        lpnest::LpTree{lpnest::LpTreeNode::inner(p, std::move(leaves))}, s);

    lpnest::GridSpec grid;
    if (config.contains("grid")) {
        const json& g = config.at("grid");
        grid.lo = g.value("lo", grid.lo);
        grid.hi = g.value("hi", grid.hi);
        grid.points = g.value("points", grid.points);
    }
    const lpnest::KlDecomposition result = [&] {
        try {
            return lpnest::kl_decomposition_check(q, prior, grid);
        } catch (const std::invalid_argument& err) {
            throw ConfigError(err.what());
        }
    }();
    json out;
    out["mi"] = result.mi_term;
    out["tc"] = result.tc_term;
    out["dimwise"] = result.dimwise_term;
    out["total"] = result.total_kl;
    out["residual"] =
        std::abs(result.mi_term + result.tc_term + result.dimwise_term - result.total_kl);
    out["captured_mass"] = result.captured_mass;
    write_text_file(out_path, out.dump(2) + "\n");
    lpnest::log::info("kl-decompose wrote " + out_path);
    return 0;
}

int run_traverse(const std::string& ckpt_path, const std::string& data_path, int dim, int index,
                 const std::string& values_arg, const std::string& out_path) {
    const lpnest::VaeModel model = [&] {
        try {
            return lpnest::vae_from_checkpoint(lpnest::read_checkpoint(ckpt_path));
        } catch (const std::exception& err) {
            throw ConfigError(err.what());
        }
    }();
    const lpnest::FactorDataset dataset = [&] {
        try {
            return lpnest::load_mspr(data_path);
        } catch (const std::runtime_error& err) {
            throw ConfigError(err.what());
        }
    }();
    if (index < 0 || static_cast<std::size_t>(index) >= dataset.count())
        throw ConfigError("image index out of range");
    if (dim < 0 || dim >= model.latent_dim) throw ConfigError("latent dim out of range");

    std::vector<double> values;
    if (values_arg.empty()) {
        for (int i = 0; i < 9; ++i) values.push_back(-2.0 + 0.5 * i);
    } else {
        std::stringstream stream(values_arg);
        std::string token;
        while (std::getline(stream, token, ',')) {
            try {
                values.push_back(std::stod(token));
            } catch (const std::exception&) {
                throw ConfigError("values must be a comma-separated list of numbers");
            }
        }
        if (values.empty()) throw ConfigError("values list is empty");
    }

    const Eigen::MatrixXd images = dataset.image_batch();
    const Eigen::MatrixXd stack =
        lpnest::latent_traversal(model, images.row(index).transpose(), dim, values);

    lpnest::FactorDataset out;
    out.height = dataset.height;
    out.width = dataset.width;
    out.factor_names = {"step"};
    out.factor_cardinalities = {static_cast<std::uint32_t>(values.size())};
    for (std::size_t i = 0; i < values.size(); ++i)
        out.factors.push_back(static_cast<std::uint16_t>(i));
    out.images.reserve(values.size() * dataset.height * dataset.width);
    for (Eigen::Index r = 0; r < stack.rows(); ++r)
        for (Eigen::Index c = 0; c < stack.cols(); ++c)
            out.images.push_back(static_cast<float>(stack(r, c)));
    lpnest::save_mspr(out_path, out);
    lpnest::log::info("traverse wrote " + std::to_string(values.size()) + " frames to " +
                      out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"L^p-nested priors lab: distributions, VI experiments, VAE training"};
    app.require_subcommand(1);

    std::string spec_path, config_path, data_path, ckpt_path, out_path;
    std::string mode = "verbatim", values_arg;
    int count = 0, dim = 0, index = 0, bins = 20;
    std::uint64_t seed = 0;

    CLI::App* dist = app.add_subcommand("dist-sample", "Draw samples from an L^p-nested spec");
    dist->add_option("--spec", spec_path, "distribution spec JSON")->required();
    dist->add_option("--n", count, "number of samples")->required();
    dist->add_option("--seed", seed, "RNG seed");
    dist->add_option("--mode", mode, "verbatim | fast");
    dist->add_option("--out", out_path, "output CSV path")->required();

    CLI::App* fa = app.add_subcommand("fa-lab", "Factor-analysis VI bias experiments");
    fa->add_option("--config", config_path, "experiment config JSON");
    fa->add_option("--out", out_path, "output directory")->required();

    CLI::App* ica = app.add_subcommand("ica-lab", "ICA VI bias experiments");
    ica->add_option("--config", config_path, "experiment config JSON");
    ica->add_option("--out", out_path, "output directory")->required();

    CLI::App* train = app.add_subcommand("train-vae", "Train a VAE on an MSPR dataset");
    train->add_option("--config", config_path, "training config JSON")->required();
    train->add_option("--data", data_path, "MSPR dataset path")->required();
    train->add_option("--out", out_path, "output directory")->required();

    CLI::App* mig = app.add_subcommand("eval-mig", "Score MIG and reconstruction likelihood");
    mig->add_option("--ckpt", ckpt_path, "model checkpoint")->required();
    mig->add_option("--data", data_path, "MSPR dataset path")->required();
    mig->add_option("--bins", bins, "quantile bins per latent");
    mig->add_option("--out", out_path, "metrics JSON path")->required();

    CLI::App* gen = app.add_subcommand("gen-data", "Generate a mini-sprites dataset");
    gen->add_option("--config", config_path, "dataset config JSON");
    gen->add_option("--out", out_path, "MSPR output path")->required();

    CLI::App* kld = app.add_subcommand("kl-decompose", "Quadrature check of the KL split");
    kld->add_option("--config", config_path, "decomposition config JSON");
    kld->add_option("--out", out_path, "result JSON path")->required();

    CLI::App* trav = app.add_subcommand("traverse", "Decode a latent traversal");
    trav->add_option("--ckpt", ckpt_path, "model checkpoint")->required();
    trav->add_option("--data", data_path, "MSPR dataset path")->required();
    trav->add_option("--dim", dim, "latent coordinate to sweep")->required();
    trav->add_option("--index", index, "seed image index");
    trav->add_option("--values", values_arg, "comma-separated traversal values");
    trav->add_option("--out", out_path, "MSPR output path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (dist->parsed()) return run_dist_sample(spec_path, count, seed, mode, out_path);
        if (fa->parsed()) return run_fa_lab(config_path, out_path);
        if (ica->parsed()) return run_ica_lab(config_path, out_path);
        if (train->parsed()) return run_train_vae(config_path, data_path, out_path);
        if (mig->parsed()) return run_eval_mig(ckpt_path, data_path, out_path, bins);
        if (gen->parsed()) return run_gen_data(config_path, out_path);
        if (kld->parsed()) return run_kl_decompose(config_path, out_path);
        if (trav->parsed())
            return run_traverse(ckpt_path, data_path, dim, index, values_arg, out_path);
    } catch (const ConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "runtime error: " << err.what() << "\n";
        return 3;
    }
    return 2;
}
