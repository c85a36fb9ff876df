#include "lpnest/sprites.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace lpnest {

namespace {

constexpr int kSupersample = 16;
constexpr double kEllipseAspect = 0.6;

double interval_overlap(double lo, double hi, double a, double b) {
    return std::max(0.0, std::min(hi, b) - std::max(lo, a));
}

double square_coverage(int row, int col, double cx, double cy, double half) {
    const double ox = interval_overlap(col, col + 1.0, cx - half, cx + half);
    const double oy = interval_overlap(row, row + 1.0, cy - half, cy + half);
    return ox * oy;
}

double ellipse_coverage(int row, int col, double cx, double cy, double rx, double ry) {
    int inside = 0;
    for (int i = 0; i < kSupersample; ++i) {
        const double py = row + (i + 0.5) / kSupersample;
        const double dy = (py - cy) / ry;
        for (int j = 0; j < kSupersample; ++j) {
            const double px = col + (j + 0.5) / kSupersample;
            const double dx = (px - cx) / rx;
            if (dx * dx + dy * dy <= 1.0) ++inside;
        }
    }
    return static_cast<double>(inside) / (kSupersample * kSupersample);
}

void check_fit(double center, double extent, double frame, const std::string& axis) {
    if (center - extent < 0.0 || center + extent > frame)
        throw std::invalid_argument("generate_sprites: shape exceeds frame on " + axis);
}

void write_u32(std::ofstream& out, std::uint32_t value) {
    char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
    out.write(bytes, 4);
}

std::uint32_t read_u32(std::ifstream& in) {
    char bytes[4];
    if (!in.read(bytes, 4)) throw std::runtime_error("mspr: truncated payload");
    std::uint32_t value = 0;
    for (int i = 0; i < 4; ++i)
        value |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
    return value;
}

}  // namespace

Eigen::MatrixXd FactorDataset::image_batch() const {
    const Eigen::Index n = static_cast<Eigen::Index>(count());
    const Eigen::Index pixels = static_cast<Eigen::Index>(height) * width;
    Eigen::MatrixXd batch(n, pixels);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < pixels; ++c)
            batch(r, c) = images[static_cast<std::size_t>(r * pixels + c)];
    return batch;
}

Eigen::MatrixXi FactorDataset::factor_matrix() const {
    const Eigen::Index n = static_cast<Eigen::Index>(count());
    const Eigen::Index f = static_cast<Eigen::Index>(factor_count());
    Eigen::MatrixXi matrix(n, f);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < f; ++c)
            matrix(r, c) = factors[static_cast<std::size_t>(r * f + c)];
    return matrix;
}

FactorDataset generate_sprites(const SpritesConfig& config) {
    if (config.height < 1 || config.width < 1)
        throw std::invalid_argument("generate_sprites: frame must be at least 1x1");
    if (config.shapes.empty() || config.scales.empty() || config.x_positions.empty() ||
        config.y_positions.empty())
        throw std::invalid_argument("generate_sprites: every factor needs at least one value");
    for (const std::string& shape : config.shapes)
        if (shape != "square" && shape != "ellipse")
            throw std::invalid_argument("generate_sprites: unknown shape " + shape);

    FactorDataset dataset;
    dataset.height = static_cast<std::uint32_t>(config.height);
    dataset.width = static_cast<std::uint32_t>(config.width);
    dataset.factor_names = {"shape", "scale", "x", "y"};
    dataset.factor_cardinalities = {static_cast<std::uint32_t>(config.shapes.size()),
                                    static_cast<std::uint32_t>(config.scales.size()),
                                    static_cast<std::uint32_t>(config.x_positions.size()),
                                    static_cast<std::uint32_t>(config.y_positions.size())};
    const std::size_t total = config.shapes.size() * config.scales.size() *
                              config.x_positions.size() * config.y_positions.size();
    dataset.factors.reserve(total * 4);
    dataset.images.reserve(total * dataset.height * dataset.width);

    for (std::size_t si = 0; si < config.shapes.size(); ++si)
        for (std::size_t ci = 0; ci < config.scales.size(); ++ci)
            for (std::size_t xi = 0; xi < config.x_positions.size(); ++xi)
                for (std::size_t yi = 0; yi < config.y_positions.size(); ++yi) {
                    const bool square = config.shapes[si] == "square";
                    const double scale = config.scales[ci];
                    const double cx = config.x_positions[xi];
                    const double cy = config.y_positions[yi];
                    const double rx = scale / 2.0;
                    const double ry = square ? rx : rx * kEllipseAspect;
                    check_fit(cx, rx, config.width, "x");
                    check_fit(cy, ry, config.height, "y");
                    dataset.factors.push_back(static_cast<std::uint16_t>(si));
                    dataset.factors.push_back(static_cast<std::uint16_t>(ci));
                    dataset.factors.push_back(static_cast<std::uint16_t>(xi));
                    dataset.factors.push_back(static_cast<std::uint16_t>(yi));
                    for (int row = 0; row < config.height; ++row)
                        for (int col = 0; col < config.width; ++col) {
                            const double value =
                                square ? square_coverage(row, col, cx, cy, rx)
                                       : ellipse_coverage(row, col, cx, cy, rx, ry);
                            dataset.images.push_back(static_cast<float>(value));
                        }
                }
    return dataset;
}

void save_mspr(const std::string& path, const FactorDataset& dataset) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("mspr: cannot open " + path + " for writing");
    out.write("MSPR", 4);
    write_u32(out, 1);
    write_u32(out, static_cast<std::uint32_t>(dataset.count()));
    write_u32(out, dataset.height);
    write_u32(out, dataset.width);
    write_u32(out, static_cast<std::uint32_t>(dataset.factor_count()));
    for (std::uint32_t card : dataset.factor_cardinalities) write_u32(out, card);
    for (std::uint16_t id : dataset.factors) {
        char bytes[2] = {static_cast<char>(id & 0xff), static_cast<char>((id >> 8) & 0xff)};
        out.write(bytes, 2);
    }
    static_assert(sizeof(float) == 4);
    for (float value : dataset.images) {
        std::uint32_t bits;
        std::memcpy(&bits, &value, 4);
        char bytes[4];
        for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
        out.write(bytes, 4);
    }
    if (!out) throw std::runtime_error("mspr: short write to " + path);
}

FactorDataset load_mspr(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("mspr: cannot open " + path);
    char magic[4];
    if (!in.read(magic, 4)) throw std::runtime_error("mspr: truncated payload");
    if (std::memcmp(magic, "MSPR", 4) != 0) throw std::runtime_error("mspr: bad magic");
    const std::uint32_t version = read_u32(in);
    if (version != 1)
        throw std::runtime_error("mspr: version mismatch, got " + std::to_string(version));
    const std::uint32_t n = read_u32(in);
    FactorDataset dataset;
    dataset.height = read_u32(in);
    dataset.width = read_u32(in);
    const std::uint32_t f = read_u32(in);
    for (std::uint32_t i = 0; i < f; ++i) {
        dataset.factor_cardinalities.push_back(read_u32(in));
        dataset.factor_names.push_back("f" + std::to_string(i));
    }
    dataset.factors.resize(static_cast<std::size_t>(n) * f);
    for (std::uint16_t& id : dataset.factors) {
        char bytes[2];
        if (!in.read(bytes, 2)) throw std::runtime_error("mspr: truncated payload");
        id = static_cast<std::uint16_t>(static_cast<unsigned char>(bytes[0]) |
                                        (static_cast<unsigned char>(bytes[1]) << 8));
    }
    dataset.images.resize(static_cast<std::size_t>(n) * dataset.height * dataset.width);
    for (float& value : dataset.images) {
        char bytes[4];
        if (!in.read(bytes, 4)) throw std::runtime_error("mspr: truncated payload");
        std::uint32_t bits = 0;
        for (int i = 0; i < 4; ++i)
            bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
        std::memcpy(&value, &bits, 4);
    }
    return dataset;
}

}  // namespace lpnest
