#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lpnest {

/// Factor grid for the mini-sprites generator. Positions and scales are in
/// pixel units; positions are shape centers.
struct SpritesConfig {
    int height = 16;
    int width = 16;
    std::vector<std::string> shapes = {"square"};
    std::vector<double> scales = {5.0};
    std::vector<double> x_positions = {4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0};
    std::vector<double> y_positions = {4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0};
};

/// Exhaustive factor-combination dataset; images and factors are row-major.
struct FactorDataset {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::vector<std::string> factor_names;
    std::vector<std::uint32_t> factor_cardinalities;
    std::vector<std::uint16_t> factors;
    std::vector<float> images;

    std::size_t count() const { return factor_cardinalities.empty() ? 0 : images.size() / (height * width); }
    std::size_t factor_count() const { return factor_cardinalities.size(); }
    float pixel(std::size_t n, std::size_t row, std::size_t col) const {
        return images[(n * height + row) * width + col];
    }
    /// N×(H·W) double matrix for network input.
    Eigen::MatrixXd image_batch() const;
    /// N×F integer factor ids.
    Eigen::MatrixXi factor_matrix() const;
};

/// Renders every factor combination once, ordered row-major over
/// (shape, scale, x, y). Squares use exact pixel-overlap coverage; ellipses
/// are supersampled. Throws when a shape does not fit inside the frame.
FactorDataset generate_sprites(const SpritesConfig& config);

/// MSPR container, little-endian: magic "MSPR", u32 version=1, u32 N/H/W/F,
/// F×u32 cardinalities, N×F u16 factors, N×H×W float32 images.
void save_mspr(const std::string& path, const FactorDataset& dataset);
FactorDataset load_mspr(const std::string& path);

}  // namespace lpnest
