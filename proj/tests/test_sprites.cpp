#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>

#include "lpnest/sprites.hpp"
#include "test_util.hpp"

using namespace lpnest;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path(name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

double image_sum(const FactorDataset& dataset, std::size_t index) {
    const std::size_t pixels = static_cast<std::size_t>(dataset.height) * dataset.width;
    double sum = 0.0;
    for (std::size_t i = 0; i < pixels; ++i)
        sum += dataset.images[index * pixels + i];
    return sum;
}

}  // namespace

TEST_SUITE("sprites") {

TEST_CASE("default config yields the 64-image grid") {
    const FactorDataset dataset = generate_sprites(SpritesConfig{});
    CHECK(dataset.count() == 64);
    CHECK(dataset.height == 16);
    CHECK(dataset.width == 16);
    CHECK(dataset.factor_count() == 4);
    CHECK(dataset.factor_names ==
          std::vector<std::string>{"shape", "scale", "x", "y"});
    CHECK(dataset.factor_cardinalities == std::vector<std::uint32_t>{1, 1, 8, 8});
    CHECK(dataset.images.size() == 64u * 256u);

    // Every factor tuple appears exactly once.
    std::set<std::vector<std::uint16_t>> seen;
    const Eigen::MatrixXi factors = dataset.factor_matrix();
    for (int i = 0; i < 64; ++i) {
        seen.insert({static_cast<std::uint16_t>(factors(i, 0)),
                     static_cast<std::uint16_t>(factors(i, 1)),
                     static_cast<std::uint16_t>(factors(i, 2)),
                     static_cast<std::uint16_t>(factors(i, 3))});
    }
    CHECK(seen.size() == 64);
}

TEST_CASE("pixels stay in range and squares cover their exact area") {
    const FactorDataset dataset = generate_sprites(SpritesConfig{});
    for (const float value : dataset.images) {
        CHECK(value >= 0.0f);
        CHECK(value <= 1.0f);
    }
    // A 5x5 square covers area 25 regardless of sub-pixel placement.
    for (std::size_t i = 0; i < dataset.count(); ++i) {
        CHECK(image_sum(dataset, i) == doctest::Approx(25.0).epsilon(1e-9));
    }
}

TEST_CASE("swapping the position indices transposes the image") {
    const FactorDataset dataset = generate_sprites(SpritesConfig{});
    const int a = 2, b = 5;
    const std::size_t ij = static_cast<std::size_t>(a) * 8 + b;
    const std::size_t ji = static_cast<std::size_t>(b) * 8 + a;
    for (int r = 0; r < 16; ++r) {
        for (int c = 0; c < 16; ++c) {
            CHECK(dataset.images[ij * 256 + static_cast<std::size_t>(r) * 16 + c] ==
                  dataset.images[ji * 256 + static_cast<std::size_t>(c) * 16 + r]);
        }
    }
}

TEST_CASE("generation is deterministic") {
    SpritesConfig config;
    config.shapes = {"square", "ellipse"};
    config.scales = {5.0, 7.0};
    const FactorDataset a = generate_sprites(config);
    const FactorDataset b = generate_sprites(config);
    CHECK(a.count() == 2u * 2u * 8u * 8u);
    CHECK(a.images == b.images);
    CHECK(a.factors == b.factors);
}

TEST_CASE("ellipses cover approximately pi a b") {
    SpritesConfig config;
    config.shapes = {"ellipse"};
    config.scales = {6.0};
    config.x_positions = {8.0};
    config.y_positions = {8.0};
    const FactorDataset dataset = generate_sprites(config);
    const double expected = std::numbers::pi * 3.0 * 1.8;  // rx = 3, ry = 1.8
    CHECK(image_sum(dataset, 0) == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("shapes that leave the frame are rejected") {
    SpritesConfig big;
    big.scales = {20.0};
    CHECK_THROWS_WITH_AS(generate_sprites(big), doctest::Contains("exceeds frame"),
                         std::invalid_argument);

    SpritesConfig off;
    off.x_positions = {1.0};
    CHECK_THROWS_WITH_AS(generate_sprites(off), doctest::Contains("exceeds frame"),
                         std::invalid_argument);

    SpritesConfig unknown;
    unknown.shapes = {"heart"};
    CHECK_THROWS_AS(generate_sprites(unknown), std::invalid_argument);
}

TEST_CASE("mspr files round trip bitwise") {
    const FactorDataset dataset = generate_sprites(SpritesConfig{});
    TempFile file("sprites_roundtrip.mspr");
    save_mspr(file.path, dataset);
    const FactorDataset back = load_mspr(file.path);
    CHECK(back.height == dataset.height);
    CHECK(back.width == dataset.width);
    CHECK(back.factor_cardinalities == dataset.factor_cardinalities);
    CHECK(back.factors == dataset.factors);
    CHECK(back.images == dataset.images);

    save_mspr(file.path, back);
    const FactorDataset second = load_mspr(file.path);
    CHECK(second.images == dataset.images);
}

TEST_CASE("mspr load errors are distinct") {
    const FactorDataset dataset = generate_sprites(SpritesConfig{});
    TempFile good("sprites_good.mspr");
    save_mspr(good.path, dataset);

    const auto read_bytes = [&](const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        return std::vector<char>((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
    };
    const auto write_bytes = [](const std::string& path, const std::vector<char>& bytes) {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    };
    const std::vector<char> bytes = read_bytes(good.path);

    TempFile magic("sprites_magic.mspr");
    std::vector<char> bad = bytes;
    bad[0] = 'X';
    write_bytes(magic.path, bad);
    CHECK_THROWS_WITH_AS(load_mspr(magic.path), doctest::Contains("bad magic"),
                         std::runtime_error);

    TempFile version("sprites_version.mspr");
    bad = bytes;
    bad[4] = 9;
    write_bytes(version.path, bad);
    CHECK_THROWS_WITH_AS(load_mspr(version.path), doctest::Contains("version"),
                         std::runtime_error);

    TempFile trunc("sprites_trunc.mspr");
    bad = bytes;
    bad.resize(bad.size() - 100);
    write_bytes(trunc.path, bad);
    CHECK_THROWS_WITH_AS(load_mspr(trunc.path), doctest::Contains("truncated"),
                         std::runtime_error);

    CHECK_THROWS_AS(load_mspr("missing_file.mspr"), std::runtime_error);
}

}  // TEST_SUITE
