#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "lpnest/distribution.hpp"
#include "lpnest/rng.hpp"
#include "lpnest/tree.hpp"
#include "test_util.hpp"

using namespace lpnest;

namespace {

LpTree flat_tree(int n, double p) {
    std::vector<LpTreeNode> kids;
    for (int i = 0; i < n; ++i) kids.push_back(LpTreeNode::leaf(i));
    return LpTree{LpTreeNode::inner(p, std::move(kids))};
}

/// The worked three-leaf example: z_1 grouped with an inner (z_2, z_3) node.
LpTree nested_tree(double p0, double p1) {
    std::vector<LpTreeNode> inner_kids;
    inner_kids.push_back(LpTreeNode::leaf(1));
    inner_kids.push_back(LpTreeNode::leaf(2));
    std::vector<LpTreeNode> root_kids;
    root_kids.push_back(LpTreeNode::leaf(0));
    root_kids.push_back(LpTreeNode::inner(p1, std::move(inner_kids)));
    return LpTree{LpTreeNode::inner(p0, std::move(root_kids))};
}

/// Composite Simpson integral of exp(log_radial_density) over [0, hi].
/// `points` must be odd.
double radial_mass(const RadialParams& radial, double hi, int points) {
    const double h = hi / (points - 1);
    double sum = 0.0;
    for (int i = 0; i < points; ++i) {
        const double v = i * h;
        const double w = (i == 0 || i == points - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        sum += w * std::exp(log_radial_density(v, radial));
    }
    return sum * h / 3.0;
}

constexpr double kPi = std::numbers::pi;

}  // namespace

TEST_SUITE("distribution") {

TEST_CASE("surface_area unit-sphere examples") {
    CHECK(surface_area(flat_tree(2, 2.0), 1.0) == doctest::Approx(2.0 * kPi).epsilon(1e-12));
    CHECK(surface_area(flat_tree(3, 2.0), 1.0) == doctest::Approx(4.0 * kPi).epsilon(1e-12));
    CHECK(surface_area(flat_tree(2, 1.0), 1.0) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("surface_area scales as R^{n-1}") {
    const LpTree tree = nested_tree(2.1, 1.6);
    const double s1 = surface_area(tree, 1.0);
    CHECK(surface_area(tree, 3.0) == doctest::Approx(9.0 * s1).epsilon(1e-12));
    CHECK(log_surface_area(tree, 3.0) ==
          doctest::Approx(2.0 * std::log(3.0) + std::log(s1)).epsilon(1e-12));
}

TEST_CASE("log_surface_area stays finite far beyond gamma overflow") {
    const LpTree big = flat_tree(500, 2.0);
    const double log_s = log_surface_area(big);
    CHECK(std::isfinite(log_s));
    // Reference: log S = n log 2 + n lgamma(1/2) - (n-1) log 2 - lgamma(n/2).
    const double expected = 500.0 * std::log(2.0) + 500.0 * std::lgamma(0.5) -
                            499.0 * std::log(2.0) - std::lgamma(250.0);
    CHECK(log_s == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("log_radial_density reference values") {
    // Half-normal density at the origin.
    CHECK(log_radial_density(0.0, RadialParams(2.0, 2.0, 1)) ==
          doctest::Approx(std::log(std::sqrt(2.0 / kPi))).epsilon(1e-12));
    // Rayleigh(1) at v0 = 1: log(1 * e^{-1/2}).
    CHECK(log_radial_density(1.0, RadialParams(2.0, 2.0, 2)) ==
          doctest::Approx(-0.5).epsilon(1e-12));
    // n > 1 vanishes at the origin.
    CHECK(log_radial_density(0.0, RadialParams(2.0, 2.0, 2)) ==
          -std::numeric_limits<double>::infinity());
}

TEST_CASE("log_radial_density normalizes to one") {
    CHECK(radial_mass(RadialParams(2.0, 2.0, 1), 12.0, 20001) ==
          doctest::Approx(1.0).epsilon(1e-8));
    CHECK(radial_mass(RadialParams(2.1, 1.3, 6), 12.0, 20001) ==
          doctest::Approx(1.0).epsilon(1e-8));
    // p0 < 1 gives a stretched-exponential tail; [0, 240] leaves ~5e-11 outside.
    CHECK(radial_mass(RadialParams(0.8, 2.5, 3), 240.0, 480001) ==
          doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("radial params reject invalid inputs") {
    CHECK_THROWS_AS(RadialParams(0.0, 2.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(RadialParams(2.0, -1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(RadialParams(2.0, 2.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(log_radial_density(-0.1, RadialParams(2.0, 2.0, 1)),
                    std::invalid_argument);
}

TEST_CASE("distribution mirrors the tree in its radial part") {
    const LpNestedDistribution dist(nested_tree(2.1, 1.6), 1.5);
    CHECK(dist.radial.p0 == 2.1);
    CHECK(dist.radial.n == 3);
    CHECK(dist.radial.s == 1.5);
}

TEST_CASE("log_density bivariate normal examples") {
    const LpNestedDistribution dist(flat_tree(2, 2.0), 2.0);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(2);
    CHECK(log_density(dist, z) == doctest::Approx(-std::log(2.0 * kPi)).epsilon(1e-12));
    z << 1.0, 0.0;
    CHECK(log_density(dist, z) ==
          doctest::Approx(-std::log(2.0 * kPi) - 0.5).epsilon(1e-12));
}

TEST_CASE("nested L2 tree collapses to the trivariate normal") {
    const LpNestedDistribution dist(nested_tree(2.0, 2.0), 2.0);
    Eigen::VectorXd z(3);
    z << 1.0, 1.0, 1.0;
    CHECK(log_density(dist, z) ==
          doctest::Approx(-1.5 * std::log(2.0 * kPi) - 1.5).epsilon(1e-12));
}

TEST_CASE("gaussian reduction holds at random points to 1e-10") {
    Rng rng(11);
    const std::vector<LpTree> trees = {flat_tree(4, 2.0), nested_tree(2.0, 2.0),
                                       make_isa_tree({2, 3}, 2.0, {2.0, 2.0})};
    for (const LpTree& tree : trees) {
        const LpNestedDistribution dist(tree, 2.0);
        const int n = tree.n;
        for (int trial = 0; trial < 100; ++trial) {
            Eigen::VectorXd z(n);
            for (int i = 0; i < n; ++i) z[i] = 3.0 * rng.normal();
            const double normal =
                -0.5 * n * std::log(2.0 * kPi) - 0.5 * z.squaredNorm();
            CHECK(log_density(dist, z) == doctest::Approx(normal).epsilon(1e-10));
        }
    }
}

TEST_CASE("log_density is finite and maximal at the origin") {
    const LpTree tree = make_isa_tree({2, 2}, 2.1, {2.4, 1.8});
    const LpNestedDistribution dist(tree, 1.3);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
    const double at_zero = log_density(dist, zero);
    CHECK(std::isfinite(at_zero));
    const double expected = std::log(2.1) - std::lgamma(4.0 / 2.1) -
                            (4.0 / 2.1) * std::log(1.3) - log_surface_area(tree);
    CHECK(at_zero == doctest::Approx(expected).epsilon(1e-12));
    Eigen::VectorXd z(4);
    z << 0.3, -0.1, 0.2, 0.4;
    CHECK(log_density(dist, z) < at_zero);
}

TEST_CASE("log_density is exactly sign symmetric") {
    const LpNestedDistribution dist(make_isa_tree({2, 2}, 2.1, {2.4, 1.8}), 2.0);
    Eigen::VectorXd z(4);
    z << 0.7, -1.2, 0.4, 2.2;
    Eigen::VectorXd flipped = z;
    flipped[0] = -flipped[0];
    flipped[3] = -flipped[3];
    CHECK(log_density(dist, z) == log_density(dist, flipped));
}

TEST_CASE("log_density rejects bad inputs") {
    const LpNestedDistribution dist(flat_tree(2, 2.0), 2.0);
    CHECK_THROWS_AS(log_density(dist, Eigen::VectorXd::Zero(3)), std::invalid_argument);
    Eigen::VectorXd bad(2);
    bad << 1.0, std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(log_density(dist, bad), std::invalid_argument);
}

TEST_CASE("joint density normalizes on a grid") {
    // 1-D flat tree: plain trapezoid over the real line.
    const LpNestedDistribution lap(flat_tree(1, 1.5), 1.2);
    double mass1 = 0.0;
    const int m1 = 40001;
    const double h1 = 24.0 / (m1 - 1);
    for (int i = 0; i < m1; ++i) {
        Eigen::VectorXd z(1);
        z << -12.0 + i * h1;
        const double w = (i == 0 || i == m1 - 1) ? 0.5 : 1.0;
        mass1 += w * std::exp(log_density(lap, z));
    }
    CHECK(mass1 * h1 == doctest::Approx(1.0).epsilon(1e-3));

    // 2-D ISA tree on a [-9, 9]^2 grid.
    const LpNestedDistribution isa(make_isa_tree({1, 1}, 2.1, {2.0, 2.0}), 1.7);
    double mass2 = 0.0;
    const int m2 = 601;
    const double h2 = 18.0 / (m2 - 1);
    Eigen::VectorXd z(2);
    for (int i = 0; i < m2; ++i) {
        z[0] = -9.0 + i * h2;
        for (int j = 0; j < m2; ++j) {
            z[1] = -9.0 + j * h2;
            mass2 += std::exp(log_density(isa, z));
        }
    }
    CHECK(mass2 * h2 * h2 == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("grad_log_density matches finite differences") {
    const LpNestedDistribution dist(make_isa_tree({2, 3}, 2.1, {2.4, 1.8}), 1.6);
    const auto f = [&](const Eigen::VectorXd& z) { return log_density(dist, z); };
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd z(5);
        for (int i = 0; i < 5; ++i) {
            double v = rng.normal();
            if (std::abs(v) < 0.05) v = std::copysign(0.05, v == 0.0 ? 1.0 : v);
            z[i] = v;
        }
        const Eigen::VectorXd grad = grad_log_density(dist, z);
        Eigen::VectorXd fd(5);
        for (int i = 0; i < 5; ++i) fd[i] = testutil::central_diff(f, z, i);
        CHECK(testutil::max_rel_error(grad, fd) < 1e-4);
    }
}

TEST_CASE("grad_log_density_exponents matches finite differences") {
    const double h = 1e-6;
    Eigen::VectorXd z(5);
    z << 0.8, -1.1, 0.5, 1.9, -0.4;
    const auto density_at = [&](double p0, double p1, double p2) {
        const LpNestedDistribution dist(make_isa_tree({2, 3}, p0, {p1, p2}), 1.6);
        return log_density(dist, z);
    };
    const LpNestedDistribution dist(make_isa_tree({2, 3}, 2.1, {2.4, 1.8}), 1.6);
    const std::vector<double> grad = grad_log_density_exponents(dist, z);
    REQUIRE(grad.size() == 3);
    const double fd0 = (density_at(2.1 + h, 2.4, 1.8) - density_at(2.1 - h, 2.4, 1.8)) / (2 * h);
    const double fd1 = (density_at(2.1, 2.4 + h, 1.8) - density_at(2.1, 2.4 - h, 1.8)) / (2 * h);
    const double fd2 = (density_at(2.1, 2.4, 1.8 + h) - density_at(2.1, 2.4, 1.8 - h)) / (2 * h);
    CHECK(grad[0] == doctest::Approx(fd0).epsilon(1e-5));
    CHECK(grad[1] == doctest::Approx(fd1).epsilon(1e-5));
    CHECK(grad[2] == doctest::Approx(fd2).epsilon(1e-5));
}

TEST_CASE("sampling is bitwise deterministic per seed and mode") {
    const LpNestedDistribution dist(make_isa_tree({2, 2}, 2.1, {2.4, 1.8}), 2.0);
    Rng a(42), b(42), c(43);
    const Eigen::MatrixXd s1 = sample(dist, a, 32);
    const Eigen::MatrixXd s2 = sample(dist, b, 32);
    const Eigen::MatrixXd s3 = sample(dist, c, 32);
    CHECK(s1 == s2);
    CHECK(s1 != s3);
    CHECK_THROWS_AS(sample(dist, a, 0), std::invalid_argument);
}

TEST_CASE("chi-square moment of the flat L2 sampler") {
    const LpNestedDistribution dist(flat_tree(4, 2.0), 2.0);
    Rng rng(7);
    const Eigen::MatrixXd z = sample(dist, rng, 100000);
    // f(z)^2 ~ chi^2(4): mean 4, variance 8.
    const double mean = z.array().square().rowwise().sum().mean();
    const double se = std::sqrt(8.0 / 1e5);
    CHECK(std::abs(mean - 4.0) < 3.0 * se);
}

TEST_CASE("radius moment law holds for a nested tree") {
    const LpTree tree = make_isa_tree({2, 3}, 2.1, {2.4, 1.8});
    const double s = 1.7;
    const LpNestedDistribution dist(tree, s);
    const double shape = 5.0 / 2.1;
    Rng rng(8);
    const Eigen::MatrixXd z = sample(dist, rng, 100000);
    double mean = 0.0;
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        mean += std::pow(eval_f(tree, Eigen::VectorXd(z.row(r).transpose())), 2.1);
    }
    mean /= static_cast<double>(z.rows());
    const double se = std::sqrt(shape) * s / std::sqrt(1e5);
    CHECK(std::abs(mean - shape * s) < 3.0 * se);
}

TEST_CASE("laplace special case has unit absolute moment") {
    const LpNestedDistribution dist(flat_tree(1, 1.0), 1.0);
    Rng rng(9);
    const Eigen::MatrixXd z = sample(dist, rng, 100000);
    const double mean = z.array().abs().mean();
    CHECK(std::abs(mean - 1.0) < 3.0 / std::sqrt(1e5));
}

TEST_CASE("radius law passes a KS test in both sampling modes") {
    const LpTree tree = make_isa_tree({2, 3}, 2.1, {2.4, 1.8});
    const double s = 1.7;
    const double shape = 5.0 / 2.1;
    for (const SampleMode mode : {SampleMode::verbatim, SampleMode::fast}) {
        const LpNestedDistribution dist(tree, s);
        Rng rng(10 + static_cast<int>(mode));
        const Eigen::MatrixXd z = sample(dist, rng, 100000, mode);
        std::vector<double> radii(static_cast<std::size_t>(z.rows()));
        for (Eigen::Index r = 0; r < z.rows(); ++r) {
            radii[static_cast<std::size_t>(r)] =
                std::pow(eval_f(tree, Eigen::VectorXd(z.row(r).transpose())), 2.1);
        }
        const double d = testutil::ks_statistic(
            radii, [&](double x) { return testutil::gamma_cdf(x, shape, s); });
        CHECK(testutil::ks_p_value(d, radii.size()) > 1e-3);
    }
}

TEST_CASE("histogram of samples matches the density cell probabilities") {
    // Flat L1.5 tree on n=2; cells aligned with the axes so each cell is
    // smooth for the quadrature.
    const LpNestedDistribution dist(flat_tree(2, 1.5), 2.0);
    const int cells = 16;
    const double lo = -4.0, hi = 4.0;
    const double w = (hi - lo) / cells;

    // 8-point Gauss-Legendre tensor rule per cell.
    const double gx[4] = {0.1834346424956498, 0.5255324099163290,
                          0.7966664774136267, 0.9602898564975363};
    const double gw[4] = {0.3626837833783620, 0.3137066458778873,
                          0.2223810344533745, 0.1012285362903763};
    std::vector<double> nodes, weights;
    for (int i = 0; i < 4; ++i) {
        nodes.push_back(-gx[i]);
        nodes.push_back(gx[i]);
        weights.push_back(gw[i]);
        weights.push_back(gw[i]);
    }

    std::vector<double> prob(static_cast<std::size_t>(cells * cells), 0.0);
    double inside = 0.0;
    Eigen::VectorXd z(2);
    for (int cx = 0; cx < cells; ++cx) {
        for (int cy = 0; cy < cells; ++cy) {
            const double x0 = lo + cx * w, y0 = lo + cy * w;
            double p = 0.0;
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                z[0] = x0 + 0.5 * w * (1.0 + nodes[i]);
                for (std::size_t j = 0; j < nodes.size(); ++j) {
                    z[1] = y0 + 0.5 * w * (1.0 + nodes[j]);
                    p += weights[i] * weights[j] * std::exp(log_density(dist, z));
                }
            }
            p *= 0.25 * w * w;
            prob[static_cast<std::size_t>(cx * cells + cy)] = p;
            inside += p;
        }
    }

    const int n_samples = 1000000;
    Rng rng(12);
    const Eigen::MatrixXd samples = sample(dist, rng, n_samples);
    std::vector<double> counts(prob.size(), 0.0);
    double outside_count = 0.0;
    for (Eigen::Index r = 0; r < samples.rows(); ++r) {
        const double x = samples(r, 0), y = samples(r, 1);
        if (x < lo || x >= hi || y < lo || y >= hi) {
            outside_count += 1.0;
            continue;
        }
        const int cx = static_cast<int>((x - lo) / w);
        const int cy = static_cast<int>((y - lo) / w);
        counts[static_cast<std::size_t>(cx * cells + cy)] += 1.0;
    }

    // Pool cells with tiny expectation into the outside bucket, then compare
    // against the 99.9% chi-square critical value (Wilson-Hilferty).
    double chi2 = 0.0;
    int dof = 0;
    double pooled_p = 1.0 - inside;
    double pooled_c = outside_count;
    for (std::size_t i = 0; i < prob.size(); ++i) {
        const double expected = prob[i] * n_samples;
        if (expected < 20.0) {
            pooled_p += prob[i];
            pooled_c += counts[i];
            continue;
        }
        chi2 += (counts[i] - expected) * (counts[i] - expected) / expected;
        ++dof;
    }
    const double pooled_e = pooled_p * n_samples;
    REQUIRE(pooled_e > 20.0);
    chi2 += (pooled_c - pooled_e) * (pooled_c - pooled_e) / pooled_e;
    const double k = static_cast<double>(dof);  // cells + pooled - 1
    const double zq = 3.090232306167814;
    const double critical =
        k * std::pow(1.0 - 2.0 / (9.0 * k) + zq * std::sqrt(2.0 / (9.0 * k)), 3.0);
    CHECK(chi2 < critical);
}

TEST_CASE("subspace radii are uncorrelated") {
    const LpTree tree = make_isa_tree({2, 2}, 2.1, {2.4, 1.8});
    const LpNestedDistribution dist(tree, 2.0);
    Rng rng(13);
    const int n_samples = 20000;
    const Eigen::MatrixXd z = sample(dist, rng, n_samples);
    Eigen::VectorXd v1(n_samples), v2(n_samples);
    for (int r = 0; r < n_samples; ++r) {
        v1[r] = std::pow(std::pow(std::abs(z(r, 0)), 2.4) + std::pow(std::abs(z(r, 1)), 2.4),
                         1.0 / 2.4);
        v2[r] = std::pow(std::pow(std::abs(z(r, 2)), 1.8) + std::pow(std::abs(z(r, 3)), 1.8),
                         1.0 / 1.8);
    }
    v1.array() -= v1.mean();
    v2.array() -= v2.mean();
    const double corr = v1.dot(v2) / std::sqrt(v1.squaredNorm() * v2.squaredNorm());
    CHECK(std::abs(corr) < 3.0 / std::sqrt(static_cast<double>(n_samples)));
}

TEST_CASE("kurtosis_to_p reference points") {
    CHECK(kurtosis_to_p(0.0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(kurtosis_to_p(1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(kurtosis_to_p(-1.0 / 6.0) == doctest::Approx(2.4).epsilon(1e-12));
    CHECK_THROWS_AS(kurtosis_to_p(-1.0), std::invalid_argument);
}

TEST_CASE("generalized gaussian spec wraps the flat tree") {
    const GeneralizedGaussianSpec spec{1.5, 2.5};
    CHECK(spec.tau() == doctest::Approx(0.4).epsilon(1e-14));
    const LpNestedDistribution dist = spec.distribution(3);
    CHECK(dist.radial.p0 == 1.5);
    CHECK(dist.radial.s == 2.5);
    CHECK(dist.tree.n == 3);
    // Exponential power density in closed form for n=1.
    const LpNestedDistribution one = spec.distribution(1);
    Eigen::VectorXd z(1);
    z << 0.9;
    const double expected = std::log(1.5) - std::log(2.0) - std::lgamma(1.0 / 1.5) -
                            (1.0 / 1.5) * std::log(2.5) - std::pow(0.9, 1.5) / 2.5;
    CHECK(log_density(one, z) == doctest::Approx(expected).epsilon(1e-12));
    // p = 2, s = 2 is the standard normal.
    const GeneralizedGaussianSpec normal{2.0, 2.0};
    z << 0.9;
    CHECK(log_density(normal.distribution(1), z) ==
          doctest::Approx(-0.5 * std::log(2.0 * kPi) - 0.5 * 0.81).epsilon(1e-12));
}

}  // TEST_SUITE
