#include <doctest.h>

#include <cmath>

#include "lpnest/quadrature.hpp"
#include "lpnest/special.hpp"

using namespace lpnest;

TEST_SUITE("special") {

TEST_CASE("digamma matches reference values") {
    // psi(1) = -gamma, psi(0.5) = -gamma - 2 ln 2, psi(2) = 1 - gamma
    const double euler = 0.5772156649015329;
    CHECK(digamma(1.0) == doctest::Approx(-euler).epsilon(1e-12));
    CHECK(digamma(0.5) == doctest::Approx(-euler - 2.0 * std::log(2.0)).epsilon(1e-12));
    CHECK(digamma(2.0) == doctest::Approx(1.0 - euler).epsilon(1e-12));
    CHECK(digamma(10.0) == doctest::Approx(2.251752589066721).epsilon(1e-12));
}

TEST_CASE("digamma recurrence psi(x+1) = psi(x) + 1/x") {
    for (double x : {0.1, 0.7, 1.3, 4.9, 23.0})
        CHECK(digamma(x + 1.0) == doctest::Approx(digamma(x) + 1.0 / x).epsilon(1e-11));
}

TEST_CASE("digamma matches a finite difference of lgamma") {
    for (double x : {0.3, 1.1, 2.7, 8.0}) {
        const double h = 1e-6;
        const double fd = (std::lgamma(x + h) - std::lgamma(x - h)) / (2.0 * h);
        CHECK(digamma(x) == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("log1pexp and softplus are stable at extremes") {
    CHECK(log1pexp(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(log1pexp(-800.0) == doctest::Approx(0.0));
    CHECK(log1pexp(800.0) == doctest::Approx(800.0));
    CHECK(softplus(3.5) == doctest::Approx(std::log1p(std::exp(3.5))).epsilon(1e-14));
}

TEST_CASE("sigmoid is symmetric and saturates correctly") {
    CHECK(sigmoid(0.0) == doctest::Approx(0.5));
    CHECK(sigmoid(3.0) + sigmoid(-3.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(sigmoid(800.0) == doctest::Approx(1.0));
    CHECK(sigmoid(-800.0) == doctest::Approx(0.0));
}

TEST_CASE("gauss_hermite integrates low-order monomials exactly") {
    const GaussHermiteRule rule = gauss_hermite(16);
    const double root_pi = std::sqrt(std::acos(-1.0));
    double w_sum = 0.0, x2 = 0.0, x4 = 0.0, odd = 0.0;
    for (int i = 0; i < 16; ++i) {
        w_sum += rule.weights[i];
        x2 += rule.weights[i] * rule.nodes[i] * rule.nodes[i];
        x4 += rule.weights[i] * std::pow(rule.nodes[i], 4);
        odd += rule.weights[i] * std::pow(rule.nodes[i], 3);
    }
    // integrals of x^k e^{-x^2}: sqrt(pi), sqrt(pi)/2, 3 sqrt(pi)/4
    CHECK(w_sum == doctest::Approx(root_pi).epsilon(1e-12));
    CHECK(x2 == doctest::Approx(root_pi / 2.0).epsilon(1e-12));
    CHECK(x4 == doctest::Approx(3.0 * root_pi / 4.0).epsilon(1e-12));
    CHECK(odd == doctest::Approx(0.0));
}

TEST_CASE("gauss_hermite computes Gaussian expectations through gh_point") {
    const GaussHermiteRule rule = gauss_hermite(32);
    const double mu = 1.3, var = 0.49;
    double mean = 0.0, second = 0.0;
    const double root_pi = std::sqrt(std::acos(-1.0));
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
        const double z = gh_point(mu, var, rule.nodes[i]);
        mean += rule.weights[i] * z / root_pi;
        second += rule.weights[i] * z * z / root_pi;
    }
    CHECK(mean == doctest::Approx(mu).epsilon(1e-12));
    CHECK(second == doctest::Approx(var + mu * mu).epsilon(1e-12));
}

TEST_CASE("gauss_hermite rejects orders below 2") {
    CHECK_THROWS_AS(gauss_hermite(1), std::invalid_argument);
}

}  // TEST_SUITE
