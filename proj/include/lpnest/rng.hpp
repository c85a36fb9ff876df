#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace lpnest {

/// Splittable deterministic random source: xoshiro256++ seeded through
/// splitmix64. A fixed seed yields a bitwise identical stream; fork()
/// derives statistically independent child streams for parallel work.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    /// Independent child stream; (seed, stream) pairs map to disjoint
    /// generators regardless of how much the parent has been consumed.
    Rng fork(std::uint64_t stream) const {
        std::uint64_t sm = seed_ ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
        return Rng(splitmix64(sm));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on the open interval (0, 1); safe to pass to log().
    double uniform_pos() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; consumes exactly two uniforms.
    double normal() {
        const double u1 = uniform_pos();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    /// Gamma(shape, scale) via Marsaglia-Tsang squeeze; shapes below 1 use
    /// the Gamma(shape + 1) boost multiplied by U^(1/shape).
    double gamma(double shape, double scale) {
        if (!(shape > 0.0) || !(scale > 0.0))
            throw std::invalid_argument("gamma: shape and scale must be positive");
        if (shape < 1.0) {
            const double boost = std::pow(uniform_pos(), 1.0 / shape);
            return gamma_at_least_one(shape + 1.0) * scale * boost;
        }
        return gamma_at_least_one(shape) * scale;
    }

    /// Dirichlet(alpha) via normalized Gamma draws.
    Eigen::VectorXd dirichlet(const Eigen::VectorXd& alpha) {
        Eigen::VectorXd draw(alpha.size());
        for (Eigen::Index i = 0; i < alpha.size(); ++i) draw[i] = gamma(alpha[i], 1.0);
        const double total = draw.sum();
        if (!(total > 0.0)) throw std::runtime_error("dirichlet: degenerate gamma draws");
        return draw / total;
    }

    /// Independent uniform sign, +1 or -1.
    double sign() { return (next_u64() & 1ULL) ? 1.0 : -1.0; }

  private:
    static std::uint64_t splitmix64(std::uint64_t& state) {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    double gamma_at_least_one(double shape) {
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_pos();
            const double x2 = x * x;
            if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
            if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    std::uint64_t seed_;
    std::uint64_t state_[4];
};

}  // namespace lpnest
