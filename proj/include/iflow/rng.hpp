#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace iflow {

// Deterministic stream splitting: every consumer derives its own stream from the
// root seed by name, so adding a new consumer never perturbs existing draws.
class Rng {
public:
    using result_type = uint64_t;

    explicit Rng(uint64_t seed) : seed_(seed) {
        // splitmix64 expansion of the seed into xoshiro256++ state.
        uint64_t x = seed;
        for (auto& w : s_) w = splitmix(x);
    }

    Rng sub(std::string_view name) const { return Rng(mix(seed_, fnv1a(name))); }
    Rng sub(std::string_view name, uint64_t k) const {
        return Rng(mix(mix(seed_, fnv1a(name)), k + 0x9e3779b97f4a7c15ull));
    }

    uint64_t seed() const { return seed_; }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<uint64_t>::max(); }
    result_type operator()() { return next(); }

    uint64_t next() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // [0, 1)
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // {0, ..., n-1} without modulo bias
    std::size_t uniform_index(std::size_t n) {
        const uint64_t limit = max() - max() % n;
        uint64_t v = next();
        while (v >= limit) v = next();
        return std::size_t(v % n);
    }

    // Box-Muller, two uniforms per value; stateless so call sequences replay exactly.
    double normal() {
        const double u1 = 1.0 - uniform(); // (0, 1], keeps the log finite
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    long poisson(double lambda) {
        std::poisson_distribution<long> d(lambda);
        return d(*this);
    }

    double gamma_draw(double shape, double scale) {
        std::gamma_distribution<double> d(shape, scale);
        return d(*this);
    }

    double rayleigh(double sigma) {
        const double u = 1.0 - uniform();
        return sigma * std::sqrt(-2.0 * std::log(u));
    }

private:
    static uint64_t splitmix(uint64_t& x) {
        uint64_t z = (x += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static uint64_t mix(uint64_t a, uint64_t b) {
        uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
        return splitmix(x);
    }

    static constexpr uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    static constexpr uint64_t fnv1a(std::string_view s) {
        uint64_t h = 0xcbf29ce484222325ull;
        for (char c : s) {
            h ^= uint64_t(uint8_t(c));
            h *= 0x100000001b3ull;
        }
        return h;
    }

    uint64_t s_[4];
    uint64_t seed_;
};

} // namespace iflow
