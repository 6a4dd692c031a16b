#ifndef AIRTEMP_CORE_RNG_HPP
#define AIRTEMP_CORE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace airtemp {

/// Deterministic random stream. Distribution transforms are hand-rolled so
/// results do not depend on the standard library's implementation of
/// std::uniform_real_distribution and friends.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int lo, int hi_inclusive) {
        return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi_inclusive - lo + 1));
    }

    /// Standard normal via Box-Muller. Two draws per value; no cached spare,
    /// so the stream position is input-independent.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    /// Independent substream named by purpose; forking does not advance
    /// this stream.
    Rng fork(const std::string& tag) const {
        std::uint64_t h = 1469598103934665603ull;
        for (char c : tag) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
        return Rng(seed_ ^ (h | 1ull));
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

} // namespace airtemp

#endif
