#ifndef CLGSMOOTH_RNG_HPP
#define CLGSMOOTH_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

#include <Eigen/Core>

namespace clgsmooth {

/// splitmix64 output function; a good 64-bit mixer.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Folds a list of 64-bit tags into a single substream seed. Used to give
/// every (run, instant, particle, purpose) tuple its own reproducible stream,
/// independent of thread scheduling.
inline std::uint64_t seed_mix(std::initializer_list<std::uint64_t> tags) {
    std::uint64_t h = 0x6a09e667f3bcc909ull;
    for (std::uint64_t t : tags) h = splitmix64(h ^ splitmix64(t));
    return h;
}

/// Small seedable RNG wrapper around mt19937_64.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal() {
        std::normal_distribution<double> d(0.0, 1.0);
        return d(engine_);
    }

    /// Uniform in [0, 1).
    double uniform() {
        std::uniform_real_distribution<double> d(0.0, 1.0);
        return d(engine_);
    }

    Eigen::VectorXd normal_vector(Eigen::Index n) {
        Eigen::VectorXd z(n);
        for (Eigen::Index i = 0; i < n; ++i) z(i) = normal();
        return z;
    }

    /// Draws an index with probability proportional to the given nonnegative
    /// weights (assumed normalized; the last index absorbs rounding).
    int categorical(std::span<const double> weights) {
        double u = uniform();
        double c = 0.0;
        for (std::size_t j = 0; j + 1 < weights.size(); ++j) {
            c += weights[j];
            if (u < c) return static_cast<int>(j);
        }
        return static_cast<int>(weights.size()) - 1;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace clgsmooth

#endif
