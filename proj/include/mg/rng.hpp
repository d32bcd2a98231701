#ifndef MG_RNG_HPP
#define MG_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace mg {

/// Deterministic random stream. All stochastic code in the project draws
/// through this class so that a run is fully reproducible from its seed.
///
/// The normal sampler and shuffle are hand-rolled: the sequences produced by
/// std::normal_distribution and std::shuffle are implementation-defined, so
/// relying on them would tie outputs to a particular standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix(seed)), seed_(seed) {}

    /// Uniform double in [0, 1).
    double uniform() {
        // 53 random mantissa bits.
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t randint(std::uint64_t n) {
        // Rejection sampling to avoid modulo bias.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /// Normal draw via Box-Muller with a cached spare.
    double normal(double mean = 0.0, double stddev = 1.0) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + stddev * spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return mean + stddev * r * std::cos(theta);
    }

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[randint(i)]);
        }
    }

    /// Independent stream derived from this stream's seed and a tag.
    /// Substreams with distinct tags do not disturb the parent stream.
    Rng substream(std::uint64_t tag) const {
        return Rng(mix(seed_ ^ mix(tag + 0x9e3779b97f4a7c15ULL)));
    }

    std::uint64_t seed() const { return seed_; }

private:
    // splitmix64 finalizer; spreads low-entropy seeds over the full state.
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::mt19937_64 engine_;
    std::uint64_t seed_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Factory matching the toolkit-wide seeding convention.
inline Rng seeded_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace mg

#endif  // MG_RNG_HPP
