#pragma once

#include <cstddef>
#include <cstdint>

namespace sim {

/// @brief Counter-free child-stream derivation via splitmix64.
///
/// Each call advances the state by the golden-gamma increment and returns a
/// well-mixed 64-bit word.  Used only for seeding.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// @brief xoshiro256++ generator with ziggurat normal sampling.
///
/// Streams are derived from (master seed, stream index) through disjoint
/// splitmix64 blocks, so per-repeat results do not depend on how repeats are
/// scheduled across workers.
class Rng {
  public:
    Rng() : Rng(0x2545f4914f6cdd1dULL) {}

    explicit Rng(std::uint64_t seed) {
        std::uint64_t s = seed;
        seed_from(s);
    }

    /// Derive stream k of a master seed.  Each stream consumes its own block
    /// of four splitmix64 outputs, so distinct k never share seed words.
    static Rng child(std::uint64_t master_seed, std::uint64_t stream) {
        Rng r;
        std::uint64_t s = master_seed + 0x9e3779b97f4a7c15ULL * (4 * stream);
        r.seed_from(s);
        return r;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1); safe as a log() argument.
    double uniform_open() {
        double u;
        do {
            u = uniform();
        } while (u == 0.0);
        return u;
    }

    /// Standard normal via a 128-layer ziggurat.
    double normal();

    void fill_normals(double* dst, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) dst[i] = normal();
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    void seed_from(std::uint64_t& s) {
        for (auto& w : s_) w = splitmix64_next(s);
        // all-zero state is invalid for xoshiro; unreachable in practice
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
    }

    double normal_tail(bool negative);

    std::uint64_t s_[4]{};
};

}  // namespace sim
