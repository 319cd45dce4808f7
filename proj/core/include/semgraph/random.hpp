#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace semgraph {

/// Seeded generator whose draws are identical across standard libraries.
///
/// The std distributions are implementation-defined, so integer, uniform and
/// normal draws are derived here directly from the (fully specified)
/// mt19937_64 engine.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t draw = engine_();
        while (draw >= limit) draw = engine_();
        return draw % n;
    }

    /// Standard normal via Box-Muller.
    double normal();

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed of the named sub-stream `name`/`index` derived from a root seed, so
/// that each consumer of randomness is reproducible on its own.
std::uint64_t substream_seed(std::uint64_t root, std::string_view name,
                             std::uint64_t index = 0);

inline Rng substream(std::uint64_t root, std::string_view name,
                     std::uint64_t index = 0) {
    return Rng(substream_seed(root, name, index));
}

}  // namespace semgraph
