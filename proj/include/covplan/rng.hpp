#pragma once

#include <cstdint>
#include <random>

namespace covplan {

// Deterministic RNG wrapper. std::mt19937_64 has a portable output sequence,
// but the standard distributions do not, so the mappings are done by hand
// here. Every seeded result in the planner must be reproducible across
// compilers and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), n > 0. Bounded rejection sampling keeps the
    // mapping unbiased and portable.
    std::uint64_t uniform_index(std::uint64_t n) {
        std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = engine_();
            if (r >= threshold) return r % n;
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace covplan
