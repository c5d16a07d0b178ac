#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace cps {

// Output function of splitmix64.
inline uint64_t splitmix64_mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Replicate seed = the (index+1)-th output of the splitmix64 sequence started
// at `master`. Recorded verbatim in report headers so experiment layouts can
// be reproduced elsewhere.
inline uint64_t derive_seed(uint64_t master, uint64_t index) {
    return splitmix64_mix(master + (index + 1) * 0x9E3779B97F4A7C15ull);
}

inline constexpr const char* kSeedDerivation =
    "derived_seed = splitmix64_mix(master + (index+1)*0x9E3779B97F4A7C15)";

// One replicate's private random stream. Samplers are hand-inverted from
// uniform bits so results do not depend on the standard library's
// distribution implementations.
class RngStream {
public:
    explicit RngStream(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // Uniform on the open interval (0,1).
    double uniform() {
        return (static_cast<double>(gen_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    // Uniform integer in [0, n). Modulo bias is < 2^-40 for n below 2^24,
    // far under anything our statistical tolerances can see.
    uint64_t below(uint64_t n) { return gen_() % n; }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 gen_;
};

}  // namespace cps
