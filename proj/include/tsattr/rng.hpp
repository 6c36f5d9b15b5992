#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace tsattr {

// Combines a seed with a stream key (splitmix64 finalizer). Chaining calls
// derives independent sub-streams from (seed, k1, k2, ...).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (key + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Self-contained splitmix64 generator. All randomness in the library flows
// through this type: the <random> distributions are implementation-defined
// and would break bit-exact reproducibility across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Unbiased uniform integer in [0, n). Rejection sampling.
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::next_below: n must be positive");
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Standard normal draw (Box-Muller, two uniforms consumed, no spare cached).
    double next_gaussian();

private:
    std::uint64_t state_;
};

// Fisher-Yates permutation of {0, ..., n-1}.
std::vector<int> random_permutation(int n, Rng& rng);

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[rng.next_below(i)]);
    }
}

// k distinct indices from {0, ..., n-1}, returned ascending.
std::vector<int> sample_without_replacement(int n, int k, Rng& rng);

// Deterministic standard-normal value keyed by an arbitrary seed chain.
double keyed_gaussian(std::uint64_t seed);

}  // namespace tsattr
