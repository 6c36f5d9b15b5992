#include "tsattr/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace tsattr {

double Rng::next_gaussian() {
    // Box-Muller. u1 is kept away from 0 so the log stays finite.
    double u1 = next_double();
    double u2 = next_double();
    if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<int> random_permutation(int n, Rng& rng) {
    std::vector<int> p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), 0);
    shuffle(p, rng);
    return p;
}

std::vector<int> sample_without_replacement(int n, int k, Rng& rng) {
    if (k < 0 || k > n) {
        throw std::invalid_argument("sample_without_replacement: k out of range");
    }
    std::vector<int> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), 0);
    // Partial Fisher-Yates: the first k slots end up holding the sample.
    for (int i = 0; i < k; ++i) {
        std::uint64_t j = i + rng.next_below(static_cast<std::uint64_t>(n - i));
        std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(k));
    std::sort(pool.begin(), pool.end());
    return pool;
}

double keyed_gaussian(std::uint64_t seed) {
    Rng g(seed);
    return g.next_gaussian();
}

}  // namespace tsattr
