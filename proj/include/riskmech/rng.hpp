#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace riskmech {

// Counter-based random numbers. Every draw is a pure keyed hash of
// (key, stream, counter), so streams share no state, replicates can run in
// any order or in parallel, and a draw can be recomputed from its
// coordinates alone.
//
// The derivation is frozen (tests reimplement it independently):
//   z0 = finalize(key + GAMMA)
//   z1 = finalize((z0 ^ stream) + GAMMA)
//   out = finalize((z1 ^ counter) + GAMMA)
// where finalize is the splitmix64 finalizer and GAMMA = 0x9e3779b97f4a7c15.

inline constexpr std::uint64_t kRngGamma = 0x9e3779b97f4a7c15ULL;

inline constexpr std::uint64_t splitmix_finalize(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

inline constexpr std::uint64_t counter_mix(std::uint64_t key, std::uint64_t stream,
                                           std::uint64_t counter) {
    std::uint64_t z = splitmix_finalize(key + kRngGamma);
    z = splitmix_finalize((z ^ stream) + kRngGamma);
    return splitmix_finalize((z ^ counter) + kRngGamma);
}

// Uniform double in [0, 1) built from the top 53 bits of the hash.
inline double counter_uniform(std::uint64_t key, std::uint64_t stream, std::uint64_t counter) {
    return static_cast<double>(counter_mix(key, stream, counter) >> 11) * 0x1.0p-53;
}

// Inverse-CDF draw from a discrete distribution. Probabilities need not sum
// to exactly 1; any trailing remainder is absorbed by the last entry.
inline std::size_t categorical(std::span<const double> probs, double u) {
    double cum = 0.0;
    for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
        cum += probs[k];
        if (u < cum) return k;
    }
    return probs.empty() ? 0 : probs.size() - 1;
}

}  // namespace riskmech
