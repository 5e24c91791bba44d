#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace drdel {

// splitmix64 finalizer; used for seed expansion and stream derivation.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Pure function of (base, key): the seed of a child stream. Independent of
// call order, so parallel and serial runs derive identical streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t key) {
    return mix64(base ^ mix64(key ^ 0xd1b54a32d192ed03ULL));
}

// xoshiro256++ with value semantics. Self-contained so results do not depend
// on the standard library's distribution implementations.
class RngStream {
   public:
    explicit RngStream(std::uint64_t seed) {
        std::uint64_t sm = seed;
        auto next_sm = [&sm] {
            sm += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = sm;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            return z ^ (z >> 31);
        };
        for (auto& w : state_) w = next_sm();
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased integer in [0, n) (Lemire rejection).
    std::uint64_t uniform_below(std::uint64_t n) {
        while (true) {
            const std::uint64_t x = next_u64();
            const unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
            const auto lo = static_cast<std::uint64_t>(m);
            if (lo < n) {
                const std::uint64_t threshold = (0 - n) % n;
                if (lo < threshold) continue;
            }
            return static_cast<std::uint64_t>(m >> 64);
        }
    }

    // Standard normal via Box-Muller; the spare value is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

   private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> state_{};
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Named sub-stream roots hanging off the master seed. Every consumer derives
// its stream as derive_seed(master, purpose) (possibly chained with an index),
// so adding consumers never shifts the draws of existing ones.
namespace stream_key {
inline constexpr std::uint64_t training_data = 1;
inline constexpr std::uint64_t deletion_mask = 2;
inline constexpr std::uint64_t repeat_root = 3;
inline constexpr std::uint64_t calibration = 4;
inline constexpr std::uint64_t query_points = 5;
inline constexpr std::uint64_t observed_set = 6;
}  // namespace stream_key

inline RngStream stream_for(std::uint64_t master_seed, std::uint64_t purpose) {
    return RngStream(derive_seed(master_seed, purpose));
}

inline RngStream stream_for(std::uint64_t master_seed, std::uint64_t purpose, std::uint64_t index) {
    return RngStream(derive_seed(derive_seed(master_seed, purpose), index));
}

}  // namespace drdel
