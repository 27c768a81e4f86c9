#pragma once

#include <array>
#include <cstdint>

namespace qaction {

/// Philox4x32-10 block function (Salmon et al., SC'11).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxCounter philox4x32_10(PhiloxCounter c, PhiloxKey k) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k[0] += kWeyl0;
            k[1] += kWeyl1;
        }
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
        c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    }
    return c;
}

/// Stream tags keep independent uses of one seed apart.
enum class StreamTag : std::uint32_t {
    lambda = 1,
    initial_position = 2,
    action_deviation = 3,
    sampler = 4,
};

/**
 * Counter-based stream identified by (seed, tag, particle, step).
 *
 * The seed is the Philox key; (step, particle, tag) fill three counter words
 * and the fourth counts blocks within the stream. Any draw is therefore a
 * pure function of its identity and position, independent of scheduling.
 */
class CounterRng {
public:
    CounterRng(std::uint64_t seed, StreamTag tag, std::uint32_t particle = 0, std::uint32_t step = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          ctr_{0u, step, particle, static_cast<std::uint32_t>(tag)} {}

    std::uint32_t next_u32() {
        if (used_ == 4) {
            buf_ = philox4x32_10(ctr_, key_);
            ++ctr_[0];
            used_ = 0;
        }
        return buf_[used_++];
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() {
        const std::uint64_t hi = next_u32();
        const std::uint64_t lo = next_u32();
        return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
    }

private:
    PhiloxKey key_;
    PhiloxCounter ctr_;
    PhiloxCounter buf_{};
    int used_ = 4;
};

}  // namespace qaction
