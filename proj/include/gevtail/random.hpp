#pragma once

// Counter-based random numbers (Philox4x32-10, Salmon et al. 2011).
//
// A stream is identified by (seed, stream_id); the k-th 128-bit block of a
// stream is philox(key = seed, counter = {k, stream_id}). Streams are
// therefore independent by construction and reproducible on every platform.

#include <array>
#include <cstdint>
#include <string_view>

namespace gevtail {

inline constexpr std::string_view generator_name = "philox4x32-10";

struct RngSpec {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;

    friend bool operator==(const RngSpec&, const RngSpec&) = default;
};

/// Raw Philox4x32 with 10 rounds.
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t m0 = 0xD2511F53u;
    constexpr std::uint32_t m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u;
    constexpr std::uint32_t w1 = 0xBB67AE85u;

    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += w0;
            key[1] += w1;
        }
        const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

/// Sequential view of one Philox stream.
class CounterRng {
public:
    explicit CounterRng(RngSpec spec) : spec_(spec) {}

    std::uint64_t next_u64() {
        if (cursor_ == 2) refill();
        return buffer_[cursor_++];
    }

    /// Uniform on the open interval (0, 1); never returns 0 or 1.
    double next_uniform() {
        constexpr double scale = 0x1.0p-53;
        return (static_cast<double>(next_u64() >> 11) + 0.5) * scale;
    }

    /// Uniform on [lo, hi).
    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_uniform(); }

    const RngSpec& spec() const noexcept { return spec_; }

private:
    void refill() {
        const std::array<std::uint32_t, 4> ctr{
            static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
            static_cast<std::uint32_t>(spec_.stream_id),
            static_cast<std::uint32_t>(spec_.stream_id >> 32)};
        const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(spec_.seed),
                                               static_cast<std::uint32_t>(spec_.seed >> 32)};
        const auto out = philox4x32_10(ctr, key);
        buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
        buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
        ++block_;
        cursor_ = 0;
    }

    RngSpec spec_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int cursor_ = 2;
};

} // namespace gevtail
