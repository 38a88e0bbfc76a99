#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace lyapsim {

/// Philox4x32-10 counter-based block function (Salmon et al., Random123).
/// Maps a 128-bit counter and a 64-bit key to 128 pseudo-random bits.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

inline constexpr std::string_view kGeneratorName = "philox4x32-10";

/// Independent sub-streams of a path stream. The lane lives in the top byte
/// of the stream id, so path ids must stay below 2^56.
enum class Lane : std::uint8_t {
    path = 0,
    large_jumps = 1,
    gaussian = 2,
    small_jumps = 3,
    initial_state = 4,
};

/// A reproducible random stream: draw k of stream (seed, stream_id) is a pure
/// function of (seed, stream_id, k). No state is shared between streams.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }
    /// Number of 64-bit words drawn so far.
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64();
    /// Uniform on the open interval (0,1); never returns 0 or 1.
    double uniform();

    RandomStream substream(Lane lane) const;

    static constexpr std::uint64_t kMaxStreamId = (std::uint64_t{1} << 56) - 1;

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t counter_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
};

}  // namespace lyapsim
