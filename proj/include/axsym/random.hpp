#pragma once

#include <array>
#include <cstdint>

namespace axsym {

/// Philox4x32-10 counter-based generator (Salmon et al. 2011 constants).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/**
 * Standard normal stream. The key is the 64-bit seed; the counter holds a
 * 64-bit block index (words 0-1) and a 64-bit stream id (words 2-3), so
 * every (seed, stream) pair is an independent sequence. Normals come from
 * Box-Muller on 53-bit uniforms in (0, 1).
 */
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t stream);

    double next();
    // Uniform on (0, 1), never 0 or 1.
    double uniform();

private:
    std::uint32_t next_u32();

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int used_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace axsym
