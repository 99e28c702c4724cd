#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>

namespace covadj {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3"). Pure: the same counter and key always give the same block.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

/// Location of a stream in the simulation: which scheme, model, replicate
/// and redraw attempt it feeds. scheme and attempt must fit in 16 bits.
struct StreamPath {
    std::uint32_t scheme = 0;
    std::uint32_t model = 0;
    std::uint32_t replicate = 0;
    std::uint32_t attempt = 0;
};

/// Reserved scheme slot for streams that do not belong to a simulation cell.
inline constexpr std::uint32_t kAuxiliaryScheme = 0xFFFF;

/// Counter-based stream: draw i is a pure function of (seed, path, i), so
/// results never depend on which thread consumed which stream.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, StreamPath path);

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
    result_type operator()() { return next_u64(); }

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform on the open interval (0, 1).
    double uniform_open();
    /// Standard normal by Box–Muller; draws are consumed in pairs.
    double normal();
    /// Unbiased uniform integer on [0, n), n >= 1.
    std::uint64_t below(std::uint64_t n);
    bool coin();

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint64_t, 2> buffer_{};
    std::size_t buffered_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace covadj
