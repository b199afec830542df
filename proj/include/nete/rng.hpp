#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace nete {

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

// FNV-1a over the bytes of a string; used to key substreams by sample id.
std::uint64_t hash_id(std::string_view id) noexcept;

// xoshiro256** seeded through splitmix64. Satisfies UniformRandomBitGenerator.
//
// Streams are derived, never shared: every sample (or Monte-Carlo draw) gets
// its own generator keyed by (global seed, id), so results do not depend on
// batch order or thread schedule.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) noexcept;

    static Rng substream(std::uint64_t seed, std::string_view id) noexcept;
    static Rng substream(std::uint64_t seed, std::uint64_t index) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    result_type operator()() noexcept;

    // Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n) noexcept;
    // Uniform double in [0, 1) with 53 bits of resolution.
    double uniform01() noexcept;
    double gaussian() noexcept;
    double rademacher() noexcept;

private:
    std::array<std::uint64_t, 4> s_;
};

}  // namespace nete
