/// @file rng.hpp
/// @brief Portable seeded randomness.
///
/// Candidates and demo picks must replay bit-for-bit on every platform, so the
/// engine is std::mt19937_64 (its output sequence is fixed by the standard)
/// and all derived draws avoid the implementation-defined std distributions.

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dtg {

inline constexpr std::string_view kRngName = "mt19937_64";

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t splitmix64(std::uint64_t x);

/// Per-item seed so that parallel processing order never changes outputs.
std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view item_id);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n) by rejection sampling; n must be > 0.
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 engine_;
};

}  // namespace dtg
