#pragma once

#include <bit>
#include <cstdint>

// Counter-based random streams. Every uniform is a pure function of
// (stream, counter), so any pulse can be simulated without touching the
// others and batch kernels can generate draws in any lane order.

namespace qrelay::simd {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
inline constexpr std::uint64_t kMixMul1 = 0xBF58476D1CE4E5B9ull;
inline constexpr std::uint64_t kMixMul2 = 0x94D049BB133111EBull;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * kMixMul1;
  z = (z ^ (z >> 27)) * kMixMul2;
  return z ^ (z >> 31);
}

/// Independent stream for `counter` under `key`.
constexpr std::uint64_t derive_stream(std::uint64_t key, std::uint64_t counter) {
  return mix64(key ^ mix64(counter * kGolden + 0xD1B54A32D192ED03ull));
}

/// Uniform in [0, 1) with 52 random mantissa bits.
inline double unit_from_bits(std::uint64_t bits) {
  return std::bit_cast<double>(0x3FF0000000000000ull | (bits >> 12)) - 1.0;
}

/// The `index`-th uniform of a stream (SplitMix64 output number index+1).
inline double stream_uniform(std::uint64_t stream, std::uint64_t index) {
  return unit_from_bits(mix64(stream + (index + 1) * kGolden));
}

}  // namespace qrelay::simd
