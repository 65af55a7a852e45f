#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

namespace qrelay::simd {

/// Instruction sets with a kernel implementation. `scalar` is the reference
/// every other variant is tested against.
enum class Isa { scalar, avx2 };

const char* isa_name(Isa isa);
/// Whether this binary carries the variant and the running CPU can execute it.
bool isa_supported(Isa isa);
/// Widest supported variant.
Isa best_isa();
/// Variant used by the library: the forced one if set, else `best_isa()`.
Isa active_isa();
/// Pins the dispatch (tests, benchmarks). Throws DomainError for an
/// unsupported variant; std::nullopt restores automatic selection.
void force_isa(std::optional<Isa> isa);

struct KernelTable {
  /// out[i] = stream_uniform(stream, first + i); bit-exact across variants.
  void (*fill_uniforms)(std::uint64_t stream, std::uint64_t first, double* out,
                        std::size_t n);
  /// out[i] = exp(-4 ln2 ((x[i] - center) / fwhm)^2)
  void (*gaussian_profile)(const double* x, std::size_t n, double center, double fwhm,
                           double* out);
  /// out[i] = sinc^2(u), u = u_half (x[i] - center) / (fwhm / 2), where
  /// sinc^2(u_half) = 1/2.
  void (*sinc2_profile)(const double* x, std::size_t n, double center, double fwhm,
                        double* out);
};

/// Argument at which sin(u)^2 / u^2 falls to one half.
inline constexpr double kSinc2HalfMaxArgument = 1.3915573782515103;

const KernelTable& kernels(Isa isa);
inline const KernelTable& kernels() { return kernels(active_isa()); }

void fill_uniforms(std::uint64_t stream, std::uint64_t first, std::span<double> out);
void gaussian_profile(std::span<const double> x, double center, double fwhm,
                      std::span<double> out);
void sinc2_profile(std::span<const double> x, double center, double fwhm,
                   std::span<double> out);

namespace detail {
const KernelTable& scalar_kernels();
#ifdef QRELAY_HAVE_AVX2_KERNELS
const KernelTable& avx2_kernels();
#endif
}  // namespace detail

}  // namespace qrelay::simd
