#include <atomic>

#include "qrelay/errors.hpp"
#include "qrelay/simd/kernels.hpp"

namespace qrelay::simd {
namespace {

// -1 = automatic, otherwise the forced Isa value.
std::atomic<int> g_forced{-1};

bool cpu_has_avx2() {
#if defined(QRELAY_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  static const bool has = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return has;
#else
  return false;
#endif
}

}  // namespace

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2: return cpu_has_avx2();
  }
  return false;
}

Isa best_isa() { return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar; }

Isa active_isa() {
  const int forced = g_forced.load(std::memory_order_relaxed);
  return forced < 0 ? best_isa() : static_cast<Isa>(forced);
}

void force_isa(std::optional<Isa> isa) {
  if (isa && !isa_supported(*isa)) {
    throw DomainError(std::string("instruction set not available: ") + isa_name(*isa));
  }
  g_forced.store(isa ? static_cast<int>(*isa) : -1, std::memory_order_relaxed);
}

const KernelTable& kernels(Isa isa) {
#ifdef QRELAY_HAVE_AVX2_KERNELS
  if (isa == Isa::avx2 && isa_supported(Isa::avx2)) return detail::avx2_kernels();
#endif
  (void)isa;
  return detail::scalar_kernels();
}

void fill_uniforms(std::uint64_t stream, std::uint64_t first, std::span<double> out) {
  kernels().fill_uniforms(stream, first, out.data(), out.size());
}

void gaussian_profile(std::span<const double> x, double center, double fwhm,
                      std::span<double> out) {
  if (out.size() != x.size()) throw DomainError("gaussian_profile: size mismatch");
  kernels().gaussian_profile(x.data(), x.size(), center, fwhm, out.data());
}

void sinc2_profile(std::span<const double> x, double center, double fwhm,
                   std::span<double> out) {
  if (out.size() != x.size()) throw DomainError("sinc2_profile: size mismatch");
  kernels().sinc2_profile(x.data(), x.size(), center, fwhm, out.data());
}

}  // namespace qrelay::simd
