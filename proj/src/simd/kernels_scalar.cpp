#include <cmath>
#include <numbers>

#include "qrelay/simd/kernels.hpp"
#include "qrelay/simd/rng.hpp"

namespace qrelay::simd::detail {
namespace {

void fill_uniforms(std::uint64_t stream, std::uint64_t first, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = stream_uniform(stream, first + i);
}

void gaussian_profile(const double* x, std::size_t n, double center, double fwhm,
                      double* out) {
  const double k = -4.0 * std::numbers::ln2 / (fwhm * fwhm);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - center;
    out[i] = std::exp(k * d * d);
  }
}

void sinc2_profile(const double* x, std::size_t n, double center, double fwhm,
                   double* out) {
  const double scale = 2.0 * kSinc2HalfMaxArgument / fwhm;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = scale * (x[i] - center);
    if (std::abs(u) < 1e-8) {
      out[i] = 1.0 - u * u / 3.0;
    } else {
      const double s = std::sin(u) / u;
      out[i] = s * s;
    }
  }
}

constexpr KernelTable kTable{&fill_uniforms, &gaussian_profile, &sinc2_profile};

}  // namespace

const KernelTable& scalar_kernels() { return kTable; }

}  // namespace qrelay::simd::detail
