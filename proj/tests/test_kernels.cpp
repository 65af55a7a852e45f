#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <vector>

#include "qrelay/errors.hpp"
#include "qrelay/simd/kernels.hpp"
#include "qrelay/simd/rng.hpp"

using namespace qrelay::simd;

namespace {

std::vector<double> grid(double lo, double hi, std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  return x;
}

std::vector<Isa> available() {
  std::vector<Isa> out{Isa::scalar};
  if (isa_supported(Isa::avx2)) out.push_back(Isa::avx2);
  return out;
}

}  // namespace

TEST(Rng, UniformsAreInUnitInterval) {
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = stream_uniform(42, i);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NE(derive_stream(1, 0), derive_stream(1, 1));
  EXPECT_NE(derive_stream(1, 0), derive_stream(2, 0));
}

TEST(Kernels, UniformsBitExactAcrossVariants) {
  // Odd lengths and offsets exercise the vector tail handling.
  for (std::size_t n : {1u, 3u, 4u, 7u, 16u, 33u, 1001u}) {
    for (std::uint64_t first : {0ull, 5ull, 1ull << 40}) {
      std::vector<double> ref(n);
      for (std::size_t i = 0; i < n; ++i) ref[i] = stream_uniform(0xABCDEF, first + i);
      for (Isa isa : available()) {
        std::vector<double> out(n);
        kernels(isa).fill_uniforms(0xABCDEF, first, out.data(), n);
        EXPECT_EQ(std::memcmp(out.data(), ref.data(), n * sizeof(double)), 0)
            << isa_name(isa) << " n=" << n << " first=" << first;
      }
    }
  }
}

TEST(Kernels, GaussianProfileMatchesScalarReference) {
  const auto x = grid(-30.0, 30.0, 1003);
  std::vector<double> ref(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = (x[i] - 1.5) / 6.0;
    ref[i] = std::exp(-4.0 * std::numbers::ln2 * z * z);
  }
  for (Isa isa : available()) {
    std::vector<double> out(x.size());
    kernels(isa).gaussian_profile(x.data(), x.size(), 1.5, 6.0, out.data());
    for (std::size_t i = 0; i < x.size(); ++i) {
      ASSERT_NEAR(out[i], ref[i], 1e-14 + 1e-13 * ref[i]) << isa_name(isa) << " " << x[i];
    }
  }
}

TEST(Kernels, Sinc2ProfileMatchesScalarReference) {
  auto x = grid(1400.0, 1660.0, 2001);
  x.push_back(1532.0);  // exact center
  std::vector<double> ref(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double u = kSinc2HalfMaxArgument * (x[i] - 1532.0) / 40.0;
    ref[i] = u == 0.0 ? 1.0 : std::pow(std::sin(u) / u, 2);
  }
  for (Isa isa : available()) {
    std::vector<double> out(x.size());
    kernels(isa).sinc2_profile(x.data(), x.size(), 1532.0, 80.0, out.data());
    for (std::size_t i = 0; i < x.size(); ++i) {
      ASSERT_NEAR(out[i], ref[i], 1e-13) << isa_name(isa) << " " << x[i];
    }
  }
}

TEST(Kernels, HalfMaximumArgument) {
  const double u = kSinc2HalfMaxArgument;
  EXPECT_NEAR(std::pow(std::sin(u) / u, 2), 0.5, 1e-15);
}

TEST(Dispatch, ForcingAndRestoring) {
  force_isa(Isa::scalar);
  EXPECT_EQ(active_isa(), Isa::scalar);
  force_isa(std::nullopt);
  EXPECT_EQ(active_isa(), best_isa());
  if (!isa_supported(Isa::avx2)) {
    EXPECT_THROW(force_isa(Isa::avx2), qrelay::DomainError);
  }
  std::vector<double> x(3), out(2);
  EXPECT_THROW(gaussian_profile(x, 0.0, 1.0, out), qrelay::DomainError);
}
