// AVX2/FMA variants of the batch kernels. This translation unit is compiled
// with -mavx2 -mfma and only entered after a runtime CPU check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qrelay/simd/kernels.hpp"
#include "qrelay/simd/rng.hpp"

namespace qrelay::simd::detail {
namespace {

// Low 64 bits of a * b for a broadcast constant b. AVX2 only has 32x32->64.
inline __m256i mullo64(__m256i a, std::uint64_t b) {
  const __m256i b_lo = _mm256_set1_epi64x(static_cast<long long>(b & 0xFFFFFFFFull));
  const __m256i b_hi = _mm256_set1_epi64x(static_cast<long long>(b >> 32));
  const __m256i lolo = _mm256_mul_epu32(a, b_lo);
  const __m256i hilo = _mm256_mul_epu32(_mm256_srli_epi64(a, 32), b_lo);
  const __m256i lohi = _mm256_mul_epu32(a, b_hi);
  return _mm256_add_epi64(lolo, _mm256_slli_epi64(_mm256_add_epi64(hilo, lohi), 32));
}

inline __m256i mix64(__m256i z) {
  z = mullo64(_mm256_xor_si256(z, _mm256_srli_epi64(z, 30)), kMixMul1);
  z = mullo64(_mm256_xor_si256(z, _mm256_srli_epi64(z, 27)), kMixMul2);
  return _mm256_xor_si256(z, _mm256_srli_epi64(z, 31));
}

void fill_uniforms(std::uint64_t stream, std::uint64_t first, double* out, std::size_t n) {
  const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000ll);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256i step = _mm256_set1_epi64x(static_cast<long long>(4 * kGolden));
  // Lane l holds stream + (first + i + l + 1) * golden.
  __m256i z = _mm256_set_epi64x(
      static_cast<long long>(stream + (first + 4) * kGolden),
      static_cast<long long>(stream + (first + 3) * kGolden),
      static_cast<long long>(stream + (first + 2) * kGolden),
      static_cast<long long>(stream + (first + 1) * kGolden));
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256i bits = mix64(z);
    const __m256i mant = _mm256_or_si256(one_bits, _mm256_srli_epi64(bits, 12));
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_castsi256_pd(mant), one));
    z = _mm256_add_epi64(z, step);
  }
  for (; i < n; ++i) out[i] = stream_uniform(stream, first + i);
}

// exp(x) for x in [-700, 709]: Cephes rational approximation after reduction
// by multiples of ln2.
inline __m256d exp_pd(__m256d x) {
  x = _mm256_max_pd(_mm256_set1_pd(-700.0), _mm256_min_pd(_mm256_set1_pd(709.0), x));
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(std::numbers::log2e)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93145751953125e-1), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.42860682030941723212e-6), r);
  const __m256d rr = _mm256_mul_pd(r, r);

  __m256d p = _mm256_set1_pd(1.26177193074810590878e-4);
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(3.02994407707441961300e-2));
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(9.99999999999999999910e-1));
  p = _mm256_mul_pd(p, r);

  __m256d q = _mm256_set1_pd(3.00198505138664455042e-6);
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.52448340349684104192e-3));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.27265548208155028766e-1));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.00000000000000000009e0));

  __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  e = _mm256_fmadd_pd(e, _mm256_set1_pd(2.0), _mm256_set1_pd(1.0));

  // 2^n through the exponent field.
  const __m128i ni = _mm256_cvtpd_epi32(n);
  const __m256i biased = _mm256_add_epi64(_mm256_cvtepi32_epi64(ni), _mm256_set1_epi64x(1023));
  const __m256d scale = _mm256_castsi256_pd(_mm256_slli_epi64(biased, 52));
  return _mm256_mul_pd(e, scale);
}

// sin(x), Cephes sin.c reduction by pi/4 with a three-part constant.
inline __m256d sin_pd(__m256d x) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  __m256d sign = _mm256_and_pd(x, sign_mask);
  __m256d ax = _mm256_andnot_pd(sign_mask, x);

  __m256d y = _mm256_floor_pd(_mm256_mul_pd(ax, _mm256_set1_pd(4.0 / std::numbers::pi)));
  // Octant j; odd octants move to the next even one.
  __m256d jd = _mm256_sub_pd(y, _mm256_mul_pd(_mm256_set1_pd(8.0),
                                              _mm256_floor_pd(_mm256_mul_pd(y, _mm256_set1_pd(0.125)))));
  const __m256d odd = _mm256_cmp_pd(
      _mm256_sub_pd(jd, _mm256_mul_pd(_mm256_set1_pd(2.0),
                                      _mm256_floor_pd(_mm256_mul_pd(jd, _mm256_set1_pd(0.5))))),
      _mm256_set1_pd(1.0), _CMP_EQ_OQ);
  y = _mm256_add_pd(y, _mm256_and_pd(odd, _mm256_set1_pd(1.0)));
  jd = _mm256_add_pd(jd, _mm256_and_pd(odd, _mm256_set1_pd(1.0)));
  jd = _mm256_sub_pd(jd, _mm256_and_pd(_mm256_cmp_pd(jd, _mm256_set1_pd(8.0), _CMP_EQ_OQ),
                                       _mm256_set1_pd(8.0)));
  const __m256d upper = _mm256_cmp_pd(jd, _mm256_set1_pd(3.0), _CMP_GT_OQ);
  sign = _mm256_xor_pd(sign, _mm256_and_pd(upper, sign_mask));
  jd = _mm256_sub_pd(jd, _mm256_and_pd(upper, _mm256_set1_pd(4.0)));

  __m256d z = _mm256_fnmadd_pd(y, _mm256_set1_pd(7.85398125648498535156e-1), ax);
  z = _mm256_fnmadd_pd(y, _mm256_set1_pd(3.77489470793079817668e-8), z);
  z = _mm256_fnmadd_pd(y, _mm256_set1_pd(2.69515142907905952645e-15), z);
  const __m256d zz = _mm256_mul_pd(z, z);

  __m256d ps = _mm256_set1_pd(1.58962301576546568060e-10);
  ps = _mm256_fmadd_pd(ps, zz, _mm256_set1_pd(-2.50507477628578072866e-8));
  ps = _mm256_fmadd_pd(ps, zz, _mm256_set1_pd(2.75573136213857245213e-6));
  ps = _mm256_fmadd_pd(ps, zz, _mm256_set1_pd(-1.98412698295895385996e-4));
  ps = _mm256_fmadd_pd(ps, zz, _mm256_set1_pd(8.33333333332211858878e-3));
  ps = _mm256_fmadd_pd(ps, zz, _mm256_set1_pd(-1.66666666666666307295e-1));
  const __m256d s = _mm256_fmadd_pd(_mm256_mul_pd(z, zz), ps, z);

  __m256d pc = _mm256_set1_pd(-1.13585365213876817300e-11);
  pc = _mm256_fmadd_pd(pc, zz, _mm256_set1_pd(2.08757008419747316778e-9));
  pc = _mm256_fmadd_pd(pc, zz, _mm256_set1_pd(-2.75573141792967388112e-7));
  pc = _mm256_fmadd_pd(pc, zz, _mm256_set1_pd(2.48015872888517045348e-5));
  pc = _mm256_fmadd_pd(pc, zz, _mm256_set1_pd(-1.38888888888730564116e-3));
  pc = _mm256_fmadd_pd(pc, zz, _mm256_set1_pd(4.16666666666665929218e-2));
  const __m256d c = _mm256_fmadd_pd(_mm256_mul_pd(zz, zz), pc,
                                    _mm256_fnmadd_pd(zz, _mm256_set1_pd(0.5), _mm256_set1_pd(1.0)));

  const __m256d use_cos = _mm256_or_pd(_mm256_cmp_pd(jd, _mm256_set1_pd(1.0), _CMP_EQ_OQ),
                                       _mm256_cmp_pd(jd, _mm256_set1_pd(2.0), _CMP_EQ_OQ));
  return _mm256_xor_pd(_mm256_blendv_pd(s, c, use_cos), sign);
}

// Runs `body` over 4-wide blocks; the tail is padded through a stack buffer so
// every element takes the vector path.
template <class Body>
inline void for_each_block(const double* x, std::size_t n, double* out, Body body) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, body(_mm256_loadu_pd(x + i)));
  if (i < n) {
    alignas(32) double in_tail[4] = {0.0, 0.0, 0.0, 0.0};
    alignas(32) double out_tail[4];
    std::copy(x + i, x + n, in_tail);
    _mm256_store_pd(out_tail, body(_mm256_load_pd(in_tail)));
    std::copy(out_tail, out_tail + (n - i), out + i);
  }
}

void gaussian_profile(const double* x, std::size_t n, double center, double fwhm,
                      double* out) {
  const __m256d c = _mm256_set1_pd(center);
  const __m256d k = _mm256_set1_pd(-4.0 * std::numbers::ln2 / (fwhm * fwhm));
  for_each_block(x, n, out, [&](__m256d v) {
    const __m256d d = _mm256_sub_pd(v, c);
    return exp_pd(_mm256_mul_pd(k, _mm256_mul_pd(d, d)));
  });
}

void sinc2_profile(const double* x, std::size_t n, double center, double fwhm,
                   double* out) {
  const __m256d c = _mm256_set1_pd(center);
  const __m256d scale = _mm256_set1_pd(2.0 * kSinc2HalfMaxArgument / fwhm);
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7FFFFFFFFFFFFFFFll));
  for_each_block(x, n, out, [&](__m256d v) {
    const __m256d u = _mm256_mul_pd(scale, _mm256_sub_pd(v, c));
    const __m256d small =
        _mm256_cmp_pd(_mm256_and_pd(u, abs_mask), _mm256_set1_pd(1e-8), _CMP_LT_OQ);
    const __m256d safe_u = _mm256_blendv_pd(u, _mm256_set1_pd(1.0), small);
    const __m256d s = _mm256_div_pd(sin_pd(safe_u), safe_u);
    const __m256d series = _mm256_fnmadd_pd(_mm256_mul_pd(u, u), _mm256_set1_pd(1.0 / 3.0),
                                            _mm256_set1_pd(1.0));
    return _mm256_blendv_pd(_mm256_mul_pd(s, s), series, small);
  });
}

constexpr KernelTable kTable{&fill_uniforms, &gaussian_profile, &sinc2_profile};

}  // namespace

const KernelTable& avx2_kernels() { return kTable; }

}  // namespace qrelay::simd::detail
