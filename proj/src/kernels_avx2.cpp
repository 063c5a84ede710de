#include <immintrin.h>

#include "kernel_math.hpp"

namespace geoproto::kernels {

namespace {

using namespace detail;

inline __m256d select(__m256d if_false, __m256d if_true, __m256d mask) {
  return _mm256_blendv_pd(if_false, if_true, mask);
}

inline __m256d atan2_nonneg4(__m256d y, __m256d x) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d sign = _mm256_set1_pd(-0.0);
  const __m256d ay = y;
  const __m256d ax = _mm256_andnot_pd(sign, x);
  const __m256d swap = _mm256_cmp_pd(ay, ax, _CMP_GT_OQ);
  const __m256d num = select(ay, ax, swap);
  __m256d den = select(ax, ay, swap);
  den = select(den, one, _mm256_cmp_pd(den, zero, _CMP_EQ_OQ));
  const __m256d t = _mm256_div_pd(num, den);
  const __m256d big = _mm256_cmp_pd(t, _mm256_set1_pd(kReduceAbove), _CMP_GT_OQ);
  const __m256d reduced = _mm256_div_pd(_mm256_sub_pd(t, one), _mm256_add_pd(t, one));
  const __m256d u = select(t, reduced, big);
  const __m256d base = select(zero, _mm256_set1_pd(kPiO4), big);
  const __m256d z = _mm256_mul_pd(u, u);
  __m256d p = _mm256_set1_pd(kAtanP0);
  p = _mm256_add_pd(_mm256_mul_pd(p, z), _mm256_set1_pd(kAtanP1));
  p = _mm256_add_pd(_mm256_mul_pd(p, z), _mm256_set1_pd(kAtanP2));
  p = _mm256_add_pd(_mm256_mul_pd(p, z), _mm256_set1_pd(kAtanP3));
  p = _mm256_add_pd(_mm256_mul_pd(p, z), _mm256_set1_pd(kAtanP4));
  __m256d q = _mm256_add_pd(z, _mm256_set1_pd(kAtanQ0));
  q = _mm256_add_pd(_mm256_mul_pd(q, z), _mm256_set1_pd(kAtanQ1));
  q = _mm256_add_pd(_mm256_mul_pd(q, z), _mm256_set1_pd(kAtanQ2));
  q = _mm256_add_pd(_mm256_mul_pd(q, z), _mm256_set1_pd(kAtanQ3));
  q = _mm256_add_pd(_mm256_mul_pd(q, z), _mm256_set1_pd(kAtanQ4));
  const __m256d w = _mm256_div_pd(_mm256_mul_pd(z, p), q);
  __m256d r = _mm256_add_pd(_mm256_mul_pd(u, w), u);
  r = _mm256_add_pd(r, select(zero, _mm256_set1_pd(0.5 * kMoreBits), big));
  r = _mm256_add_pd(base, r);
  const __m256d swapped =
      _mm256_add_pd(_mm256_sub_pd(_mm256_set1_pd(kPiO2), r), _mm256_set1_pd(kMoreBits));
  const __m256d a = select(r, swapped, swap);
  const __m256d reflected =
      _mm256_add_pd(_mm256_sub_pd(_mm256_set1_pd(kPi), a), _mm256_set1_pd(2.0 * kMoreBits));
  return select(a, reflected, _mm256_cmp_pd(x, zero, _CMP_LT_OQ));
}

inline __m256d angle4(__m256d ax, __m256d ay, __m256d az, const double b[3]) {
  const __m256d bx = _mm256_set1_pd(b[0]);
  const __m256d by = _mm256_set1_pd(b[1]);
  const __m256d bz = _mm256_set1_pd(b[2]);
  const __m256d cx = _mm256_sub_pd(_mm256_mul_pd(ay, bz), _mm256_mul_pd(az, by));
  const __m256d cy = _mm256_sub_pd(_mm256_mul_pd(az, bx), _mm256_mul_pd(ax, bz));
  const __m256d cz = _mm256_sub_pd(_mm256_mul_pd(ax, by), _mm256_mul_pd(ay, bx));
  const __m256d cross = _mm256_sqrt_pd(_mm256_add_pd(
      _mm256_add_pd(_mm256_mul_pd(cx, cx), _mm256_mul_pd(cy, cy)), _mm256_mul_pd(cz, cz)));
  const __m256d dot = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(ax, bx), _mm256_mul_pd(ay, by)),
                                    _mm256_mul_pd(az, bz));
  return atan2_nonneg4(cross, dot);
}

}  // namespace

void distances_avx2(const RecordColumns& r, std::size_t begin, std::size_t end, const Target& t,
                    const Scale& s, double* out) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d lambda1 = _mm256_set1_pd(s.lambda1);
  const __m256d lambda2 = _mm256_set1_pd(s.lambda2);
  const __m256d radius = _mm256_set1_pd(s.radius_m);
  std::size_t i = begin;
  for (; i + 4 <= end; i += 4) {
    __m256d num = _mm256_setzero_pd();
    for (std::size_t j = 0; j < r.numerical_count; ++j) {
      const __m256d diff =
          _mm256_sub_pd(_mm256_loadu_pd(r.numerical[j] + i), _mm256_set1_pd(t.numerical[j]));
      num = _mm256_add_pd(num, _mm256_mul_pd(diff, diff));
    }
    __m256d mismatches = _mm256_setzero_pd();
    for (std::size_t j = 0; j < r.categorical_count; ++j) {
      const __m128i levels =
          _mm_loadu_si128(reinterpret_cast<const __m128i*>(r.categorical[j] + i));
      const __m128i equal = _mm_cmpeq_epi32(levels, _mm_set1_epi32(t.categorical[j]));
      // equal lanes are -1, so 1 + (-1 or 0) is the mismatch indicator.
      mismatches = _mm256_add_pd(mismatches, _mm256_add_pd(one, _mm256_cvtepi32_pd(equal)));
    }
    __m256d total = _mm256_add_pd(num, _mm256_mul_pd(lambda1, mismatches));
    if (t.has_spatial) {
      const __m256d theta = angle4(_mm256_loadu_pd(r.unit_x + i), _mm256_loadu_pd(r.unit_y + i),
                                   _mm256_loadu_pd(r.unit_z + i), t.unit);
      total = _mm256_add_pd(total, _mm256_mul_pd(lambda2, _mm256_mul_pd(radius, theta)));
    }
    _mm256_storeu_pd(out + (i - begin), total);
  }
  for (; i < end; ++i) out[i - begin] = distance_one(r, i, t, s);
}

void angles_avx2(const double* ux, const double* uy, const double* uz, std::size_t n,
                 const double target[3], double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, angle4(_mm256_loadu_pd(ux + i), _mm256_loadu_pd(uy + i),
                                     _mm256_loadu_pd(uz + i), target));
  }
  for (; i < n; ++i) out[i] = angle_between(ux[i], uy[i], uz[i], target);
}

}  // namespace geoproto::kernels
