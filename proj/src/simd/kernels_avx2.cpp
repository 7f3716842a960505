// Compiled with -mavx2 only. No FMA: every lane must round exactly like the
// scalar reference.
#include <immintrin.h>

#include "fluororeg/simd/kernels.hpp"

namespace fluororeg::simd {

namespace {

inline double hsum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

unsigned intersect4_avx2(const TriBlock4& tri, const ShearedRay& ray, double t[4]) {
  const __m256d ox = _mm256_set1_pd(ray.origin[ray.kx]);
  const __m256d oy = _mm256_set1_pd(ray.origin[ray.ky]);
  const __m256d oz = _mm256_set1_pd(ray.origin[ray.kz]);
  const __m256d sx = _mm256_set1_pd(ray.sx);
  const __m256d sy = _mm256_set1_pd(ray.sy);
  const __m256d sz = _mm256_set1_pd(ray.sz);
  const __m256d zero = _mm256_setzero_pd();

  const __m256d akx = _mm256_sub_pd(_mm256_load_pd(tri.v[0][ray.kx]), ox);
  const __m256d aky = _mm256_sub_pd(_mm256_load_pd(tri.v[0][ray.ky]), oy);
  const __m256d akz = _mm256_sub_pd(_mm256_load_pd(tri.v[0][ray.kz]), oz);
  const __m256d bkx = _mm256_sub_pd(_mm256_load_pd(tri.v[1][ray.kx]), ox);
  const __m256d bky = _mm256_sub_pd(_mm256_load_pd(tri.v[1][ray.ky]), oy);
  const __m256d bkz = _mm256_sub_pd(_mm256_load_pd(tri.v[1][ray.kz]), oz);
  const __m256d ckx = _mm256_sub_pd(_mm256_load_pd(tri.v[2][ray.kx]), ox);
  const __m256d cky = _mm256_sub_pd(_mm256_load_pd(tri.v[2][ray.ky]), oy);
  const __m256d ckz = _mm256_sub_pd(_mm256_load_pd(tri.v[2][ray.kz]), oz);

  const __m256d ax = _mm256_sub_pd(akx, _mm256_mul_pd(sx, akz));
  const __m256d ay = _mm256_sub_pd(aky, _mm256_mul_pd(sy, akz));
  const __m256d bx = _mm256_sub_pd(bkx, _mm256_mul_pd(sx, bkz));
  const __m256d by = _mm256_sub_pd(bky, _mm256_mul_pd(sy, bkz));
  const __m256d cx = _mm256_sub_pd(ckx, _mm256_mul_pd(sx, ckz));
  const __m256d cy = _mm256_sub_pd(cky, _mm256_mul_pd(sy, ckz));

  const __m256d u = _mm256_sub_pd(_mm256_mul_pd(cx, by), _mm256_mul_pd(cy, bx));
  const __m256d v = _mm256_sub_pd(_mm256_mul_pd(ax, cy), _mm256_mul_pd(ay, cx));
  const __m256d w = _mm256_sub_pd(_mm256_mul_pd(bx, ay), _mm256_mul_pd(by, ax));

  const __m256d neg = _mm256_or_pd(_mm256_or_pd(_mm256_cmp_pd(u, zero, _CMP_LT_OQ), _mm256_cmp_pd(v, zero, _CMP_LT_OQ)),
                                   _mm256_cmp_pd(w, zero, _CMP_LT_OQ));
  const __m256d pos = _mm256_or_pd(_mm256_or_pd(_mm256_cmp_pd(u, zero, _CMP_GT_OQ), _mm256_cmp_pd(v, zero, _CMP_GT_OQ)),
                                   _mm256_cmp_pd(w, zero, _CMP_GT_OQ));
  const int straddle = _mm256_movemask_pd(_mm256_and_pd(neg, pos));
  if (straddle == 0xF) return 0;

  const __m256d det = _mm256_add_pd(_mm256_add_pd(u, v), w);
  const __m256d az = _mm256_mul_pd(sz, akz);
  const __m256d bz = _mm256_mul_pd(sz, bkz);
  const __m256d cz = _mm256_mul_pd(sz, ckz);
  const __m256d tt = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(u, az), _mm256_mul_pd(v, bz)), _mm256_mul_pd(w, cz));
  const __m256d hit_t = _mm256_div_pd(tt, det);

  const __m256d ok = _mm256_and_pd(
      _mm256_cmp_pd(det, zero, _CMP_NEQ_OQ),
      _mm256_and_pd(_mm256_cmp_pd(hit_t, _mm256_set1_pd(ray.tmin), _CMP_GT_OQ),
                    _mm256_cmp_pd(hit_t, _mm256_set1_pd(ray.tmax), _CMP_LT_OQ)));
  const unsigned mask = static_cast<unsigned>(_mm256_movemask_pd(ok)) & ~static_cast<unsigned>(straddle);
  if (mask) {
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, hit_t);
    for (int i = 0; i < 4; ++i) {
      if (mask & (1u << i)) t[i] = lanes[i];
    }
  }
  return mask;
}

double sum_avx2(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i];
  return s;
}

Moments centered_moments_avx2(const double* a, const double* b, std::size_t n, double ma, double mb) {
  const __m256d vma = _mm256_set1_pd(ma);
  const __m256d vmb = _mm256_set1_pd(mb);
  __m256d sab = _mm256_setzero_pd(), saa = _mm256_setzero_pd(), sbb = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d da = _mm256_sub_pd(_mm256_loadu_pd(a + i), vma);
    const __m256d db = _mm256_sub_pd(_mm256_loadu_pd(b + i), vmb);
    sab = _mm256_add_pd(sab, _mm256_mul_pd(da, db));
    saa = _mm256_add_pd(saa, _mm256_mul_pd(da, da));
    sbb = _mm256_add_pd(sbb, _mm256_mul_pd(db, db));
  }
  Moments m{hsum(sab), hsum(saa), hsum(sbb)};
  for (; i < n; ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    m.sab += da * db;
    m.saa += da * da;
    m.sbb += db * db;
  }
  return m;
}

void convolve_row_avx2(const double* in, double* out, std::size_t n, const double* w, std::size_t taps) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t k = 0; k < taps; ++k) {
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(w[k]), _mm256_loadu_pd(in + i + k)));
    }
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < taps; ++k) acc += w[k] * in[i + k];
    out[i] = acc;
  }
}

void axpy_avx2(double* y, const double* x, double a, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, _mm256_loadu_pd(x + i))));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void neg_exp_avx2(const double* x, double* out, std::size_t n, double scale) {
  const __m256d ns = _mm256_set1_pd(-scale);
  const __m256d floor_v = _mm256_set1_pd(kExpFloor);
  const __m256d log2e = _mm256_set1_pd(kLog2e);
  const __m256d ln2hi = _mm256_set1_pd(kLn2Hi);
  const __m256d ln2lo = _mm256_set1_pd(kLn2Lo);
  const __m256i bias = _mm256_set1_epi64x(1023);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d y = _mm256_mul_pd(_mm256_loadu_pd(x + i), ns);
    const __m256d keep = _mm256_cmp_pd(y, floor_v, _CMP_GE_OQ);
    const __m256d ys = _mm256_and_pd(y, keep);  // zero the dropped lanes so k stays in range
    const __m256d k = _mm256_round_pd(_mm256_mul_pd(ys, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    const __m256d r = _mm256_sub_pd(_mm256_sub_pd(ys, _mm256_mul_pd(k, ln2hi)), _mm256_mul_pd(k, ln2lo));
    __m256d p = _mm256_set1_pd(kExpPoly[0]);
    for (int j = 1; j < kExpPolyTerms; ++j) p = _mm256_add_pd(_mm256_mul_pd(p, r), _mm256_set1_pd(kExpPoly[j]));
    const __m256i ki = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(k));
    const __m256d two_k = _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_add_epi64(ki, bias), 52));
    _mm256_storeu_pd(out + i, _mm256_and_pd(_mm256_mul_pd(p, two_k), keep));
  }
  if (i < n) scalar_kernels().neg_exp(x + i, out + i, n - i, scale);
}

}  // namespace

extern const Kernels kAvx2Kernels;
const Kernels kAvx2Kernels{
    "avx2", intersect4_avx2, sum_avx2, centered_moments_avx2, convolve_row_avx2, axpy_avx2, neg_exp_avx2,
};

}  // namespace fluororeg::simd
