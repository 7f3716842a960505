#pragma once

#include <cstddef>
#include <cstdint>

namespace fluororeg::simd {

/// Four triangles in structure-of-arrays layout: v[vertex][axis][lane].
/// Unused lanes hold an all-zero triangle, which never reports a hit.
struct alignas(32) TriBlock4 {
  double v[3][3][4];
};

/// Ray prepared for the watertight (sheared) ray/triangle test.
struct ShearedRay {
  double origin[3];
  int kx, ky, kz;
  double sx, sy, sz;
  double tmin, tmax;
};

ShearedRay make_sheared_ray(const double origin[3], const double dir[3], double tmin, double tmax);

// neg_exp: exp(y) = 2^k * P(r), k = round(y / ln 2), |r| <= ln(2) / 2,
// P the degree-12 Taylor polynomial, highest coefficient first.
inline constexpr double kExpFloor = -700.0;
inline constexpr double kLog2e = 1.4426950408889634;
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;
inline constexpr int kExpPolyTerms = 13;
inline constexpr double kExpPoly[kExpPolyTerms] = {
    1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0, 1.0 / 362880.0, 1.0 / 40320.0, 1.0 / 5040.0, 1.0 / 720.0,
    1.0 / 120.0,       1.0 / 24.0,       1.0 / 6.0,        0.5,              1.0,              1.0,
};

struct Moments {
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
};

/// One implementation of every data-parallel kernel. Variants of the same
/// table must agree: `intersect4`, `convolve_row`, `axpy` and `neg_exp`
/// bit-for-bit, the reductions (`sum`, `centered_moments`) to rounding.
struct Kernels {
  const char* name;

  /// Hit mask (bit i = lane i) for tmin < t < tmax; t[i] written for hit lanes.
  unsigned (*intersect4)(const TriBlock4& tri, const ShearedRay& ray, double t[4]);

  double (*sum)(const double* a, std::size_t n);

  /// Sums of (a-ma)(b-mb), (a-ma)^2, (b-mb)^2.
  Moments (*centered_moments)(const double* a, const double* b, std::size_t n, double ma, double mb);

  /// out[i] = sum_k w[k] * in[i + k], i < n; `in` holds n + taps - 1 values.
  void (*convolve_row)(const double* in, double* out, std::size_t n, const double* w, std::size_t taps);

  /// y[i] += a * x[i].
  void (*axpy)(double* y, const double* x, double a, std::size_t n);

  /// out[i] = exp(-scale * x[i]) for x[i] >= 0, scale >= 0; arguments below
  /// -700 give exactly 0. Relative error under 1e-15.
  void (*neg_exp)(const double* x, double* out, std::size_t n, double scale);
};

const Kernels& scalar_kernels();
/// nullptr when AVX2 was not compiled in or the CPU lacks it.
const Kernels* avx2_kernels();
/// Best supported table, chosen once. FLUOROREG_SIMD=scalar forces the
/// scalar reference.
const Kernels& active_kernels();

}  // namespace fluororeg::simd
