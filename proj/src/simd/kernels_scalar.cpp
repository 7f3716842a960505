#include <cmath>
#include <cstdint>
#include <cstring>
#include <utility>

#include "fluororeg/simd/kernels.hpp"

namespace fluororeg::simd {

ShearedRay make_sheared_ray(const double origin[3], const double dir[3], double tmin, double tmax) {
  ShearedRay r{};
  for (int i = 0; i < 3; ++i) r.origin[i] = origin[i];
  const double ax = std::abs(dir[0]), ay = std::abs(dir[1]), az = std::abs(dir[2]);
  r.kz = (ax > ay) ? (ax > az ? 0 : 2) : (ay > az ? 1 : 2);
  r.kx = (r.kz + 1) % 3;
  r.ky = (r.kx + 1) % 3;
  if (dir[r.kz] < 0.0) std::swap(r.kx, r.ky);
  r.sx = dir[r.kx] / dir[r.kz];
  r.sy = dir[r.ky] / dir[r.kz];
  r.sz = 1.0 / dir[r.kz];
  r.tmin = tmin;
  r.tmax = tmax;
  return r;
}

namespace {

unsigned intersect4_scalar(const TriBlock4& tri, const ShearedRay& ray, double t[4]) {
  unsigned mask = 0;
  for (int lane = 0; lane < 4; ++lane) {
    const double akx = tri.v[0][ray.kx][lane] - ray.origin[ray.kx];
    const double aky = tri.v[0][ray.ky][lane] - ray.origin[ray.ky];
    const double akz = tri.v[0][ray.kz][lane] - ray.origin[ray.kz];
    const double bkx = tri.v[1][ray.kx][lane] - ray.origin[ray.kx];
    const double bky = tri.v[1][ray.ky][lane] - ray.origin[ray.ky];
    const double bkz = tri.v[1][ray.kz][lane] - ray.origin[ray.kz];
    const double ckx = tri.v[2][ray.kx][lane] - ray.origin[ray.kx];
    const double cky = tri.v[2][ray.ky][lane] - ray.origin[ray.ky];
    const double ckz = tri.v[2][ray.kz][lane] - ray.origin[ray.kz];

    const double ax = akx - ray.sx * akz;
    const double ay = aky - ray.sy * akz;
    const double bx = bkx - ray.sx * bkz;
    const double by = bky - ray.sy * bkz;
    const double cx = ckx - ray.sx * ckz;
    const double cy = cky - ray.sy * ckz;

    const double u = cx * by - cy * bx;
    const double v = ax * cy - ay * cx;
    const double w = bx * ay - by * ax;

    const bool neg = (u < 0.0) || (v < 0.0) || (w < 0.0);
    const bool pos = (u > 0.0) || (v > 0.0) || (w > 0.0);
    if (neg && pos) continue;
    const double det = (u + v) + w;
    if (det == 0.0) continue;

    const double az = ray.sz * akz;
    const double bz = ray.sz * bkz;
    const double cz = ray.sz * ckz;
    const double tt = (u * az + v * bz) + w * cz;
    const double hit_t = tt / det;
    if (hit_t > ray.tmin && hit_t < ray.tmax) {
      t[lane] = hit_t;
      mask |= 1u << lane;
    }
  }
  return mask;
}

double sum_scalar(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i];
  return s;
}

Moments centered_moments_scalar(const double* a, const double* b, std::size_t n, double ma, double mb) {
  Moments m;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    m.sab += da * db;
    m.saa += da * da;
    m.sbb += db * db;
  }
  return m;
}

void convolve_row_scalar(const double* in, double* out, std::size_t n, const double* w, std::size_t taps) {
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < taps; ++k) acc += w[k] * in[i + k];
    out[i] = acc;
  }
}

void axpy_scalar(double* y, const double* x, double a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void neg_exp_scalar(const double* x, double* out, std::size_t n, double scale) {
  const double ns = -scale;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = x[i] * ns;
    if (!(y >= kExpFloor)) {
      out[i] = 0.0;
      continue;
    }
    const double k = std::nearbyint(y * kLog2e);
    const double r = (y - k * kLn2Hi) - k * kLn2Lo;
    double p = kExpPoly[0];
    for (int j = 1; j < kExpPolyTerms; ++j) p = p * r + kExpPoly[j];
    const std::uint64_t bits = static_cast<std::uint64_t>(static_cast<std::int64_t>(k) + 1023) << 52;
    double two_k;
    std::memcpy(&two_k, &bits, sizeof two_k);
    out[i] = p * two_k;
  }
}

const Kernels kScalar{
    "scalar", intersect4_scalar, sum_scalar, centered_moments_scalar, convolve_row_scalar, axpy_scalar, neg_exp_scalar,
};

}  // namespace

const Kernels& scalar_kernels() { return kScalar; }

}  // namespace fluororeg::simd
