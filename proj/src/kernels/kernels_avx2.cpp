// AVX2 + FMA kernel variants. Compiled with per-function target attributes so
// the rest of the build stays baseline; kernels.cpp gates entry on cpuid.

#include "ellab/kernels.hpp"

#ifdef ELLAB_HAVE_AVX2_KERNELS

#include <immintrin.h>

#include <cmath>

#define ELLAB_AVX2 __attribute__((target("avx2,fma")))

namespace ellab::kernels::avx2 {

namespace {

ELLAB_AVX2 inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}

}  // namespace

ELLAB_AVX2 void stencil_apply_run(const double* prev, double* next, std::size_t count,
                                  const std::int32_t* off, const double* w, std::size_t nnz) {
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    const double* base = prev + i;
    for (std::size_t k = 0; k < nnz; ++k) {
      __m256d v = _mm256_loadu_pd(base + off[k]);
      acc = _mm256_fmadd_pd(_mm256_set1_pd(w[k]), v, acc);
    }
    _mm256_storeu_pd(next + i, acc);
  }
  for (; i < count; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < nnz; ++k) acc += w[k] * prev[static_cast<std::ptrdiff_t>(i) + off[k]];
    next[i] = acc;
  }
}

ELLAB_AVX2 SplitSums projection_accumulate2(const double* xs, const double* ys, std::size_t m,
                                            const double* L, const double* u) {
  __m256d l00 = _mm256_set1_pd(L[0]), l01 = _mm256_set1_pd(L[1]);
  __m256d l10 = _mm256_set1_pd(L[2]), l11 = _mm256_set1_pd(L[3]);
  __m256d u0 = _mm256_set1_pd(u[0]), u1 = _mm256_set1_pd(u[1]);
  __m256d spar = _mm256_setzero_pd(), spar2 = _mm256_setzero_pd();
  __m256d sorth = _mm256_setzero_pd(), sorth2 = _mm256_setzero_pd();

  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    __m256d x = _mm256_loadu_pd(xs + i);
    __m256d y = _mm256_loadu_pd(ys + i);
    __m256d dx = _mm256_sub_pd(x, _mm256_fmadd_pd(l00, x, _mm256_mul_pd(l01, y)));
    __m256d dy = _mm256_sub_pd(y, _mm256_fmadd_pd(l10, x, _mm256_mul_pd(l11, y)));
    __m256d p = _mm256_fmadd_pd(u0, dx, _mm256_mul_pd(u1, dy));
    __m256d par = _mm256_mul_pd(p, p);
    __m256d n2 = _mm256_fmadd_pd(dx, dx, _mm256_mul_pd(dy, dy));
    __m256d orth = _mm256_sub_pd(n2, par);
    spar = _mm256_add_pd(spar, par);
    spar2 = _mm256_fmadd_pd(par, par, spar2);
    sorth = _mm256_add_pd(sorth, orth);
    sorth2 = _mm256_fmadd_pd(orth, orth, sorth2);
  }

  SplitSums s;
  s.par = hsum(spar);
  s.par2 = hsum(spar2);
  s.orth = hsum(sorth);
  s.orth2 = hsum(sorth2);
  for (; i < m; ++i) {
    double x = xs[i], y = ys[i];
    double dx = x - (L[0] * x + L[1] * y);
    double dy = y - (L[2] * x + L[3] * y);
    double p = u[0] * dx + u[1] * dy;
    double par = p * p;
    double orth = dx * dx + dy * dy - par;
    s.par += par;
    s.par2 += par * par;
    s.orth += orth;
    s.orth2 += orth * orth;
  }
  return s;
}

ELLAB_AVX2 SplitSums projection_accumulate3(const double* xs, const double* ys, const double* zs,
                                            std::size_t m, const double* L, const double* u) {
  __m256d l[9];
  for (int k = 0; k < 9; ++k) l[k] = _mm256_set1_pd(L[k]);
  __m256d u0 = _mm256_set1_pd(u[0]), u1 = _mm256_set1_pd(u[1]), u2 = _mm256_set1_pd(u[2]);
  __m256d spar = _mm256_setzero_pd(), spar2 = _mm256_setzero_pd();
  __m256d sorth = _mm256_setzero_pd(), sorth2 = _mm256_setzero_pd();

  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    __m256d x = _mm256_loadu_pd(xs + i);
    __m256d y = _mm256_loadu_pd(ys + i);
    __m256d z = _mm256_loadu_pd(zs + i);
    __m256d dx = _mm256_sub_pd(x, _mm256_fmadd_pd(l[0], x, _mm256_fmadd_pd(l[1], y, _mm256_mul_pd(l[2], z))));
    __m256d dy = _mm256_sub_pd(y, _mm256_fmadd_pd(l[3], x, _mm256_fmadd_pd(l[4], y, _mm256_mul_pd(l[5], z))));
    __m256d dz = _mm256_sub_pd(z, _mm256_fmadd_pd(l[6], x, _mm256_fmadd_pd(l[7], y, _mm256_mul_pd(l[8], z))));
    __m256d p = _mm256_fmadd_pd(u0, dx, _mm256_fmadd_pd(u1, dy, _mm256_mul_pd(u2, dz)));
    __m256d par = _mm256_mul_pd(p, p);
    __m256d n2 = _mm256_fmadd_pd(dx, dx, _mm256_fmadd_pd(dy, dy, _mm256_mul_pd(dz, dz)));
    __m256d orth = _mm256_sub_pd(n2, par);
    spar = _mm256_add_pd(spar, par);
    spar2 = _mm256_fmadd_pd(par, par, spar2);
    sorth = _mm256_add_pd(sorth, orth);
    sorth2 = _mm256_fmadd_pd(orth, orth, sorth2);
  }

  SplitSums s;
  s.par = hsum(spar);
  s.par2 = hsum(spar2);
  s.orth = hsum(sorth);
  s.orth2 = hsum(sorth2);
  for (; i < m; ++i) {
    double x = xs[i], y = ys[i], z = zs[i];
    double dx = x - (L[0] * x + L[1] * y + L[2] * z);
    double dy = y - (L[3] * x + L[4] * y + L[5] * z);
    double dz = z - (L[6] * x + L[7] * y + L[8] * z);
    double p = u[0] * dx + u[1] * dy + u[2] * dz;
    double par = p * p;
    double orth = dx * dx + dy * dy + dz * dz - par;
    s.par += par;
    s.par2 += par * par;
    s.orth += orth;
    s.orth2 += orth * orth;
  }
  return s;
}

ELLAB_AVX2 void coupled_radii2(const double* xs, const double* ys, std::size_t m,
                               const double* B, const double* d, double* out) {
  __m256d b00 = _mm256_set1_pd(B[0]), b01 = _mm256_set1_pd(B[1]);
  __m256d b10 = _mm256_set1_pd(B[2]), b11 = _mm256_set1_pd(B[3]);
  __m256d d0 = _mm256_set1_pd(d[0]), d1 = _mm256_set1_pd(d[1]);
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    __m256d x = _mm256_loadu_pd(xs + i);
    __m256d y = _mm256_loadu_pd(ys + i);
    __m256d wx = _mm256_add_pd(d0, _mm256_fmadd_pd(b00, x, _mm256_mul_pd(b01, y)));
    __m256d wy = _mm256_add_pd(d1, _mm256_fmadd_pd(b10, x, _mm256_mul_pd(b11, y)));
    __m256d r = _mm256_sqrt_pd(_mm256_fmadd_pd(wx, wx, _mm256_mul_pd(wy, wy)));
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < m; ++i) {
    double wx = d[0] + B[0] * xs[i] + B[1] * ys[i];
    double wy = d[1] + B[2] * xs[i] + B[3] * ys[i];
    out[i] = std::sqrt(wx * wx + wy * wy);
  }
}

ELLAB_AVX2 void coupled_radii3(const double* xs, const double* ys, const double* zs, std::size_t m,
                               const double* B, const double* d, double* out) {
  __m256d b[9];
  for (int k = 0; k < 9; ++k) b[k] = _mm256_set1_pd(B[k]);
  __m256d d0 = _mm256_set1_pd(d[0]), d1 = _mm256_set1_pd(d[1]), d2 = _mm256_set1_pd(d[2]);
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    __m256d x = _mm256_loadu_pd(xs + i);
    __m256d y = _mm256_loadu_pd(ys + i);
    __m256d z = _mm256_loadu_pd(zs + i);
    __m256d wx = _mm256_add_pd(d0, _mm256_fmadd_pd(b[0], x, _mm256_fmadd_pd(b[1], y, _mm256_mul_pd(b[2], z))));
    __m256d wy = _mm256_add_pd(d1, _mm256_fmadd_pd(b[3], x, _mm256_fmadd_pd(b[4], y, _mm256_mul_pd(b[5], z))));
    __m256d wz = _mm256_add_pd(d2, _mm256_fmadd_pd(b[6], x, _mm256_fmadd_pd(b[7], y, _mm256_mul_pd(b[8], z))));
    __m256d r = _mm256_sqrt_pd(_mm256_fmadd_pd(wx, wx, _mm256_fmadd_pd(wy, wy, _mm256_mul_pd(wz, wz))));
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < m; ++i) {
    double wx = d[0] + B[0] * xs[i] + B[1] * ys[i] + B[2] * zs[i];
    double wy = d[1] + B[3] * xs[i] + B[4] * ys[i] + B[5] * zs[i];
    double wz = d[2] + B[6] * xs[i] + B[7] * ys[i] + B[8] * zs[i];
    out[i] = std::sqrt(wx * wx + wy * wy + wz * wz);
  }
}

}  // namespace ellab::kernels::avx2

#endif  // ELLAB_HAVE_AVX2_KERNELS
