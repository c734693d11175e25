#include "ellab/kernels.hpp"

#include <atomic>
#include <cmath>

namespace ellab::kernels {

namespace scalar {

void stencil_apply_run(const double* prev, double* next, std::size_t count,
                       const std::int32_t* off, const double* w, std::size_t nnz) {
  for (std::size_t i = 0; i < count; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < nnz; ++k) acc += w[k] * prev[static_cast<std::ptrdiff_t>(i) + off[k]];
    next[i] = acc;
  }
}

SplitSums projection_accumulate2(const double* xs, const double* ys, std::size_t m,
                                 const double* L, const double* u) {
  SplitSums s;
  for (std::size_t i = 0; i < m; ++i) {
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

SplitSums projection_accumulate3(const double* xs, const double* ys, const double* zs,
                                 std::size_t m, const double* L, const double* u) {
  SplitSums s;
  for (std::size_t i = 0; i < m; ++i) {
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

void coupled_radii2(const double* xs, const double* ys, std::size_t m,
                    const double* B, const double* d, double* out) {
  for (std::size_t i = 0; i < m; ++i) {
    double wx = d[0] + B[0] * xs[i] + B[1] * ys[i];
    double wy = d[1] + B[2] * xs[i] + B[3] * ys[i];
    out[i] = std::sqrt(wx * wx + wy * wy);
  }
}

void coupled_radii3(const double* xs, const double* ys, const double* zs, std::size_t m,
                    const double* B, const double* d, double* out) {
  for (std::size_t i = 0; i < m; ++i) {
    double wx = d[0] + B[0] * xs[i] + B[1] * ys[i] + B[2] * zs[i];
    double wy = d[1] + B[3] * xs[i] + B[4] * ys[i] + B[5] * zs[i];
    double wz = d[2] + B[6] * xs[i] + B[7] * ys[i] + B[8] * zs[i];
    out[i] = std::sqrt(wx * wx + wy * wy + wz * wz);
  }
}

}  // namespace scalar

namespace {

std::atomic<bool> g_force_scalar{false};

bool cpu_has_avx2() {
#if defined(ELLAB_HAVE_AVX2_KERNELS) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

}  // namespace

Caps caps() {
  Caps c;
  c.avx2 = cpu_has_avx2();
  return c;
}

void set_force_scalar(bool force) { g_force_scalar.store(force); }

bool using_avx2() { return cpu_has_avx2() && !g_force_scalar.load(); }

void stencil_apply_run(const double* prev, double* next, std::size_t count,
                       const std::int32_t* off, const double* w, std::size_t nnz) {
#ifdef ELLAB_HAVE_AVX2_KERNELS
  if (using_avx2()) return avx2::stencil_apply_run(prev, next, count, off, w, nnz);
#endif
  scalar::stencil_apply_run(prev, next, count, off, w, nnz);
}

SplitSums projection_accumulate2(const double* xs, const double* ys, std::size_t m,
                                 const double* L, const double* u) {
#ifdef ELLAB_HAVE_AVX2_KERNELS
  if (using_avx2()) return avx2::projection_accumulate2(xs, ys, m, L, u);
#endif
  return scalar::projection_accumulate2(xs, ys, m, L, u);
}

SplitSums projection_accumulate3(const double* xs, const double* ys, const double* zs,
                                 std::size_t m, const double* L, const double* u) {
#ifdef ELLAB_HAVE_AVX2_KERNELS
  if (using_avx2()) return avx2::projection_accumulate3(xs, ys, zs, m, L, u);
#endif
  return scalar::projection_accumulate3(xs, ys, zs, m, L, u);
}

void coupled_radii2(const double* xs, const double* ys, std::size_t m,
                    const double* B, const double* d, double* out) {
#ifdef ELLAB_HAVE_AVX2_KERNELS
  if (using_avx2()) return avx2::coupled_radii2(xs, ys, m, B, d, out);
#endif
  scalar::coupled_radii2(xs, ys, m, B, d, out);
}

void coupled_radii3(const double* xs, const double* ys, const double* zs, std::size_t m,
                    const double* B, const double* d, double* out) {
#ifdef ELLAB_HAVE_AVX2_KERNELS
  if (using_avx2()) return avx2::coupled_radii3(xs, ys, zs, m, B, d, out);
#endif
  scalar::coupled_radii3(xs, ys, zs, m, B, d, out);
}

}  // namespace ellab::kernels
