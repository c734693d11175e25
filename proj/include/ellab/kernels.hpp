#pragma once

// Data-parallel inner loops, provided as scalar reference kernels plus AVX2
// variants selected at runtime. The two implementations are equivalence-tested
// against each other; everything above this layer is oblivious to which one
// runs.
//
// Hot paths served here:
//   - the Jacobi sweep of the grid DPP solver (shared-stencil convolution),
//   - Monte Carlo accumulation for the projection-inequality sweeps,
//   - batched coupled-step radii for the annular-function averages.

#include <cstddef>
#include <cstdint>

namespace ellab::kernels {

struct Caps {
  bool avx2 = false;
};

Caps caps();

// True when the dispatched kernels use AVX2.
bool using_avx2();

// Force the scalar reference path (tests, --no-simd). Not thread-safe with
// concurrent kernel calls; flip it before launching workers.
void set_force_scalar(bool force);

// next[i] = sum_k w[k] * prev[i + off[k]] for i in [0, count).
// Offsets may be negative; the caller guarantees all reads stay in bounds.
void stencil_apply_run(const double* prev, double* next, std::size_t count,
                       const std::int32_t* off, const double* w, std::size_t nnz);

// Accumulated statistics of the per-sample split |P_u d|^2 vs |(I-P_u) d|^2
// where d = y - L y with L a fixed linear map and u a fixed unit direction.
struct SplitSums {
  double par = 0.0;    // sum of (u . d)^2
  double par2 = 0.0;   // sum of (u . d)^4
  double orth = 0.0;   // sum of |d|^2 - (u . d)^2
  double orth2 = 0.0;  // sum of (...)^2
};

// Samples in SoA layout; L row-major n x n; u unit length.
SplitSums projection_accumulate2(const double* xs, const double* ys, std::size_t m,
                                 const double* L, const double* u);
SplitSums projection_accumulate3(const double* xs, const double* ys, const double* zs,
                                 std::size_t m, const double* L, const double* u);

// out[i] = | d + B y_i | with B row-major n x n.
void coupled_radii2(const double* xs, const double* ys, std::size_t m,
                    const double* B, const double* d, double* out);
void coupled_radii3(const double* xs, const double* ys, const double* zs, std::size_t m,
                    const double* B, const double* d, double* out);

// Reference implementations, directly callable for equivalence tests.
namespace scalar {
void stencil_apply_run(const double* prev, double* next, std::size_t count,
                       const std::int32_t* off, const double* w, std::size_t nnz);
SplitSums projection_accumulate2(const double* xs, const double* ys, std::size_t m,
                                 const double* L, const double* u);
SplitSums projection_accumulate3(const double* xs, const double* ys, const double* zs,
                                 std::size_t m, const double* L, const double* u);
void coupled_radii2(const double* xs, const double* ys, std::size_t m,
                    const double* B, const double* d, double* out);
void coupled_radii3(const double* xs, const double* ys, const double* zs, std::size_t m,
                    const double* B, const double* d, double* out);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define ELLAB_HAVE_AVX2_KERNELS 1
namespace avx2 {
void stencil_apply_run(const double* prev, double* next, std::size_t count,
                       const std::int32_t* off, const double* w, std::size_t nnz);
SplitSums projection_accumulate2(const double* xs, const double* ys, std::size_t m,
                                 const double* L, const double* u);
SplitSums projection_accumulate3(const double* xs, const double* ys, const double* zs,
                                 std::size_t m, const double* L, const double* u);
void coupled_radii2(const double* xs, const double* ys, std::size_t m,
                    const double* B, const double* d, double* out);
void coupled_radii3(const double* xs, const double* ys, const double* zs, std::size_t m,
                    const double* B, const double* d, double* out);
}  // namespace avx2
#endif

}  // namespace ellab::kernels
