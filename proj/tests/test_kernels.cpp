#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "ellab/kernels.hpp"
#include "ellab/rng.hpp"

using namespace ellab;

namespace {

std::vector<double> random_buf(std::size_t m, Rng& rng, double lo = -2.0, double hi = 2.0) {
  std::vector<double> v(m);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace

TEST_CASE("dispatch reports a capability") {
  kernels::Caps c = kernels::caps();
  INFO("avx2: ", c.avx2);
  kernels::set_force_scalar(true);
  CHECK_FALSE(kernels::using_avx2());
  kernels::set_force_scalar(false);
  CHECK(kernels::using_avx2() == c.avx2);
}

#ifdef ELLAB_HAVE_AVX2_KERNELS
TEST_CASE("scalar and avx2 stencil kernels agree") {
  if (!kernels::caps().avx2) return;
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    std::size_t count = 1 + static_cast<std::size_t>(rng.uniform() * 200);
    std::size_t nnz = 1 + static_cast<std::size_t>(rng.uniform() * 60);
    std::size_t margin = 300;
    std::vector<double> prev = random_buf(count + 2 * margin, rng);
    std::vector<std::int32_t> off(nnz);
    std::vector<double> w(nnz);
    for (std::size_t k = 0; k < nnz; ++k) {
      off[k] = static_cast<std::int32_t>(rng.uniform(-double(margin), double(margin)));
      w[k] = rng.uniform(-1.0, 1.0);
    }
    std::vector<double> a(count), b(count);
    kernels::scalar::stencil_apply_run(prev.data() + margin, a.data(), count, off.data(), w.data(), nnz);
    kernels::avx2::stencil_apply_run(prev.data() + margin, b.data(), count, off.data(), w.data(), nnz);
    for (std::size_t i = 0; i < count; ++i)
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
}

TEST_CASE("scalar and avx2 projection kernels agree") {
  if (!kernels::caps().avx2) return;
  Rng rng(5);
  std::size_t m = 10007;
  auto xs = random_buf(m, rng), ys = random_buf(m, rng), zs = random_buf(m, rng);

  double L2[4], u2[2] = {0.6, 0.8};
  for (double& v : L2) v = rng.uniform(-1.0, 1.0);
  auto s2 = kernels::scalar::projection_accumulate2(xs.data(), ys.data(), m, L2, u2);
  auto v2 = kernels::avx2::projection_accumulate2(xs.data(), ys.data(), m, L2, u2);
  CHECK(s2.par == doctest::Approx(v2.par).epsilon(1e-12));
  CHECK(s2.orth == doctest::Approx(v2.orth).epsilon(1e-12));
  CHECK(s2.par2 == doctest::Approx(v2.par2).epsilon(1e-12));
  CHECK(s2.orth2 == doctest::Approx(v2.orth2).epsilon(1e-12));

  double L3[9], u3[3] = {1.0, 0.0, 0.0};
  for (double& v : L3) v = rng.uniform(-1.0, 1.0);
  auto s3 = kernels::scalar::projection_accumulate3(xs.data(), ys.data(), zs.data(), m, L3, u3);
  auto v3 = kernels::avx2::projection_accumulate3(xs.data(), ys.data(), zs.data(), m, L3, u3);
  CHECK(s3.par == doctest::Approx(v3.par).epsilon(1e-12));
  CHECK(s3.orth == doctest::Approx(v3.orth).epsilon(1e-12));
}

TEST_CASE("scalar and avx2 radii kernels agree") {
  if (!kernels::caps().avx2) return;
  Rng rng(9);
  std::size_t m = 4099;
  auto xs = random_buf(m, rng), ys = random_buf(m, rng), zs = random_buf(m, rng);
  double B2[4], d2[2] = {0.3, -0.7};
  for (double& v : B2) v = rng.uniform(-1.0, 1.0);
  std::vector<double> a(m), b(m);
  kernels::scalar::coupled_radii2(xs.data(), ys.data(), m, B2, d2, a.data());
  kernels::avx2::coupled_radii2(xs.data(), ys.data(), m, B2, d2, b.data());
  for (std::size_t i = 0; i < m; i += 97) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-13));

  double B3[9], d3[3] = {0.3, -0.7, 0.1};
  for (double& v : B3) v = rng.uniform(-1.0, 1.0);
  kernels::scalar::coupled_radii3(xs.data(), ys.data(), zs.data(), m, B3, d3, a.data());
  kernels::avx2::coupled_radii3(xs.data(), ys.data(), zs.data(), m, B3, d3, b.data());
  for (std::size_t i = 0; i < m; i += 97) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-13));
}
#endif

TEST_CASE("stencil kernel computes the weighted gather") {
  std::vector<double> prev = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0};
  std::vector<std::int32_t> off = {-1, 0, 1};
  std::vector<double> w = {0.25, 0.5, 0.25};
  std::vector<double> next(5);
  kernels::stencil_apply_run(prev.data() + 1, next.data(), 5, off.data(), w.data(), 3);
  for (int i = 0; i < 5; ++i) CHECK(next[i] == doctest::Approx(prev[i + 1]));
}

TEST_CASE("projection kernel matches a direct evaluation") {
  double L[4] = {0.0, 1.0, 1.0, 0.0};  // swap map
  double u[2] = {1.0, 0.0};
  double xs[2] = {1.0, 2.0};
  double ys[2] = {0.5, -1.0};
  auto s = kernels::projection_accumulate2(xs, ys, 2, L, u);
  // d = (x - y, y - x); par = (x-y)^2, orth = (y-x)^2
  double d0 = 0.5 * 0.5, d1 = 3.0 * 3.0;
  CHECK(s.par == doctest::Approx(d0 + d1));
  CHECK(s.orth == doctest::Approx(d0 + d1));
}

#include "ellab/counterexamples.hpp"

TEST_CASE("forced-scalar and dispatched paths agree end to end") {
  Ellipsoid e1(Vec{0.0, 0.0}, SymMatrix::of({{0.1, 0.0}, {0.0, 10.0}}));
  Ellipsoid e2(Vec{0.0, 0.0}, SymMatrix::identity(2));
  CouplingMap phi = CouplingMap::linear(e1, e2, OrthoMatrix::identity(2));

  Rng r1(99);
  kernels::set_force_scalar(true);
  SplitEstimate scalar_est = projection_split(e1, e2, phi, Vec{1.0, 0.0}, 200000, r1);
  kernels::set_force_scalar(false);
  Rng r2(99);
  SplitEstimate simd_est = projection_split(e1, e2, phi, Vec{1.0, 0.0}, 200000, r2);

  CHECK(scalar_est.parallel == doctest::Approx(simd_est.parallel).epsilon(1e-12));
  CHECK(scalar_est.orthogonal == doctest::Approx(simd_est.orthogonal).epsilon(1e-12));
}
