#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ellab/counterexamples.hpp"

using namespace ellab;

TEST_CASE("halfslab closed forms") {
  Ellipsoid disk(Vec{0.0, 0.0}, SymMatrix::identity(2));
  // unit disk, threshold 1/2: fraction 2/3 - sqrt(3)/(2 pi), 1D quadrature oracle
  double expected = 0.0;
  {
    const int m = 20000;
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
      double t = 0.5 + 0.5 * (i + 0.5) / m;
      acc += std::sqrt(1.0 - t * t) * (0.5 / m);
    }
    expected = 4.0 * acc / M_PI;  // both caps, normalized by pi
  }
  double got = halfslab_volume_fraction(disk, 1, 0.5);
  CHECK(got == doctest::Approx(expected).epsilon(1e-6));
  CHECK(got == doctest::Approx(2.0 / 3.0 - std::sqrt(3.0) / (2.0 * M_PI)).epsilon(1e-12));
  CHECK(got == doctest::Approx(0.3910).epsilon(1e-3));

  CHECK(halfslab_volume_fraction(disk, 0, 0.0) == doctest::Approx(1.0));
  CHECK(halfslab_volume_fraction(disk, 0, 1.0) == 0.0);
  CHECK(halfslab_volume_fraction(disk, 0, 2.0) == 0.0);

  // the 2d counterexample slab: E1 = diag(1/10,10) B, |y2| >= 5 pulls back to
  // threshold 1/2 on the disk
  Ellipsoid e1(Vec{0.0, 0.0}, SymMatrix::of({{0.1, 0.0}, {0.0, 10.0}}));
  CHECK(halfslab_volume_fraction(e1, 1, 5.0) == doctest::Approx(got).epsilon(1e-12));

  // 3d: E1 = diag(1,100,1) B has at least half its volume at |y2| >= 5
  Ellipsoid e3(Vec{0.0, 0.0, 0.0},
               SymMatrix::of({{1.0, 0.0, 0.0}, {0.0, 100.0, 0.0}, {0.0, 0.0, 1.0}}));
  CHECK(halfslab_volume_fraction(e3, 1, 5.0) >= 0.5);
  CHECK(halfslab_volume_fraction(e3, 1, 5.0) == doctest::Approx(1.0 - (1.5 * 0.05 - 0.5 * 0.000125)).epsilon(1e-12));
}

TEST_CASE("halfslab matches Monte Carlo on random ellipsoids") {
  Rng rng(2025);
  for (int rep = 0; rep < 20; ++rep) {
    int n = 2 + rep % 2;
    EllipticityClass cls(n, 0.5, 4.0);
    SymMatrix shape = random_in_class(cls, rng);
    Ellipsoid e(Vec(n), shape);
    int axis = rep % n;
    // pick a threshold inside the reachable span
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = shape(axis, i);
    double span = v.norm();
    double thr = rng.uniform(0.1, 0.9) * span;
    double analytic = halfslab_volume_fraction(e, axis, thr);
    long long hits = 0;
    const long long samples = 200000;
    for (long long s = 0; s < samples; ++s) {
      Vec y = sample_uniform(e, rng);
      if (std::abs(y[axis]) >= thr) ++hits;
    }
    double mc = static_cast<double>(hits) / samples;
    double se = std::sqrt(std::max(1e-12, mc * (1.0 - mc) / samples));
    CHECK(std::abs(mc - analytic) <= 3.5 * se + 1e-4);
  }
}

TEST_CASE("projection split: reflections and the identity") {
  Rng rng(1);
  Ellipsoid ball(Vec{0.0, 0.0}, SymMatrix::identity(2));
  SUBCASE("mirror across direction-orthogonal hyperplane moves only the parallel part") {
    OrthoMatrix mirror = OrthoMatrix::from(Mat::of({{-1.0, 0.0}, {0.0, 1.0}}));
    CouplingMap phi = CouplingMap::linear(ball, ball, mirror);
    SplitEstimate est = projection_split(ball, ball, phi, Vec{1.0, 0.0}, 100000, rng);
    CHECK(est.orthogonal == 0.0);
    CHECK(est.parallel > 0.0);
    // avg |2 y_1|^2 = 4 / (n+2) = 1
    CHECK(est.parallel == doctest::Approx(1.0).epsilon(0.05));
  }
  SUBCASE("identity map moves nothing") {
    CouplingMap phi = CouplingMap::linear(ball, ball, OrthoMatrix::identity(2));
    SplitEstimate est = projection_split(ball, ball, phi, Vec{1.0, 0.0}, 100000, rng);
    CHECK(est.parallel == 0.0);
    CHECK(est.orthogonal == 0.0);
  }
  SUBCASE("sample floor is enforced") {
    CouplingMap phi = CouplingMap::linear(ball, ball, OrthoMatrix::identity(2));
    CHECK_THROWS_AS(projection_split(ball, ball, phi, Vec{1.0, 0.0}, 100, rng),
                    std::invalid_argument);
  }
}

TEST_CASE("linear maps need matching determinants") {
  Ellipsoid ball(Vec{0.0, 0.0}, SymMatrix::identity(2));
  Ellipsoid big(Vec{0.0, 0.0}, SymMatrix::of({{2.0, 0.0}, {0.0, 2.0}}));
  CHECK_THROWS_AS(CouplingMap::linear(ball, big, OrthoMatrix::identity(2)),
                  std::invalid_argument);
}

TEST_CASE("measure preservation audit accepts rotations and rejects distortions") {
  Rng rng(77);
  Ellipsoid e1(Vec{0.0, 0.0}, SymMatrix::of({{0.1, 0.0}, {0.0, 10.0}}));
  Ellipsoid e2(Vec{0.0, 0.0}, SymMatrix::identity(2));
  SUBCASE("volume-preserving linear coupling passes") {
    CouplingMap good = CouplingMap::linear(e1, e2, random_orthogonal(2, rng));
    CHECK(measure_preservation_audit(e1, e2, good, 100000, rng));
  }
  SUBCASE("a mass-concentrating custom map fails") {
    CouplingMap bad = CouplingMap::custom([](const Vec& y) {
      // squeeze everything toward the center of E2: far from uniform
      Vec w{y[0] * 10.0, y[1] * 0.1};
      return w * 0.5;
    });
    CHECK_FALSE(measure_preservation_audit(e1, e2, bad, 100000, rng));
    CHECK_THROWS_AS(projection_split(e1, e2, bad, Vec{1.0, 0.0}, 100000, rng),
                    std::domain_error);
  }
  SUBCASE("an honest custom rewrite of a linear map passes and estimates agree") {
    Mat L = CouplingMap::linear(e1, e2, OrthoMatrix::identity(2)).matrix();
    CouplingMap custom = CouplingMap::custom([L](const Vec& y) { return L * y; });
    CHECK(measure_preservation_audit(e1, e2, custom, 100000, rng));
    Rng r1(5), r2(5);
    SplitEstimate a = projection_split(e1, e2, CouplingMap::linear(e1, e2, OrthoMatrix::identity(2)),
                                       Vec{1.0, 0.0}, 150000, r1);
    SplitEstimate b = projection_split(e1, e2, custom, Vec{1.0, 0.0}, 150000, r2);
    CHECK(a.parallel == doctest::Approx(b.parallel).epsilon(0.05));
    CHECK(a.orthogonal == doctest::Approx(b.orthogonal).epsilon(0.05));
  }
}

TEST_CASE("2d counterexample: every coupling on the grid violates the inequality") {
  Rng rng(42);
  CounterexampleReport rep = counterexample_2d(1000000, 60, rng);
  CHECK(rep.dim == 2);
  CHECK(rep.couplings.size() == 120);
  CHECK(rep.volume == doctest::Approx(M_PI).epsilon(1e-12));
  CHECK(rep.parallel_bound == doctest::Approx(1.21));
  CHECK(rep.orthogonal_floor ==
        doctest::Approx(16.0 * (2.0 / 3.0 - std::sqrt(3.0) / (2.0 * M_PI))).epsilon(1e-12));
  CHECK(rep.all_violated);
  for (const SweepRecord& r : rep.couplings) {
    CHECK(r.parallel <= 1.21 + 3.0 * r.parallel_se + 0.05);
    CHECK(r.orthogonal >= rep.orthogonal_floor - 3.0 * r.orthogonal_se - 0.05);
    CHECK(r.violated);
    CHECK(r.orthogonal - r.parallel >= 4.0);
  }
}

TEST_CASE("3d counterexample: rotated cigar ellipsoids violate for every coupling") {
  Rng rng(43);
  CounterexampleReport rep = counterexample_3d(1000000, 50, rng);
  CHECK(rep.dim == 3);
  CHECK(rep.couplings.size() == 50 + 24);
  CHECK(rep.parallel_bound == doctest::Approx(4.0));
  CHECK(rep.orthogonal_floor == doctest::Approx(8.0));
  CHECK(rep.all_violated);
  for (const SweepRecord& r : rep.couplings) {
    CHECK(r.parallel <= 4.0 + 0.05);
    CHECK(r.orthogonal >= 8.0 - 0.05);
  }
}
