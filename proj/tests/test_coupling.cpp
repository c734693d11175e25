#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ellab/coupling.hpp"
#include "ellab/field.hpp"

using namespace ellab;

namespace {

SymMatrix delta_example(double d) {
  return SymMatrix::of({{d + 1.0, d - 1.0}, {d - 1.0, d + 1.0}});
}

}  // namespace

TEST_CASE("weight matrix realizes the frame conjugation") {
  WeightMatrix w(3, 0.3, Vec{0.0, 1.0, 0.0});
  EigSym e = eig_sym(SymMatrix::from(w.matrix(), 1e-12));
  CHECK(e.eigenvalues[0] == doctest::Approx(0.3 - 1.0));
  CHECK(e.eigenvalues[1] == doctest::Approx(1.0));
  CHECK(e.eigenvalues[2] == doctest::Approx(1.0));
  // frame maps e1 to the requested direction
  Vec img = w.frame() * Vec::unit(3, 0);
  CHECK((img - Vec{0.0, 1.0, 0.0}).norm() <= 1e-12);

  // identity frame for direction e1
  WeightMatrix w1(2, 0.3, Vec{1.0, 0.0});
  CHECK((w1.frame().mat() - Mat::identity(2)).frobenius() == 0.0);
  CHECK_THROWS_AS(WeightMatrix(2, 1.5), std::invalid_argument);
}

TEST_CASE("trace objective vanishes for equal matrices under the identity coupling") {
  SymMatrix a = SymMatrix::of({{2.0, 0.3}, {0.3, 1.0}});
  WeightMatrix w(2, 0.4);
  CHECK(trace_objective(a, a, OrthoMatrix::identity(2), w) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("mirror objective on the large-distortion matrix stays positive") {
  SymMatrix a = SymMatrix::of({{5.0, -12.0}, {-12.0, 29.0}});
  for (double alpha : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    WeightMatrix w(2, alpha);
    double full = trace_objective(a, a, mirror_coupling(w), w);
    // half-objective 2(3+alpha), direct 2x2 arithmetic
    CHECK(0.5 * full == doctest::Approx(2.0 * (3.0 + alpha)).epsilon(1e-9));
    CHECK(full > 0.0);
    // while the optimal coupling is negative, consistent with the constant
    // coefficient bound -4(1-alpha)lambda_min
    double lmin = 17.0 - 12.0 * std::sqrt(2.0);
    CouplingResult opt = optimal_coupling(a, a, w);
    CHECK(opt.objective < 0.0);
    CHECK(opt.objective <= -4.0 * (1.0 - alpha) * lmin + 1e-9);
  }
}

TEST_CASE("worked closed forms for the distortion-delta family") {
  for (double d : {1.0, 2.0, 4.0, 9.0}) {
    SymMatrix a = delta_example(d);
    for (double alpha : {0.1, 0.5, 0.9}) {
      WeightMatrix w(2, alpha);
      double mirror_half = 0.5 * trace_objective(a, a, mirror_coupling(w), w);
      CHECK(mirror_half ==
            doctest::Approx(-(1.0 - alpha) * std::pow(std::sqrt(d) + 1.0, 2) +
                            std::pow(std::sqrt(d) - 1.0, 2))
                .epsilon(1e-9));
      double opt_half = 0.5 * optimal_coupling(a, a, w).objective;
      double expected = alpha * (d + 1.0) -
                        std::sqrt(alpha * alpha * (d + 1.0) * (d + 1.0) + 16.0 * (1.0 - alpha) * d);
      CHECK(opt_half == doctest::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("A1 = A2 = 2I: optimal objective is -8(1-alpha)") {
  SymMatrix a = SymMatrix::from(2.0 * Mat::identity(2));
  Rng rng(12);
  for (double alpha : {0.2, 0.5, 0.8}) {
    WeightMatrix w(2, alpha);
    CouplingResult opt = optimal_coupling(a, a, w);
    CHECK(opt.objective == doctest::Approx(-8.0 * (1.0 - alpha)).epsilon(1e-10));
    // Haar couplings never beat it
    for (int k = 0; k < 100000; ++k) {
      OrthoMatrix q = random_orthogonal(2, rng);
      CHECK(trace_objective(a, a, q, w) >= opt.objective - 1e-9);
    }
  }
}

TEST_CASE("optimality over Haar samples for random pairs") {
  Rng rng(77);
  EllipticityClass cls(2, 0.8, 2.5);
  for (int rep = 0; rep < 200; ++rep) {
    int n = 2 + rep % 2;
    EllipticityClass c(n, cls.lambda, cls.Lambda);
    SymMatrix a1 = random_in_class(c, rng);
    SymMatrix a2 = random_in_class(c, rng);
    double alpha = rng.uniform(0.05, 0.95);
    WeightMatrix w(n, alpha, sphere_point(n, rng));
    CouplingResult opt = optimal_coupling(a1, a2, w);
    CHECK(trace_objective(a1, a2, opt.q, w) == doctest::Approx(opt.objective).epsilon(1e-9));
    for (int k = 0; k < 10000; ++k)
      CHECK(trace_objective(a1, a2, random_orthogonal(n, rng), w) >= opt.objective - 1e-9);
  }
}

TEST_CASE("constant-coefficient negativity across the class") {
  Rng rng(101);
  for (int rep = 0; rep < 500; ++rep) {
    double lambda = rng.uniform(0.3, 1.5);
    double Lambda = lambda * rng.uniform(1.0, 4.0);
    int n = 2 + rep % 3;
    EllipticityClass cls(n, lambda, Lambda);
    SymMatrix a = random_in_class(cls, rng);
    double alpha = 0.1 + 0.1 * (rep % 9);
    WeightMatrix w(n, alpha);
    CouplingResult opt = optimal_coupling(a, a, w);
    CHECK(opt.objective <= -4.0 * (1.0 - alpha) * lambda + 1e-9);
  }
}

TEST_CASE("mirror coupling bound over the class") {
  Rng rng(55);
  EllipticityClass cls(2, 1.0, 1.3);
  for (double alpha : {0.1, 0.4}) {
    WeightMatrix w(2, alpha);
    OrthoMatrix j0 = mirror_coupling(w);
    CHECK((j0.mat() - Mat::of({{-1.0, 0.0}, {0.0, 1.0}})).frobenius() <= 1e-14);
    CHECK(j0.mat().det() == doctest::Approx(-1.0).epsilon(1e-12));
    for (int rep = 0; rep < 200; ++rep) {
      SymMatrix a = random_in_class(cls, rng);
      double bound = 2.0 * ((cls.n - 1.0 + 2.0 * alpha) * cls.Lambda - (cls.n + 1.0) * cls.lambda);
      CHECK(trace_objective(a, a, j0, w) <= bound + 1e-9);
    }
  }
}

TEST_CASE("frame covariance of the optimal objective") {
  Rng rng(303);
  for (int rep = 0; rep < 50; ++rep) {
    int n = 2 + rep % 3;
    EllipticityClass cls(n, 0.5, 2.0);
    SymMatrix a1 = random_in_class(cls, rng);
    SymMatrix a2 = random_in_class(cls, rng);
    Vec dir = sphere_point(n, rng);
    double alpha = rng.uniform(0.1, 0.9);
    double base = optimal_coupling(a1, a2, WeightMatrix(n, alpha, dir)).objective;

    OrthoMatrix r = random_orthogonal(n, rng);
    SymMatrix b1 = SymMatrix::from(r.mat() * a1.mat() * r.mat().transpose(), 1e-9);
    SymMatrix b2 = SymMatrix::from(r.mat() * a2.mat() * r.mat().transpose(), 1e-9);
    double rotated = optimal_coupling(b1, b2, WeightMatrix(n, alpha, r * dir)).objective;
    CHECK(rotated == doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("medium distance coupling maps nu1 to -nu2") {
  SUBCASE("identity matrices, direction e1") {
    OrthoMatrix q = medium_distance_coupling(SymMatrix::identity(2), SymMatrix::identity(2),
                                             Vec{1.0, 0.0});
    Vec img = q * Vec{1.0, 0.0};
    CHECK((img - Vec{-1.0, 0.0}).norm() <= 1e-12);
    CHECK(q(0, 0) == doctest::Approx(-1.0));
    CHECK(q(1, 1) == doctest::Approx(1.0));
  }
  SUBCASE("generic pairs") {
    Rng rng(99);
    EllipticityClass cls(3, 1.0, 3.0);
    for (int rep = 0; rep < 100; ++rep) {
      SymMatrix a1 = random_in_class(cls, rng);
      SymMatrix a2 = random_in_class(cls, rng);
      Vec dir = sphere_point(3, rng);
      Vec nu1 = principal_inv_sqrt(a1).mat() * dir;
      Vec nu2 = principal_inv_sqrt(a2).mat() * dir;
      OrthoMatrix q = medium_distance_coupling(a1, a2, dir);
      Vec lhs = q * nu1.normalized();
      CHECK((lhs + nu2.normalized()).norm() <= 1e-10);
      // |nu1|/|nu2| within [1/sqrt(3), sqrt(3)] for distortion <= 3
      double ratio = nu1.norm() / nu2.norm();
      CHECK(ratio >= 1.0 / std::sqrt(3.0) - 1e-12);
      CHECK(ratio <= std::sqrt(3.0) + 1e-12);
    }
  }
}

TEST_CASE("threshold formulas and limits") {
  EllipticityClass cls(2, 1.0, 1.0);
  Thresholds t = thresholds(cls, 0.5);
  CHECK(t.limit == doctest::Approx(3.0));
  CHECK(t.mirror == doctest::Approx(1.5));
  CHECK(t.diagonal == doctest::Approx(3.0 + 2.0 * std::sqrt(2.0)).epsilon(1e-12));

  // optimal threshold decreasing in alpha with limit (n+1)/(n-1)
  double prev = 1e300;
  for (double a = 0.001; a < 1.0; a += 0.02) {
    double cur = thresholds(cls, a).optimal;
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK(thresholds(cls, 1e-9).optimal == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("tau sign and value") {
  EllipticityClass unit(2, 1.0, 1.0);
  double t = tau(unit, 0.1);
  CHECK(t == doctest::Approx(0.025 * (0.9 + 2.0 * std::sqrt(0.9) - 1.0)).epsilon(1e-12));
  CHECK(t == doctest::Approx(0.0449).epsilon(1e-2));

  // tau <= 0 once the distortion reaches the optimal threshold
  for (double a : {0.1, 0.5}) {
    double thr = thresholds(unit, a).optimal;
    EllipticityClass at(2, 1.0, thr + 1e-9);
    CHECK(tau(at, a) <= 0.0);
    EllipticityClass below(2, 1.0, thr - 1e-3);
    CHECK(tau(below, a) > 0.0);
  }

  // tau -> 0 as alpha -> 0
  CHECK(std::abs(tau(unit, 1e-12)) <= 1e-11);
}

TEST_CASE("min trace bound dominates optimal objectives over the class") {
  EllipticityClass cls(2, 1.0, 2.0);
  CHECK(min_trace_bound(EllipticityClass(2, 1.0, 1.0), 0.5) ==
        doctest::Approx(2.0 * (1.0 - (0.5 + 2.0 * std::sqrt(0.5)))).epsilon(1e-12));
  Rng rng(1234);
  for (int n : {2, 3}) {
    EllipticityClass c(n, 1.0, 2.0);
    for (double alpha : {0.1, 0.5}) {
      double bound = min_trace_bound(c, alpha);
      WeightMatrix w(n, alpha);
      for (int rep = 0; rep < 1000; ++rep) {
        SymMatrix a1 = random_in_class(c, rng);
        SymMatrix a2 = random_in_class(c, rng);
        CHECK(optimal_coupling(a1, a2, w).objective <= bound + 1e-9);
      }
      // bound < 0 iff distortion below the optimal threshold
      CHECK((bound < 0.0) == (c.distortion() < thresholds(c, alpha).optimal));
    }
  }
}

TEST_CASE("continuity margin") {
  EllipticityClass cls(2, 1.0, 9.0);
  SymMatrix a = SymMatrix::of({{2.0, 0.4}, {0.4, 1.5}});
  ContinuityMargin same = continuity_margin(a, a, cls, 0.5);
  CHECK(same.closeness == doctest::Approx(0.0));
  CHECK(same.sufficient);

  ContinuityMargin far = continuity_margin(SymMatrix::identity(2),
                                           SymMatrix::from(9.0 * Mat::identity(2)), cls, 0.5);
  CHECK(far.closeness == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK_FALSE(far.sufficient);

  // sufficient pairs achieve the strengthened negativity
  Rng rng(404);
  EllipticityClass tight(2, 1.0, 1.02);
  int found = 0;
  for (int rep = 0; rep < 500 && found < 50; ++rep) {
    SymMatrix a1 = random_in_class(tight, rng);
    SymMatrix a2 = random_in_class(tight, rng);
    double alpha = 0.3;
    ContinuityMargin m = continuity_margin(a1, a2, tight, alpha);
    if (!m.sufficient) continue;
    ++found;
    CouplingResult opt = optimal_coupling(a1, a2, WeightMatrix(2, alpha));
    CHECK(opt.objective <= -2.0 * (1.0 - alpha) * tight.lambda + 1e-9);
  }
  CHECK(found > 0);
}

TEST_CASE("diagonal criterion matches the brute-force grid") {
  // For diagonal pairs with entries on a grid in [lambda, Lambda], the
  // rearranged inequality holds for all pairs iff the distortion is below the
  // diagonal threshold.
  const int n = 2;
  auto all_pairs_hold = [&](double lambda, double Lambda, double alpha) {
    const int g = 9;
    for (int i1 = 0; i1 < g; ++i1)
      for (int i2 = 0; i2 < g; ++i2)
        for (int j1 = 0; j1 < g; ++j1)
          for (int j2 = 0; j2 < g; ++j2) {
            double l11 = lambda + (Lambda - lambda) * i1 / (g - 1);
            double l12 = lambda + (Lambda - lambda) * i2 / (g - 1);
            double l21 = lambda + (Lambda - lambda) * j1 / (g - 1);
            double l22 = lambda + (Lambda - lambda) * j2 / (g - 1);
            double lhs = std::pow(std::sqrt(l12) - std::sqrt(l22), 2);
            double rhs = (1.0 - alpha) * std::pow(std::sqrt(l11) + std::sqrt(l21), 2);
            if (!(lhs < rhs)) return false;
          }
    return true;
  };
  for (double alpha : {0.2, 0.6}) {
    double thr = thresholds(EllipticityClass(n, 1.0, 1.0), alpha).diagonal;
    CHECK(all_pairs_hold(1.0, thr - 1e-6, alpha));
    CHECK_FALSE(all_pairs_hold(1.0, thr + 1e-6, alpha));
  }
}

TEST_CASE("projection reformulation matches the trace objective") {
  // phi(y) = A2^{1/2} Q A1^{-1/2} y on E1 = A1^{1/2} B: the weighted
  // projection split equals trace_objective / (n+2) after the change of
  // variables, so both sides carry the same sign.
  Rng rng(606);
  EllipticityClass cls(2, 0.8, 2.2);
  BallRule rule = ball_quadrature(2, 12);
  for (int rep = 0; rep < 25; ++rep) {
    SymMatrix a1 = random_in_class(cls, rng);
    SymMatrix a2 = random_in_class(cls, rng);
    double alpha = rng.uniform(0.1, 0.9);
    WeightMatrix w(2, alpha);
    OrthoMatrix q = rep % 2 ? optimal_coupling(a1, a2, w).q : random_orthogonal(2, rng);
    double objective = trace_objective(a1, a2, q, w);

    Mat s1 = principal_sqrt(a1).mat();
    Mat phi = principal_sqrt(a2).mat() * q.mat() * s1.inverse();
    double par = 0.0, orth = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      Vec y = s1 * rule.nodes[k];  // uniform on E1 under the ball rule weights
      Vec d = y - phi * y;
      par += rule.weights[k] * d[0] * d[0];
      orth += rule.weights[k] * (d.norm2() - d[0] * d[0]);
    }
    double weighted = (alpha - 1.0) * par + orth;
    CHECK(weighted == doctest::Approx(objective / 4.0).epsilon(1e-6));
    if (std::abs(objective) > 1e-9) CHECK((objective < 0.0) == (par > orth / (1.0 - alpha)));
  }
}
