#pragma once

// Ellipsoid geometry E_x = x + eps A(x)^{1/2} B, coefficient fields with
// constant determinant, unit-ball quadrature rules and uniform sampling.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ellab/matcore.hpp"
#include "ellab/rng.hpp"

namespace ellab {

double unit_ball_volume(int n);

// E = center + shape * B with shape symmetric positive definite.
class Ellipsoid {
 public:
  Ellipsoid(const Vec& center, const SymMatrix& shape);

  const Vec& center() const { return center_; }
  const SymMatrix& shape() const { return shape_; }
  const Mat& shape_inv() const { return shape_inv_; }
  int dim() const { return center_.dim(); }

  bool contains(const Vec& y) const {
    Vec w = shape_inv_ * (y - center_);
    return w.norm2() < 1.0;
  }
  double volume() const { return unit_ball_volume(dim()) * det_; }

 private:
  Vec center_;
  SymMatrix shape_;
  Mat shape_inv_;
  double det_;
};

Vec sample_uniform(const Ellipsoid& e, Rng& rng);

struct OverlapEstimate {
  double fraction = 0.0;   // |E1 cap E2| / |E1|
  double std_error = 0.0;
  long long samples = 0;
};

// Monte Carlo estimate of |E1 cap E2| / |E1|.
OverlapEstimate overlap_fraction(const Ellipsoid& e1, const Ellipsoid& e2,
                                 long long samples, Rng& rng);

// Quadrature over the unit ball, weights normalized to sum to one so the rule
// computes averages. antipode[i] gives the index of -node[i]; the solver and
// the key-inequality verifier sum antipodal pairs together.
struct BallRule {
  std::vector<Vec> nodes;
  std::vector<double> weights;
  std::vector<int> antipode;
};

// n in {2,3}, degree >= 1: integrates polynomials up to `degree` exactly.
// Higher dimensions use quasi-Monte Carlo (qmc_ball_points) instead.
BallRule ball_quadrature(int n, int degree);

// Scrambled Halton points mapped to the unit ball, for n >= 2.
std::vector<Vec> qmc_ball_points(int n, int count, std::uint64_t scramble_seed = 0);

// Solution domain. Membership is exact; the collar of width sqrt(Lambda)*eps
// around it is where the payoff is evaluated analytically.
struct Domain {
  enum class Kind { ball, box };

  static Domain ball(const Vec& center, double radius, double collar_width = 0.0);
  static Domain box(const Vec& lo, const Vec& hi, double collar_width = 0.0);

  bool contains(const Vec& x) const;
  void bounding_box(Vec& lo, Vec& hi) const;
  Vec center() const;
  int dim() const { return kind == Kind::ball ? center_.dim() : lo_.dim(); }

  Kind kind = Kind::ball;
  Vec center_;
  double radius_ = 0.0;
  Vec lo_, hi_;
  double collar_width = 0.0;
};

// Map x -> A(x) into A(lambda, Lambda) with constant determinant. Shipped
// kinds: constant, checkerboard (cell parity by floor coordinates), rotating
// R(theta(x)) diag(lambda,Lambda) R(theta(x))^T, and custom evaluators, which
// are validated at every evaluation.
class CoefficientField {
 public:
  enum class Kind { constant, checkerboard, rotating, custom };

  static CoefficientField constant(const EllipticityClass& cls, const SymMatrix& a);
  static CoefficientField checkerboard(const EllipticityClass& cls, double cell,
                                       const SymMatrix& even, const SymMatrix& odd);
  // theta(x) = omega * x_1, rotation acting in the (e1,e2) plane.
  static CoefficientField rotating(const EllipticityClass& cls, double omega);
  static CoefficientField custom(const EllipticityClass& cls, double det_target,
                                 std::function<SymMatrix(const Vec&)> eval);

  // Parses the sectioned key=value field description (see README). `text`
  // is the file contents, not a path.
  static CoefficientField from_config(const std::string& text);

  SymMatrix evaluate(const Vec& x) const;
  Ellipsoid ellipsoid_at(const Vec& x, double eps) const;

  const EllipticityClass& cls() const { return cls_; }
  double det_target() const { return det_target_; }
  Kind kind() const { return kind_; }

  // Stencil sharing for the grid solver: number of distinct matrices the
  // field takes (0 = unbounded, one stencil per node), and the key at x.
  int stencil_key_count() const;
  int stencil_key(const Vec& x) const;
  SymMatrix matrix_for_key(int key) const;

 private:
  CoefficientField(const EllipticityClass& cls, double det_target, Kind kind)
      : cls_(cls), det_target_(det_target), kind_(kind) {}

  EllipticityClass cls_;
  double det_target_;
  Kind kind_;
  SymMatrix a_even_, a_odd_;  // constant uses a_even_
  double cell_ = 1.0;
  double omega_ = 0.0;
  std::function<SymMatrix(const Vec&)> eval_;
};

}  // namespace ellab
