#pragma once

// Projection-inequality checks for measure-preserving couplings between two
// ellipsoids, and the large-distortion counterexamples in two and three
// dimensions where the inequality fails for every coupling.

#include <functional>
#include <string>
#include <vector>

#include "ellab/field.hpp"

namespace ellab {

// phi: E1 -> E2. The linear kind phi(y) = S2 Q S1^{-1} y is measure preserving
// by construction when |det S1| = |det S2|; custom maps must pass a
// chi-square pushforward audit before they are used.
class CouplingMap {
 public:
  static CouplingMap linear(const Ellipsoid& e1, const Ellipsoid& e2, const OrthoMatrix& q);
  static CouplingMap custom(std::function<Vec(const Vec&)> phi);

  Vec apply(const Vec& y) const;
  bool is_linear() const { return linear_; }
  const Mat& matrix() const;  // linear kind only

 private:
  bool linear_ = false;
  Mat m_;
  std::function<Vec(const Vec&)> phi_;
};

// Uniformity of the pushforward of uniform E1 samples on E2, chi-square over
// an equal-probability 8^n partition at significance 0.01.
bool measure_preservation_audit(const Ellipsoid& e1, const Ellipsoid& e2, const CouplingMap& phi,
                                long long samples, Rng& rng);

struct SplitEstimate {
  double parallel = 0.0;   // avg |P_u (y - phi(y))|^2
  double orthogonal = 0.0; // avg |(I-P_u)(y - phi(y))|^2
  double parallel_se = 0.0;
  double orthogonal_se = 0.0;
  long long samples = 0;
};

// Monte Carlo averages over uniform E1 samples. Custom maps are audited first
// and rejected (std::domain_error) if the pushforward is not uniform on E2.
SplitEstimate projection_split(const Ellipsoid& e1, const Ellipsoid& e2, const CouplingMap& phi,
                               const Vec& direction, long long samples, Rng& rng);

struct SweepRecord {
  std::string id;
  double parallel = 0.0;
  double orthogonal = 0.0;
  double parallel_se = 0.0;
  double orthogonal_se = 0.0;
  bool violated = false;  // parallel < orthogonal, the wrong way around
};

struct CounterexampleReport {
  int dim = 0;
  double parallel_bound = 0.0;    // pointwise analytic bound on the parallel average
  double orthogonal_floor = 0.0;  // analytic floor on the orthogonal average
  double volume = 0.0;            // |E1| (= |E2|)
  std::vector<SweepRecord> couplings;
  bool all_violated = false;
  long long samples_per_coupling = 0;
};

// E1 = diag(1/10, 10) B against the unit disk. The sweep covers
// `coupling_grid` rotation angles for each of the two reflection classes.
CounterexampleReport counterexample_2d(long long samples, int coupling_grid, Rng& rng);

// E1 = diag(1, 100, 1) B against E2 = diag(1, 1, 100) B. The sweep covers
// `coupling_grid` Haar-random orthogonal matrices plus the 24 proper signed
// axis permutations.
CounterexampleReport counterexample_3d(long long samples, int coupling_grid, Rng& rng);

// |E cap {|y_axis| >= threshold}| / |E| in closed form via the ellipsoid-to-
// ball change of variables and the spherical-cap volume.
double halfslab_volume_fraction(const Ellipsoid& e, int axis, double threshold);

}  // namespace ellab
