#pragma once

// Trace objectives and orthogonal couplings between two ellipsoid steps: the
// optimal coupling (polar factor of A1^{1/2} W A2^{1/2}), the mirror
// reflection, the medium-distance coupling, and the distortion thresholds
// below which each of them certifies a negative objective.

#include "ellab/matcore.hpp"

namespace ellab {

// W = R diag(alpha-1, 1, ..., 1) R^T where the frame R maps e1 to the
// coupling direction (x-z)/|x-z|. Built from a single reflection; identity
// frame when the direction is e1.
class WeightMatrix {
 public:
  WeightMatrix(int n, double alpha);
  WeightMatrix(int n, double alpha, const Vec& direction);

  int dim() const { return n_; }
  double alpha() const { return alpha_; }
  const OrthoMatrix& frame() const { return frame_; }
  const Mat& matrix() const { return w_; }

 private:
  int n_;
  double alpha_;
  OrthoMatrix frame_;
  Mat w_;
};

// trace( W (A1 + A2 - 2 A2^{1/2} Q A1^{1/2}) ). Negative values are the good
// ones: they certify the key inequality's second-order gain.
double trace_objective(const SymMatrix& a1, const SymMatrix& a2, const OrthoMatrix& q,
                       const WeightMatrix& w);

struct CouplingResult {
  OrthoMatrix q;
  double objective;
  bool negative;
};

// Minimizer of the trace objective over O(n).
CouplingResult optimal_coupling(const SymMatrix& a1, const SymMatrix& a2, const WeightMatrix& w);

// R diag(-1, 1, ..., 1) R^T: reflection across the coupling direction.
OrthoMatrix mirror_coupling(const WeightMatrix& w);

// Orthogonal Q with Q nu1/|nu1| = -nu2/|nu2|, nu_i = A_i^{-1/2} direction.
// Fixed representative: Q = H2 diag(-1,I) H1 with H_i reflections aligning
// nu_i/|nu_i| with e1.
OrthoMatrix medium_distance_coupling(const SymMatrix& a1, const SymMatrix& a2,
                                     const Vec& direction);

struct Thresholds {
  double optimal;   // (n (1-a)^{1/n} + (1-a)) / (n-1)
  double limit;     // (n+1)/(n-1)
  double mirror;    // (n+1)/(n-1+2a)
  double diagonal;  // (1 + 2 sqrt((1-a)/(n-1)))^2
};

Thresholds thresholds(const EllipticityClass& cls, double alpha);

// tau = (alpha/(n+2)) [ ((1-a) + n(1-a)^{1/n}) lambda - (n-1) Lambda ];
// positive exactly when the distortion is below the optimal threshold.
double tau(const EllipticityClass& cls, double alpha);

// 2 [ (n-1) Lambda - ((1-a) + n (1-a)^{1/n}) lambda ]: upper bound on the
// optimal objective over every pair in the class.
double min_trace_bound(const EllipticityClass& cls, double alpha);

struct ContinuityMargin {
  double closeness;   // || A1^{1/2} - A2^{1/2} ||_F
  double threshold;   // (1-a) lambda / (2 sqrt(n Lambda))
  bool sufficient;
};

ContinuityMargin continuity_margin(const SymMatrix& a1, const SymMatrix& a2,
                                   const EllipticityClass& cls, double alpha);

// Reflection H with H e1 = direction (identity when direction == e1).
OrthoMatrix frame_to_direction(const Vec& direction);

}  // namespace ellab
