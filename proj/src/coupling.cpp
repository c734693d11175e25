#include "ellab/coupling.hpp"

#include <cmath>

namespace ellab {

OrthoMatrix frame_to_direction(const Vec& direction) {
  const int n = direction.dim();
  Vec d = direction.normalized();
  Vec v = d - Vec::unit(n, 0);
  double v2 = v.norm2();
  if (v2 < 1e-28) return OrthoMatrix::identity(n);
  Mat h = Mat::identity(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) h(i, j) -= 2.0 * v[i] * v[j] / v2;
  return OrthoMatrix::from(h);
}

namespace {

Mat weight_in_frame(int n, double alpha, const OrthoMatrix& frame) {
  Vec d(n);
  d[0] = alpha - 1.0;
  for (int i = 1; i < n; ++i) d[i] = 1.0;
  return frame.mat() * Mat::diag(d) * frame.mat().transpose();
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("alpha must lie in (0,1)");
}

}  // namespace

WeightMatrix::WeightMatrix(int n, double alpha)
    : n_(n), alpha_(alpha), frame_(OrthoMatrix::identity(n)) {
  check_alpha(alpha);
  w_ = weight_in_frame(n, alpha, frame_);
}

WeightMatrix::WeightMatrix(int n, double alpha, const Vec& direction)
    : n_(n), alpha_(alpha), frame_(frame_to_direction(direction)) {
  check_alpha(alpha);
  if (direction.dim() != n) throw std::invalid_argument("weight direction dimension mismatch");
  w_ = weight_in_frame(n, alpha, frame_);
}

double trace_objective(const SymMatrix& a1, const SymMatrix& a2, const OrthoMatrix& q,
                       const WeightMatrix& w) {
  const Mat s1 = principal_sqrt(a1).mat();
  const Mat s2 = principal_sqrt(a2).mat();
  Mat inner = a1.mat() + a2.mat() - 2.0 * (s2 * q.mat() * s1);
  return (w.matrix() * inner).trace();
}

CouplingResult optimal_coupling(const SymMatrix& a1, const SymMatrix& a2, const WeightMatrix& w) {
  const Mat s1 = principal_sqrt(a1).mat();
  const Mat s2 = principal_sqrt(a2).mat();
  // trace(W A2^{1/2} Q A1^{1/2}) = trace(M Q) with M = A1^{1/2} W A2^{1/2};
  // the maximizer is the polar factor of M^T.
  Mat m = s1 * w.matrix() * s2;
  PolarResult polar = polar_orthogonal(m);
  CouplingResult out;
  out.q = polar.q0;
  out.objective = (w.matrix() * (a1.mat() + a2.mat())).trace() - 2.0 * polar.value;
  out.negative = out.objective < 0.0;
  return out;
}

OrthoMatrix mirror_coupling(const WeightMatrix& w) {
  const int n = w.dim();
  Vec d(n);
  d[0] = -1.0;
  for (int i = 1; i < n; ++i) d[i] = 1.0;
  Mat j0 = w.frame().mat() * Mat::diag(d) * w.frame().mat().transpose();
  return OrthoMatrix::from(j0);
}

OrthoMatrix medium_distance_coupling(const SymMatrix& a1, const SymMatrix& a2,
                                     const Vec& direction) {
  const int n = a1.dim();
  Vec dir = direction.normalized();
  Vec nu1 = principal_inv_sqrt(a1).mat() * dir;
  Vec nu2 = principal_inv_sqrt(a2).mat() * dir;
  OrthoMatrix h1 = frame_to_direction(nu1);  // h1 e1 = nu1/|nu1|, and h1 is an involution
  OrthoMatrix h2 = frame_to_direction(nu2);
  Vec d(n);
  d[0] = -1.0;
  for (int i = 1; i < n; ++i) d[i] = 1.0;
  Mat q = h2.mat() * Mat::diag(d) * h1.mat();
  return OrthoMatrix::from(q);
}

Thresholds thresholds(const EllipticityClass& cls, double alpha) {
  check_alpha(alpha);
  const double n = cls.n;
  if (cls.n < 2) throw std::invalid_argument("thresholds need n >= 2");
  Thresholds t;
  t.optimal = (n * std::pow(1.0 - alpha, 1.0 / n) + (1.0 - alpha)) / (n - 1.0);
  t.limit = (n + 1.0) / (n - 1.0);
  t.mirror = (n + 1.0) / (n - 1.0 + 2.0 * alpha);
  t.diagonal = std::pow(1.0 + 2.0 * std::sqrt((1.0 - alpha) / (n - 1.0)), 2.0);
  return t;
}

double tau(const EllipticityClass& cls, double alpha) {
  check_alpha(alpha);
  const double n = cls.n;
  double bracket = ((1.0 - alpha) + n * std::pow(1.0 - alpha, 1.0 / n)) * cls.lambda -
                   (n - 1.0) * cls.Lambda;
  return alpha / (n + 2.0) * bracket;
}

double min_trace_bound(const EllipticityClass& cls, double alpha) {
  check_alpha(alpha);
  const double n = cls.n;
  return 2.0 * ((n - 1.0) * cls.Lambda -
                ((1.0 - alpha) + n * std::pow(1.0 - alpha, 1.0 / n)) * cls.lambda);
}

ContinuityMargin continuity_margin(const SymMatrix& a1, const SymMatrix& a2,
                                   const EllipticityClass& cls, double alpha) {
  check_alpha(alpha);
  ContinuityMargin out;
  out.closeness = (principal_sqrt(a1).mat() - principal_sqrt(a2).mat()).frobenius();
  out.threshold = (1.0 - alpha) * cls.lambda / (2.0 * std::sqrt(cls.n * cls.Lambda));
  out.sufficient = out.closeness <= out.threshold;
  return out;
}

}  // namespace ellab
