#pragma once

// Dense symmetric-matrix numerics for small dimensions (2 <= n <= 8):
// cyclic Jacobi eigendecomposition, principal square roots, the polar
// (nearest-orthogonal) factor and its trace identity, Haar-random orthogonal
// matrices, and uniform-ellipticity class membership.

#include <cstdint>

#include "ellab/linalg.hpp"
#include "ellab/rng.hpp"

namespace ellab {

// The admissible set A(lambda, Lambda): symmetric matrices whose eigenvalues
// all lie in [lambda, Lambda].
struct EllipticityClass {
  int n;
  double lambda;
  double Lambda;

  EllipticityClass(int n_, double lambda_, double Lambda_) : n(n_), lambda(lambda_), Lambda(Lambda_) {
    detail::check_dim(n_);
    if (!(lambda > 0.0) || !(Lambda >= lambda))
      throw std::invalid_argument("ellipticity bounds require 0 < lambda <= Lambda");
  }
  double distortion() const { return Lambda / lambda; }
};

struct EigSym {
  Vec eigenvalues;  // ascending
  OrthoMatrix vectors;  // columns, so A = R diag(w) R^T
};

// Cyclic Jacobi rotations, capped at 100 sweeps. Throws std::runtime_error if
// the off-diagonal mass has not converged by then.
EigSym eig_sym(const SymMatrix& a);

// Unique symmetric PSD square root. Eigenvalues in [-1e-12 * max(1,|w|_max), 0)
// are clamped to zero; anything lower is a domain error.
SymMatrix principal_sqrt(const SymMatrix& a);

// (A^{1/2})^{-1} for strictly positive definite A.
SymMatrix principal_inv_sqrt(const SymMatrix& a);

struct PolarResult {
  OrthoMatrix q0;    // argmax of trace(M Q) over O(n); nearest orthogonal to M^T
  double value;      // trace(M q0) = trace((M^T M)^{1/2})
};

// Q0 = (M^T M)^{-1/2} M^T when |det M| > 1e-12; otherwise (or on numerical
// failure) falls back to a one-sided Jacobi SVD M = U S V^T with Q0 = V U^T.
PolarResult polar_orthogonal(const Mat& m);

// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the R
// diagonal sign fixed. Deterministic for a fixed seed.
OrthoMatrix random_orthogonal(int n, Rng& rng);
OrthoMatrix random_orthogonal(int n, std::uint64_t seed);

// True iff every eigenvalue of a lies in [lambda - 1e-12, Lambda + 1e-12].
bool in_class(const SymMatrix& a, const EllipticityClass& cls);

// R diag(d) R^T with R Haar and d uniform in [lambda, Lambda]; always a member
// of the class. Test and sweep plumbing.
SymMatrix random_in_class(const EllipticityClass& cls, Rng& rng);

}  // namespace ellab
