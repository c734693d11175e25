#pragma once

// The comparison function f = f1 - f2, the constants ledger realizing the
// admissible choices of C, C~, N, and the numerical verifiers for the key
// inequality and its medium-distance ingredients.
//
// Production ledgers can make C^{4N} exceed the double range by astronomical
// amounts. Every comparison the verifiers make is therefore carried out in
// units of f2 at the base pair (ratios of powers of C with small exponents),
// which is exact in sign; the plain f2() evaluation saturates to +inf when the
// true value is not representable.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>

#include "ellab/coupling.hpp"
#include "ellab/field.hpp"

namespace ellab {

struct ComparisonConstants {
  double alpha = 0.0;
  double C = 0.0;
  double C_tilde = 0.0;
  long long N = 0;
  double r = 0.0;
  double sup_u = 0.0;
  double gamma_short = 0.0;   // (1/4 sqrt(lambda/Lambda))^n
  double gamma_medium = 0.0;  // 3^{-n/2} (1/300)^n
  // Slack for the key inequality; NaN means the default eps^2 (the short
  // distance argument instead uses eps^alpha).
  double eta = std::numeric_limits<double>::quiet_NaN();

  double effective_eta(double eps) const {
    return std::isnan(eta) ? eps * eps : eta;
  }
};

struct LedgerCheck {
  bool c1 = false;        // C > (2/r^a) sup_u
  bool c2 = false;        // C > (1/tau)(16 C~ Lambda r^{2-a} + 4 r^{2-a} + 1)
  bool c3 = false;        // C > 12 C~ r
  bool c4_medium = false; // gamma_medium C^2 - 3 C Lambda^{a/2} - 2 > 0
  bool c4_short = false;  // same with gamma_short
  bool n1 = false;        // N >= 4 sqrt(3)
  bool n2 = false;        // N >= sqrt(2^7 * 3) Lambda C
  bool all() const { return c1 && c2 && c3 && c4_medium && c4_short && n1 && n2; }
};

LedgerCheck check_constants(const ComparisonConstants& k, const EllipticityClass& cls);

struct DistortionError : std::domain_error {
  DistortionError(const std::string& msg, double threshold_)
      : std::domain_error(msg), threshold(threshold_) {}
  double threshold;
};

// Minimal admissible ledger: smallest C meeting every inequality, inflated by
// 1.01, then the smallest admissible integer N. Throws DistortionError
// (carrying the optimal threshold) when tau(cls, alpha) <= 0.
ComparisonConstants build_constants(const EllipticityClass& cls, double alpha, double r,
                                    double sup_u);

// f1(x,z) = C |x-z|^alpha + C~ |x+z|^2
double f1(const Vec& x, const Vec& z, const ComparisonConstants& k);

// Annulus S_i holds (i-1)/2 < |x-z|/(sqrt(lambda) eps) <= i/2; ties resolve to
// the lower index. zero => beyond the cutoff N, where f2 vanishes.
struct AnnulusIndex {
  bool zero = false;
  long long index = 0;
};

AnnulusIndex annulus_of(double separation, double eps, double lambda, long long N);

// f2 = C^{2(2N-i)} eps^alpha on S_i; 0 beyond N sqrt(lambda) eps. Saturates to
// +inf when the power exceeds the double range.
double f2(const Vec& x, const Vec& z, double eps, const EllipticityClass& cls,
          const ComparisonConstants& k);

// Exponent m with f2 = C^m eps^alpha; nullopt where f2 = 0.
std::optional<long long> f2_exponent(const Vec& x, const Vec& z, double eps,
                                     const EllipticityClass& cls, const ComparisonConstants& k);

struct IntegratorSpec {
  int quad_degree = 10;
  long long mc_samples = 1'000'000;
  std::uint64_t seed = 0x5eedULL;
};

enum class VerifyBranch { large_distance, medium_distance };

struct VerifyResult {
  // f(x,z) - avg_B f(x + eps A(x)^{1/2} y, z + eps A(z)^{1/2} Q y) dy - eta.
  // Positive certifies the key inequality at (x,z). May be +-inf when the
  // ledger pushes f2 beyond double range; the sign is still exact.
  double margin = 0.0;
  // Large branch: margin / eps^2. Medium branch: margin / f2(x,z). Finite.
  double margin_rel = 0.0;
  VerifyBranch branch = VerifyBranch::large_distance;
  bool positive = false;
  // False when the Monte Carlo error bars could flip the sign.
  bool conclusive = false;
  double mc_rel_std_error = 0.0;
};

// Requires |x-z| > (1/2) sqrt(lambda) eps. The f1 part is
// integrated by antipodally-paired quadrature (numerically stable down to the
// eps^2 scale); the f2 part uses Monte Carlo wherever the coupled step can
// touch its support.
VerifyResult verify_key_inequality(const Vec& x, const Vec& z, const CoefficientField& field,
                                   const OrthoMatrix& q, double eps,
                                   const ComparisonConstants& k,
                                   const IntegratorSpec& spec = {},
                                   double eta_override = std::numeric_limits<double>::quiet_NaN());

// Picks the coupling the proof uses at this separation: optimal (weight in the
// (x-z)/|x-z| frame) beyond N sqrt(lambda) eps, the medium-distance reflection
// otherwise.
OrthoMatrix coupling_for_pair(const Vec& x, const Vec& z, const CoefficientField& field,
                              double alpha);

// f1(x+h_x, z+h_z) <= f1(x,z) + 3 C Lambda^{a/2} eps^a for `trials` random
// |h_x|, |h_z| < sqrt(Lambda) eps. Requires sqrt(Lambda) eps < min(1, r).
bool f1_step_bound_check(const Vec& x, const Vec& z, const ComparisonConstants& k,
                         const EllipticityClass& cls, double eps, long long trials, Rng& rng);

struct F2AverageCheck {
  double lhs = 0.0;      // avg_B f2(coupled step); +inf if not representable
  double rhs = 0.0;      // gamma_medium C^2 f2(x,z); +inf if not representable
  double lhs_rel = 0.0;  // lhs / f2(x,z), always finite
  double rhs_rel = 0.0;  // gamma_medium C^2
  bool holds = false;    // lhs_rel >= rhs_rel, exact
  double rel_std_error = 0.0;
};

// Medium-distance lower bound with Q from medium_distance_coupling. Requires
// (1/2) sqrt(lambda) eps < |x-z| <= N sqrt(lambda) eps and distortion <= 3.
F2AverageCheck f2_average_lower_bound_check(const Vec& x, const Vec& z,
                                            const CoefficientField& field, double eps,
                                            const ComparisonConstants& k, long long samples,
                                            Rng& rng);

}  // namespace ellab
