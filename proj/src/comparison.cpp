#include "ellab/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ellab/kernels.hpp"

namespace ellab {

LedgerCheck check_constants(const ComparisonConstants& k, const EllipticityClass& cls) {
  LedgerCheck out;
  const double a = k.alpha;
  const double L = cls.Lambda;
  out.c1 = k.C > (2.0 / std::pow(k.r, a)) * k.sup_u;
  double t = tau(cls, a);
  out.c2 = t > 0.0 &&
           k.C > (1.0 / t) * (16.0 * k.C_tilde * L * std::pow(k.r, 2.0 - a) +
                              4.0 * std::pow(k.r, 2.0 - a) + 1.0);
  out.c3 = k.C > 12.0 * k.C_tilde * k.r;
  double la2 = std::pow(L, 0.5 * a);
  out.c4_medium = k.gamma_medium * k.C * k.C - 3.0 * k.C * la2 - 2.0 > 0.0;
  out.c4_short = k.gamma_short * k.C * k.C - 3.0 * k.C * la2 - 2.0 > 0.0;
  out.n1 = static_cast<double>(k.N) >= 4.0 * std::sqrt(3.0);
  out.n2 = static_cast<double>(k.N) >= std::sqrt(128.0 * 3.0) * L * k.C;
  return out;
}

ComparisonConstants build_constants(const EllipticityClass& cls, double alpha, double r,
                                    double sup_u) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
  if (!(r > 0.0 && sup_u > 0.0)) throw std::invalid_argument("r and sup_u must be positive");
  if (cls.n < 2) throw std::invalid_argument("constants ledger needs n >= 2");

  double t = tau(cls, alpha);
  if (!(t > 0.0)) {
    double thr = thresholds(cls, alpha).optimal;
    throw DistortionError("distortion " + std::to_string(cls.distortion()) +
                              " too large for alpha = " + std::to_string(alpha) +
                              " (threshold " + std::to_string(thr) + ")",
                          thr);
  }

  ComparisonConstants k;
  k.alpha = alpha;
  k.r = r;
  k.sup_u = sup_u;
  k.C_tilde = (2.0 / (3.0 * r * r)) * sup_u;
  k.gamma_short = std::pow(0.25 * std::sqrt(cls.lambda / cls.Lambda), cls.n);
  k.gamma_medium = std::pow(3.0, -0.5 * cls.n) * std::pow(1.0 / 300.0, cls.n);

  const double L = cls.Lambda;
  double c1 = (2.0 / std::pow(r, alpha)) * sup_u;
  double c2 = (1.0 / t) * (16.0 * k.C_tilde * L * std::pow(r, 2.0 - alpha) +
                           4.0 * std::pow(r, 2.0 - alpha) + 1.0);
  double c3 = 12.0 * k.C_tilde * r;
  auto c4_root = [&](double gamma) {
    double b = 3.0 * std::pow(L, 0.5 * alpha);
    return (b + std::sqrt(b * b + 8.0 * gamma)) / (2.0 * gamma);
  };
  double c4 = std::max(c4_root(k.gamma_medium), c4_root(k.gamma_short));
  k.C = 1.01 * std::max({c1, c2, c3, c4, 1.0});

  double n2 = std::sqrt(128.0 * 3.0) * L * k.C;
  k.N = static_cast<long long>(std::ceil(std::max(4.0 * std::sqrt(3.0), n2)));
  return k;
}

double f1(const Vec& x, const Vec& z, const ComparisonConstants& k) {
  return k.C * std::pow((x - z).norm(), k.alpha) + k.C_tilde * (x + z).norm2();
}

AnnulusIndex annulus_of(double separation, double eps, double lambda, long long N) {
  double ratio = separation / (std::sqrt(lambda) * eps);
  AnnulusIndex out;
  if (ratio > static_cast<double>(N)) {
    out.zero = true;
    return out;
  }
  out.index = static_cast<long long>(std::ceil(2.0 * ratio));
  if (out.index < 0) out.index = 0;
  return out;
}

namespace {

// C^m eps^alpha with graceful overflow to +inf. The factors can overflow or
// underflow individually while the product is representable, so extreme
// exponents go through a single exp.
double f2_from_exponent(long long m, double eps, const ComparisonConstants& k) {
  double lc = static_cast<double>(m) * std::log(k.C);
  double le = k.alpha * std::log(eps);
  if (lc + le > 709.0) return std::numeric_limits<double>::infinity();
  if (std::abs(lc) > 700.0 || std::abs(le) > 700.0) return std::exp(lc + le);
  return std::pow(k.C, static_cast<double>(m)) * std::pow(eps, k.alpha);
}

}  // namespace

std::optional<long long> f2_exponent(const Vec& x, const Vec& z, double eps,
                                     const EllipticityClass& cls, const ComparisonConstants& k) {
  AnnulusIndex ai = annulus_of((x - z).norm(), eps, cls.lambda, k.N);
  if (ai.zero) return std::nullopt;
  return 2 * (2 * k.N - ai.index);
}

double f2(const Vec& x, const Vec& z, double eps, const EllipticityClass& cls,
          const ComparisonConstants& k) {
  auto m = f2_exponent(x, z, eps, cls, k);
  if (!m) return 0.0;
  return f2_from_exponent(*m, eps, k);
}

namespace {

// Stable pair sum |d+u|^alpha + |d-u|^alpha - 2|d|^alpha, factored as
// |d|^alpha (expm1(a log1p(dp)) + expm1(a log1p(dm))). The deltas are formed
// without cancellation so the result is accurate at the eps^2 scale even when
// |u| / |d| ~ 1e-8.
double holder_pair_increment(const Vec& d, const Vec& u, double alpha, double dist_alpha) {
  double dn2 = d.norm2();
  double dn = std::sqrt(dn2);
  double un2 = u.norm2();
  double cross = 2.0 * d.dot(u);
  double np = std::sqrt(dn2 + cross + un2);   // |d+u|
  double nm = std::sqrt(dn2 - cross + un2);   // |d-u|
  double dp = (cross + un2) / ((np + dn) * dn);
  double dm = (-cross + un2) / ((nm + dn) * dn);
  return dist_alpha * (std::expm1(alpha * std::log1p(dp)) + std::expm1(alpha * std::log1p(dm)));
}

struct F1StepAverage {
  double value;  // avg_B [ f1(x + eps S1 y, z + eps S2 Q y) - f1(x,z) ]
};

F1StepAverage average_f1_increment(const Vec& x, const Vec& z, const Mat& s1, const Mat& s2q,
                                   double eps, const ComparisonConstants& k, int quad_degree) {
  const int n = x.dim();
  BallRule rule = ball_quadrature(n, quad_degree);
  Vec d = x - z;
  double dist_alpha = std::pow(d.norm(), k.alpha);
  Mat udiff(n), usum(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      udiff(i, j) = eps * (s1(i, j) - s2q(i, j));
      usum(i, j) = eps * (s1(i, j) + s2q(i, j));
    }

  double acc = 0.0;
  const int m = static_cast<int>(rule.nodes.size());
  for (int i = 0; i < m; ++i) {
    int ai = rule.antipode[i];
    if (ai < i) continue;  // canonical representative only
    const Vec& y = rule.nodes[i];
    Vec u = udiff * y;
    Vec p = usum * y;
    double pair;
    if (ai == i) {
      pair = 0.0;  // a rule node at the origin contributes nothing
    } else {
      // Holder part paired with its antipode; the |x+z|^2 part reduces to
      // 2 C~ |p|^2 exactly (odd terms cancel), untouched by cancellation.
      pair = k.C * holder_pair_increment(d, u, k.alpha, dist_alpha) + 2.0 * k.C_tilde * p.norm2();
    }
    acc += rule.weights[i] * pair;
  }
  return {acc};
}

// Upper bound on the spectral norm.
double opnorm_bound(const Mat& m) { return m.frobenius(); }

struct F2StepAverage {
  double mean_rel = 0.0;     // avg of C^{2(j_ref - i(y))}, with f2 = 0 terms as 0
  double std_error = 0.0;    // of the mean, same units
  bool exact_zero = false;   // certified: no sample can reach the f2 support
};

// Monte Carlo average of f2 over the coupled step, in units of
// eps^alpha C^{2(2N - j_ref)}.
F2StepAverage average_f2_relative(const Vec& d, const Mat& step_diff, double eps,
                                  const EllipticityClass& cls, const ComparisonConstants& k,
                                  long long j_ref, long long samples, std::uint64_t seed) {
  F2StepAverage out;
  const int n = d.dim();
  double dist = d.norm();
  double sqrt_lambda_eps = std::sqrt(cls.lambda) * eps;
  double reach = opnorm_bound(step_diff);
  if ((dist - reach) / sqrt_lambda_eps > static_cast<double>(k.N)) {
    out.exact_zero = true;
    return out;
  }
  if (samples <= 0)
    throw std::invalid_argument("annular average: the coupled step reaches the f2 support "
                                "but no Monte Carlo samples were budgeted");

  Rng rng(seed);
  const long long chunk = 1 << 16;
  std::vector<double> xs(chunk), ys(chunk), zs(chunk), radii(chunk);
  double bflat[9];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) bflat[i * n + j] = step_diff(i, j);
  double dflat[3] = {d[0], d[1], n > 2 ? d[2] : 0.0};

  double sum = 0.0, sumsq = 0.0;
  long long done = 0;
  while (done < samples) {
    long long batch = std::min(chunk, samples - done);
    for (long long i = 0; i < batch; ++i) {
      Vec y = ball_point(n, rng);
      xs[i] = y[0];
      ys[i] = y[1];
      if (n > 2) zs[i] = y[2];
    }
    if (n == 2)
      kernels::coupled_radii2(xs.data(), ys.data(), batch, bflat, dflat, radii.data());
    else
      kernels::coupled_radii3(xs.data(), ys.data(), zs.data(), batch, bflat, dflat, radii.data());
    for (long long i = 0; i < batch; ++i) {
      AnnulusIndex ai = annulus_of(radii[i], eps, cls.lambda, k.N);
      double v = 0.0;
      if (!ai.zero) v = std::pow(k.C, 2.0 * static_cast<double>(j_ref - ai.index));
      sum += v;
      sumsq += v * v;
    }
    done += batch;
  }
  double mean = sum / static_cast<double>(samples);
  double var = std::max(0.0, sumsq / static_cast<double>(samples) - mean * mean);
  out.mean_rel = mean;
  out.std_error = std::sqrt(var / static_cast<double>(samples));
  return out;
}

}  // namespace

OrthoMatrix coupling_for_pair(const Vec& x, const Vec& z, const CoefficientField& field,
                              double alpha) {
  SymMatrix a1 = field.evaluate(x);
  SymMatrix a2 = field.evaluate(z);
  Vec dir = (x - z).normalized();
  // The annular term vanishes beyond the ledger-dependent cutoff, where the
  // optimal coupling drives the margin; inside it the verifiers switch to the
  // nu-reflecting coupling themselves.
  WeightMatrix w(x.dim(), alpha, dir);
  return optimal_coupling(a1, a2, w).q;
}

VerifyResult verify_key_inequality(const Vec& x, const Vec& z, const CoefficientField& field,
                                   const OrthoMatrix& q, double eps, const ComparisonConstants& k,
                                   const IntegratorSpec& spec, double eta_override) {
  const EllipticityClass& cls = field.cls();
  const int n = x.dim();
  if (n != cls.n || z.dim() != n) throw std::invalid_argument("verify: dimension mismatch");
  Vec d = x - z;
  double dist = d.norm();
  double sqrt_lambda_eps = std::sqrt(cls.lambda) * eps;
  if (!(dist > 0.5 * sqrt_lambda_eps))
    throw std::invalid_argument("verify: requires |x-z| > (1/2) sqrt(lambda) eps");
  if (x.norm() > k.r || z.norm() > k.r)
    throw std::invalid_argument("verify: x and z must lie in B_r");

  double eta = std::isnan(eta_override) ? k.effective_eta(eps) : eta_override;

  SymMatrix a1 = field.evaluate(x);
  SymMatrix a2 = field.evaluate(z);
  Mat s1 = principal_sqrt(a1).mat();
  Mat s2q = principal_sqrt(a2).mat() * q.mat();

  F1StepAverage f1avg = average_f1_increment(x, z, s1, s2q, eps, k, spec.quad_degree);

  Mat step_diff(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) step_diff(i, j) = eps * (s1(i, j) - s2q(i, j));

  VerifyResult out;
  AnnulusIndex base = annulus_of(dist, eps, cls.lambda, k.N);

  if (base.zero) {
    out.branch = VerifyBranch::large_distance;
    // f2(x,z) = 0; margin = -avg df1 + avg f2(step) - eta.
    F2StepAverage f2avg = average_f2_relative(d, step_diff, eps, cls, k, /*j_ref=*/2 * k.N,
                                              spec.mc_samples, spec.seed);
    // j_ref = 2N makes the relative unit eps^alpha C^0 = eps^alpha.
    double f2_abs = f2avg.exact_zero ? 0.0 : f2avg.mean_rel * std::pow(eps, k.alpha);
    double f2_se = f2avg.exact_zero ? 0.0 : f2avg.std_error * std::pow(eps, k.alpha);
    out.margin = -f1avg.value + f2_abs - eta;
    out.margin_rel = out.margin / (eps * eps);
    out.positive = out.margin > 0.0;
    out.conclusive = f2avg.exact_zero || std::abs(out.margin) > 3.0 * f2_se;
    out.mc_rel_std_error = f2_se / (eps * eps);
  } else {
    out.branch = VerifyBranch::medium_distance;
    long long j = base.index;
    F2StepAverage f2avg =
        average_f2_relative(d, step_diff, eps, cls, k, j, spec.mc_samples, spec.seed);
    double f2xz = f2_from_exponent(2 * (2 * k.N - j), eps, k);
    // margin / f2(x,z) = (-avg df1 - eta)/f2(x,z) + (avg C^{2(j-i)} - 1)
    double f1_part = std::isinf(f2xz) ? 0.0 : (-f1avg.value - eta) / f2xz;
    out.margin_rel = f1_part + (f2avg.mean_rel - 1.0);
    out.margin = std::isinf(f2xz) ? (out.margin_rel > 0.0
                                         ? std::numeric_limits<double>::infinity()
                                         : -std::numeric_limits<double>::infinity())
                                  : out.margin_rel * f2xz;
    out.positive = out.margin_rel > 0.0;
    out.mc_rel_std_error = f2avg.std_error;
    out.conclusive = std::abs(out.margin_rel) > 3.0 * f2avg.std_error;
  }
  return out;
}

bool f1_step_bound_check(const Vec& x, const Vec& z, const ComparisonConstants& k,
                         const EllipticityClass& cls, double eps, long long trials, Rng& rng) {
  double step = std::sqrt(cls.Lambda) * eps;
  if (!(step < std::min(1.0, k.r)))
    throw std::invalid_argument("f1_step_bound_check: requires sqrt(Lambda) eps < min(1, r)");
  const int n = x.dim();
  double bound = 3.0 * k.C * std::pow(cls.Lambda, 0.5 * k.alpha) * std::pow(eps, k.alpha);
  double base = f1(x, z, k);
  for (long long t = 0; t < trials; ++t) {
    Vec hx = ball_point(n, rng) * step;
    Vec hz = ball_point(n, rng) * step;
    if (f1(x + hx, z + hz, k) > base + bound) return false;
  }
  return true;
}

F2AverageCheck f2_average_lower_bound_check(const Vec& x, const Vec& z,
                                            const CoefficientField& field, double eps,
                                            const ComparisonConstants& k, long long samples,
                                            Rng& rng) {
  const EllipticityClass& cls = field.cls();
  const int n = x.dim();
  Vec d = x - z;
  double dist = d.norm();
  double sqrt_lambda_eps = std::sqrt(cls.lambda) * eps;
  if (!(dist > 0.5 * sqrt_lambda_eps && dist <= static_cast<double>(k.N) * sqrt_lambda_eps))
    throw std::domain_error("f2_average_lower_bound_check: pair is not at medium distance");
  if (cls.distortion() > 3.0 + 1e-12)
    throw std::domain_error("f2_average_lower_bound_check: requires distortion <= 3");

  SymMatrix a1 = field.evaluate(x);
  SymMatrix a2 = field.evaluate(z);
  OrthoMatrix q = medium_distance_coupling(a1, a2, d.normalized());
  Mat s1 = principal_sqrt(a1).mat();
  Mat s2q = principal_sqrt(a2).mat() * q.mat();
  Mat step_diff(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) step_diff(i, j) = eps * (s1(i, j) - s2q(i, j));

  long long j = annulus_of(dist, eps, cls.lambda, k.N).index;
  std::uint64_t seed = rng.next();
  F2StepAverage avg = average_f2_relative(d, step_diff, eps, cls, k, j, samples, seed);

  F2AverageCheck out;
  out.lhs_rel = avg.mean_rel;
  out.rhs_rel = k.gamma_medium * k.C * k.C;
  out.holds = out.lhs_rel >= out.rhs_rel;
  out.rel_std_error = avg.std_error;
  double f2xz = f2_from_exponent(2 * (2 * k.N - j), eps, k);
  out.lhs = out.lhs_rel * f2xz;
  out.rhs = out.rhs_rel * f2xz;
  return out;
}

}  // namespace ellab
