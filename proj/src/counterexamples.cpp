#include "ellab/counterexamples.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ellab/kernels.hpp"

namespace ellab {

CouplingMap CouplingMap::linear(const Ellipsoid& e1, const Ellipsoid& e2, const OrthoMatrix& q) {
  double d1 = std::abs(e1.shape().det());
  double d2 = std::abs(e2.shape().det());
  if (std::abs(d1 - d2) > 1e-9 * std::max(d1, d2))
    throw std::invalid_argument("linear coupling map needs |det S1| == |det S2|");
  CouplingMap m;
  m.linear_ = true;
  m.m_ = e2.shape().mat() * q.mat() * e1.shape().mat().inverse();
  return m;
}

CouplingMap CouplingMap::custom(std::function<Vec(const Vec&)> phi) {
  CouplingMap m;
  m.phi_ = std::move(phi);
  return m;
}

Vec CouplingMap::apply(const Vec& y) const { return linear_ ? m_ * y : phi_(y); }

const Mat& CouplingMap::matrix() const {
  if (!linear_) throw std::logic_error("matrix() on a custom coupling map");
  return m_;
}

namespace {

// Wilson-Hilferty approximation of the chi-square 0.99 quantile.
double chi2_q99(int df) {
  double z = 2.3263478740408408;
  double t = 1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df));
  return df * t * t * t;
}

}  // namespace

bool measure_preservation_audit(const Ellipsoid& e1, const Ellipsoid& e2, const CouplingMap& phi,
                                long long samples, Rng& rng) {
  const int n = e1.dim();
  if (n != 2 && n != 3)
    throw std::invalid_argument("measure_preservation_audit supports n in {2,3}");
  // Equal-probability 8^n partition of the unit-ball preimage of E2: under
  // uniformity, r^n, the azimuth, and (n = 3) the polar cosine are all
  // uniform, so the product grid has equal cell probabilities.
  const int bpa = 8;
  const int total_bins = n == 2 ? bpa * bpa : bpa * bpa * bpa;
  std::vector<long long> counts(total_bins, 0);

  auto clampbin = [&](double t) { return std::min(bpa - 1, std::max(0, static_cast<int>(t * bpa))); };

  for (long long s = 0; s < samples; ++s) {
    Vec y = sample_uniform(e1, rng);
    Vec w = e2.shape_inv() * (phi.apply(y) - e2.center());
    double r = w.norm();
    if (r >= 1.0) return false;  // left E2: certainly not uniform on it
    int bin = clampbin(std::pow(r, n));
    double th = std::atan2(w[1], w[0]) / (2.0 * M_PI) + 0.5;
    if (n == 2) {
      bin = bin * bpa + clampbin(th);
    } else {
      double c = r > 0.0 ? w[2] / r : 0.0;
      bin = (bin * bpa + clampbin(0.5 * (c + 1.0))) * bpa + clampbin(th);
    }
    ++counts[bin];
  }

  double expected = static_cast<double>(samples) / total_bins;
  double chi2 = 0.0;
  for (long long c : counts) {
    double d = static_cast<double>(c) - expected;
    chi2 += d * d / expected;
  }
  return chi2 <= chi2_q99(total_bins - 1);
}

SplitEstimate projection_split(const Ellipsoid& e1, const Ellipsoid& e2, const CouplingMap& phi,
                               const Vec& direction, long long samples, Rng& rng) {
  if (samples < 100000)
    throw std::invalid_argument("projection_split: need at least 1e5 samples");
  const int n = e1.dim();
  Vec u = direction.normalized();

  SplitEstimate out;
  out.samples = samples;

  double spar = 0.0, spar2 = 0.0, sorth = 0.0, sorth2 = 0.0;
  if (phi.is_linear() && (n == 2 || n == 3)) {
    const Mat& L = phi.matrix();
    double lflat[9], uflat[3];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) lflat[i * n + j] = L(i, j);
    for (int i = 0; i < n; ++i) uflat[i] = u[i];
    const long long chunk = 1 << 16;
    std::vector<double> xs(chunk), ys(chunk), zs(chunk);
    long long done = 0;
    while (done < samples) {
      long long batch = std::min(chunk, samples - done);
      for (long long i = 0; i < batch; ++i) {
        Vec y = sample_uniform(e1, rng);
        xs[i] = y[0];
        ys[i] = y[1];
        if (n == 3) zs[i] = y[2];
      }
      kernels::SplitSums s =
          n == 2 ? kernels::projection_accumulate2(xs.data(), ys.data(), batch, lflat, uflat)
                 : kernels::projection_accumulate3(xs.data(), ys.data(), zs.data(), batch, lflat,
                                                   uflat);
      spar += s.par;
      spar2 += s.par2;
      sorth += s.orth;
      sorth2 += s.orth2;
      done += batch;
    }
  } else {
    if (!phi.is_linear()) {
      Rng audit_rng(rng.next());
      if (!measure_preservation_audit(e1, e2, phi, 100000, audit_rng))
        throw std::domain_error("projection_split: custom map failed the measure-preservation audit");
    }
    for (long long s = 0; s < samples; ++s) {
      Vec y = sample_uniform(e1, rng);
      Vec d = y - phi.apply(y);
      double p = u.dot(d);
      double par = p * p;
      double orth = d.norm2() - par;
      spar += par;
      spar2 += par * par;
      sorth += orth;
      sorth2 += orth * orth;
    }
  }

  double m = static_cast<double>(samples);
  out.parallel = spar / m;
  out.orthogonal = sorth / m;
  out.parallel_se = std::sqrt(std::max(0.0, spar2 / m - out.parallel * out.parallel) / m);
  out.orthogonal_se = std::sqrt(std::max(0.0, sorth2 / m - out.orthogonal * out.orthogonal) / m);
  return out;
}

double halfslab_volume_fraction(const Ellipsoid& e, int axis, double threshold) {
  const int n = e.dim();
  if (axis < 0 || axis >= n) throw std::invalid_argument("halfslab_volume_fraction: bad axis");
  if (threshold <= 0.0) return 1.0;
  // {|y_axis| >= t} pulled back to the unit ball is {|v . w| >= t} with
  // v = S^T e_axis, i.e. a symmetric pair of caps at height c = t / |v|.
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = e.shape()(axis, i);
  double c = threshold / v.norm();
  if (c >= 1.0) return 0.0;

  // fraction of the unit n-ball with |w_1| <= c, in closed form for n = 2, 3
  // and by Gauss-Legendre on the cross-section profile otherwise.
  double inner;
  if (n == 2) {
    inner = (2.0 / M_PI) * (c * std::sqrt(1.0 - c * c) + std::asin(c));
  } else if (n == 3) {
    inner = 1.5 * c - 0.5 * c * c * c;
  } else {
    const int m = 64;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < m; ++i) {
      double tc = c * (i + 0.5) / m;
      double td = (i + 0.5) / m;
      num += std::pow(1.0 - tc * tc, 0.5 * (n - 1)) * (c / m);
      den += std::pow(1.0 - td * td, 0.5 * (n - 1)) * (1.0 / m);
    }
    inner = num / den;
  }
  return 1.0 - inner;
}

namespace {

// All couplings are estimated over a shared sample set (common random
// numbers); each coupling's estimate is still unbiased.
CounterexampleReport run_sweep(const Ellipsoid& e1, const Ellipsoid& e2,
                               const std::vector<std::pair<std::string, OrthoMatrix>>& couplings,
                               long long samples, Rng& rng) {
  const int n = e1.dim();
  CounterexampleReport rep;
  rep.dim = n;
  rep.samples_per_coupling = samples;
  rep.volume = e1.volume();

  const std::size_t nc = couplings.size();
  std::vector<std::array<double, 9>> lmaps(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    Mat L = CouplingMap::linear(e1, e2, couplings[c].second).matrix();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) lmaps[c][i * n + j] = L(i, j);
  }
  double uflat[3] = {1.0, 0.0, 0.0};

  std::vector<kernels::SplitSums> sums(nc);
  const long long chunk = 1 << 16;
  std::vector<double> xs(chunk), ys(chunk), zs(chunk);
  long long done = 0;
  while (done < samples) {
    long long batch = std::min(chunk, samples - done);
    for (long long i = 0; i < batch; ++i) {
      Vec y = sample_uniform(e1, rng);
      xs[i] = y[0];
      ys[i] = y[1];
      if (n == 3) zs[i] = y[2];
    }
    for (std::size_t c = 0; c < nc; ++c) {
      kernels::SplitSums s =
          n == 2 ? kernels::projection_accumulate2(xs.data(), ys.data(), batch, lmaps[c].data(),
                                                   uflat)
                 : kernels::projection_accumulate3(xs.data(), ys.data(), zs.data(), batch,
                                                   lmaps[c].data(), uflat);
      sums[c].par += s.par;
      sums[c].par2 += s.par2;
      sums[c].orth += s.orth;
      sums[c].orth2 += s.orth2;
    }
    done += batch;
  }

  rep.all_violated = true;
  double m = static_cast<double>(samples);
  for (std::size_t c = 0; c < nc; ++c) {
    SweepRecord rec;
    rec.id = couplings[c].first;
    rec.parallel = sums[c].par / m;
    rec.orthogonal = sums[c].orth / m;
    rec.parallel_se =
        std::sqrt(std::max(0.0, sums[c].par2 / m - rec.parallel * rec.parallel) / m);
    rec.orthogonal_se =
        std::sqrt(std::max(0.0, sums[c].orth2 / m - rec.orthogonal * rec.orthogonal) / m);
    rec.violated = rec.parallel < rec.orthogonal;
    rep.all_violated = rep.all_violated && rec.violated;
    rep.couplings.push_back(std::move(rec));
  }
  return rep;
}

}  // namespace

CounterexampleReport counterexample_2d(long long samples, int coupling_grid, Rng& rng) {
  if (samples < 1000000) throw std::invalid_argument("counterexample_2d: need >= 1e6 samples");
  Ellipsoid e1(Vec{0.0, 0.0}, SymMatrix::of({{0.1, 0.0}, {0.0, 10.0}}));
  Ellipsoid e2(Vec{0.0, 0.0}, SymMatrix::identity(2));

  std::vector<std::pair<std::string, OrthoMatrix>> couplings;
  couplings.reserve(2 * coupling_grid);
  for (int cls = 0; cls < 2; ++cls) {
    for (int k = 0; k < coupling_grid; ++k) {
      double th = 2.0 * M_PI * k / coupling_grid;
      double c = std::cos(th), s = std::sin(th);
      Mat q = Mat::of({{c, -s}, {s, c}});
      if (cls == 1) {
        // reflection class: rotation composed with diag(1,-1)
        q(0, 1) = s;
        q(1, 1) = -c;
      }
      std::ostringstream id;
      id << (cls == 0 ? "rot" : "refl") << "@" << th;
      couplings.emplace_back(id.str(), OrthoMatrix::from(q));
    }
  }

  CounterexampleReport rep = run_sweep(e1, e2, couplings, samples, rng);
  rep.parallel_bound = 1.21;
  rep.orthogonal_floor = 16.0 * halfslab_volume_fraction(e1, 1, 5.0);
  return rep;
}

CounterexampleReport counterexample_3d(long long samples, int coupling_grid, Rng& rng) {
  if (samples < 1000000) throw std::invalid_argument("counterexample_3d: need >= 1e6 samples");
  Ellipsoid e1(Vec{0.0, 0.0, 0.0},
               SymMatrix::of({{1.0, 0.0, 0.0}, {0.0, 100.0, 0.0}, {0.0, 0.0, 1.0}}));
  Ellipsoid e2(Vec{0.0, 0.0, 0.0},
               SymMatrix::of({{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 100.0}}));

  std::vector<std::pair<std::string, OrthoMatrix>> couplings;
  for (int k = 0; k < coupling_grid; ++k) {
    std::ostringstream id;
    id << "haar#" << k;
    couplings.emplace_back(id.str(), random_orthogonal(3, rng));
  }
  // the 24 proper signed axis permutations
  int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (int p = 0; p < 6; ++p) {
    for (int signs = 0; signs < 8; ++signs) {
      Mat q(3);
      for (int i = 0; i < 3; ++i) q(i, perms[p][i]) = (signs & (1 << i)) ? -1.0 : 1.0;
      if (q.det() < 0.0) continue;
      std::ostringstream id;
      id << "perm#" << p << "s" << signs;
      couplings.emplace_back(id.str(), OrthoMatrix::from(q));
    }
  }

  CounterexampleReport rep = run_sweep(e1, e2, couplings, samples, rng);
  rep.parallel_bound = 4.0;
  rep.orthogonal_floor = 8.0;
  return rep;
}

}  // namespace ellab
