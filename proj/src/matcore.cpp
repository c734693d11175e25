#include "ellab/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace ellab {

namespace {

double offdiag_norm(const Mat& a) {
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i)
    for (int j = i + 1; j < a.dim(); ++j) s += 2.0 * a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

EigSym eig_sym(const SymMatrix& sym) {
  const int n = sym.dim();
  Mat a = sym.mat();
  Mat v = Mat::identity(n);

  const int max_sweeps = 100;
  const double scale = std::max(1.0, a.frobenius());
  bool converged = false;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    if (offdiag_norm(a) <= 1e-15 * scale) {
      converged = true;
      break;
    }
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = a(p, q);
        if (std::abs(apq) <= 1e-18 * scale) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        double theta = 0.5 * (a(q, q) - a(p, p)) / apq;
        double t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        if (theta < 0.0) t = -t;
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = t * c;
        double tau = s / (1.0 + c);
        double h = t * apq;

        a(p, p) -= h;
        a(q, q) += h;
        a(p, q) = a(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = a(p, k) = akp - s * (akq + akp * tau);
          a(k, q) = a(q, k) = akq + s * (akp - akq * tau);
        }
        for (int k = 0; k < n; ++k) {
          double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp - s * (vkq + vkp * tau);
          v(k, q) = vkq + s * (vkp - vkq * tau);
        }
      }
    }
  }
  if (!converged && offdiag_norm(a) > 1e-12 * scale)
    throw std::runtime_error("eig_sym: Jacobi iteration did not converge within 100 sweeps");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) < a(j, j); });

  EigSym out;
  out.eigenvalues = Vec(n);
  Mat r(n);
  for (int j = 0; j < n; ++j) {
    out.eigenvalues[j] = a(order[j], order[j]);
    for (int i = 0; i < n; ++i) r(i, j) = v(i, order[j]);
  }
  out.vectors = OrthoMatrix::from(r);
  return out;
}

namespace {

SymMatrix rebuild(const EigSym& e, const Vec& d) {
  const int n = d.dim();
  const Mat& r = e.vectors.mat();
  Mat m(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += r(i, k) * d[k] * r(j, k);
      m(i, j) = s;
      m(j, i) = s;
    }
  return SymMatrix::from(m);
}

}  // namespace

SymMatrix principal_sqrt(const SymMatrix& a) {
  EigSym e = eig_sym(a);
  const int n = a.dim();
  double wmax = std::max(1.0, std::abs(e.eigenvalues[n - 1]));
  Vec d(n);
  for (int i = 0; i < n; ++i) {
    double w = e.eigenvalues[i];
    if (w < -1e-12 * wmax)
      throw std::domain_error("principal_sqrt: matrix is not positive semidefinite");
    d[i] = std::sqrt(std::max(w, 0.0));
  }
  return rebuild(e, d);
}

SymMatrix principal_inv_sqrt(const SymMatrix& a) {
  EigSym e = eig_sym(a);
  const int n = a.dim();
  Vec d(n);
  for (int i = 0; i < n; ++i) {
    double w = e.eigenvalues[i];
    if (w <= 0.0)
      throw std::domain_error("principal_inv_sqrt: matrix is not positive definite");
    d[i] = 1.0 / std::sqrt(w);
  }
  return rebuild(e, d);
}

namespace {

// One-sided Jacobi SVD for small n. Returns U, singular values, V with
// M = U diag(s) V^T; zero singular directions get an orthonormal completion.
struct Svd {
  Mat u;
  Vec s;
  Mat v;
};

Svd one_sided_jacobi_svd(const Mat& m) {
  const int n = m.dim();
  Mat w = m;
  Mat v = Mat::identity(n);
  const double scale = std::max(1.0, m.frobenius());

  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (int k = 0; k < n; ++k) {
          app += w(k, p) * w(k, p);
          aqq += w(k, q) * w(k, q);
          apq += w(k, p) * w(k, q);
        }
        if (std::abs(apq) <= 1e-16 * scale * scale) continue;
        rotated = true;
        double zeta = (aqq - app) / (2.0 * apq);
        double t = 1.0 / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        if (zeta < 0.0) t = -t;
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = t * c;
        for (int k = 0; k < n; ++k) {
          double wp = w(k, p), wq = w(k, q);
          w(k, p) = c * wp - s * wq;
          w(k, q) = s * wp + c * wq;
          double vp = v(k, p), vq = v(k, q);
          v(k, p) = c * vp - s * vq;
          v(k, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  Svd out;
  out.s = Vec(n);
  out.v = v;
  Mat u(n);
  std::array<bool, kMaxDim> filled{};
  std::vector<int> small;
  for (int j = 0; j < n; ++j) {
    double sj = 0.0;
    for (int k = 0; k < n; ++k) sj += w(k, j) * w(k, j);
    sj = std::sqrt(sj);
    out.s[j] = sj;
    if (sj > 1e-14 * scale) {
      for (int k = 0; k < n; ++k) u(k, j) = w(k, j) / sj;
      filled[j] = true;
    } else {
      small.push_back(j);
    }
  }
  // Complete the basis for rank-deficient columns: Gram-Schmidt a coordinate
  // vector against everything filled so far.
  for (int j : small) {
    for (int cand = 0; cand < n; ++cand) {
      Vec e = Vec::unit(n, cand);
      for (int c = 0; c < n; ++c) {
        if (!filled[c]) continue;
        double proj = 0.0;
        for (int k = 0; k < n; ++k) proj += u(k, c) * e[k];
        for (int k = 0; k < n; ++k) e[k] -= proj * u(k, c);
      }
      double nn = e.norm();
      if (nn > 1e-6) {
        for (int k = 0; k < n; ++k) u(k, j) = e[k] / nn;
        filled[j] = true;
        break;
      }
    }
  }
  out.u = u;
  return out;
}

}  // namespace

PolarResult polar_orthogonal(const Mat& m) {
  const int n = m.dim();
  double d = m.det();
  if (std::abs(d) > 1e-12) {
    Mat mtm = m.transpose() * m;
    SymMatrix gram = SymMatrix::from(mtm, 1e-9);
    EigSym e = eig_sym(gram);
    if (e.eigenvalues[0] > 0.0) {
      Vec dinv(n);
      for (int i = 0; i < n; ++i) dinv[i] = 1.0 / std::sqrt(e.eigenvalues[i]);
      Mat q = rebuild(e, dinv).mat() * m.transpose();
      if (q.orthogonality_defect() <= 1e-10) {
        PolarResult out;
        out.q0 = OrthoMatrix::from(q);
        out.value = (m * q).trace();
        return out;
      }
    }
  }

  // Singular or ill-conditioned: SVD route, Q0 = V U^T.
  Svd svd = one_sided_jacobi_svd(m);
  Mat q = svd.v * svd.u.transpose();
  if (q.orthogonality_defect() > 1e-10)
    throw std::domain_error("polar_orthogonal: SVD fallback failed to produce an orthogonal factor");
  PolarResult out;
  out.q0 = OrthoMatrix::from(q);
  out.value = (m * q).trace();
  return out;
}

OrthoMatrix random_orthogonal(int n, Rng& rng) {
  detail::check_dim(n);
  // Householder QR of a Gaussian matrix; columns re-signed by diag(R) so the
  // result is Haar on O(n) (Mezzadri's recipe).
  Mat g(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.gaussian();

  Mat q = Mat::identity(n);
  Mat r = g;
  for (int k = 0; k < n; ++k) {
    double norm = 0.0;
    for (int i = k; i < n; ++i) norm += r(i, k) * r(i, k);
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    double alpha = r(k, k) > 0.0 ? -norm : norm;
    Vec vh(n);
    for (int i = k; i < n; ++i) vh[i] = r(i, k);
    vh[k] -= alpha;
    double vn2 = vh.norm2();
    if (vn2 == 0.0) continue;
    // r <- H r, q <- q H with H = I - 2 vv^T/|v|^2
    for (int j = 0; j < n; ++j) {
      double dot = 0.0;
      for (int i = k; i < n; ++i) dot += vh[i] * r(i, j);
      double f = 2.0 * dot / vn2;
      for (int i = k; i < n; ++i) r(i, j) -= f * vh[i];
    }
    for (int i = 0; i < n; ++i) {
      double dot = 0.0;
      for (int j = k; j < n; ++j) dot += q(i, j) * vh[j];
      double f = 2.0 * dot / vn2;
      for (int j = k; j < n; ++j) q(i, j) -= f * vh[j];
    }
  }
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0.0)
      for (int i = 0; i < n; ++i) q(i, j) = -q(i, j);
  }
  return OrthoMatrix::from(q);
}

OrthoMatrix random_orthogonal(int n, std::uint64_t seed) {
  Rng rng(seed);
  return random_orthogonal(n, rng);
}

bool in_class(const SymMatrix& a, const EllipticityClass& cls) {
  if (a.dim() != cls.n) throw std::invalid_argument("in_class: dimension mismatch");
  EigSym e = eig_sym(a);
  return e.eigenvalues[0] >= cls.lambda - 1e-12 && e.eigenvalues[a.dim() - 1] <= cls.Lambda + 1e-12;
}

SymMatrix random_in_class(const EllipticityClass& cls, Rng& rng) {
  OrthoMatrix r = random_orthogonal(cls.n, rng);
  Vec d(cls.n);
  for (int i = 0; i < cls.n; ++i) d[i] = rng.uniform(cls.lambda, cls.Lambda);
  Mat m = r.mat() * Mat::diag(d) * r.mat().transpose();
  return SymMatrix::from(m, 1e-9);
}

}  // namespace ellab
