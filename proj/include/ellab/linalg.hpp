#pragma once

// Small dense vectors and square matrices, stack-allocated, for dimensions
// 2..8. Everything in this project lives in that range, so there is no heap
// traffic and no external linear algebra dependency.

#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>

namespace ellab {

inline constexpr int kMaxDim = 8;

namespace detail {
inline void check_dim(int n) {
  if (n < 1 || n > kMaxDim)
    throw std::invalid_argument("dimension must be in [1," + std::to_string(kMaxDim) +
                                "], got " + std::to_string(n));
}
}  // namespace detail

class Vec {
 public:
  Vec() : n_(0) { a_.fill(0.0); }
  explicit Vec(int n) : n_(n) {
    detail::check_dim(n);
    a_.fill(0.0);
  }
  Vec(std::initializer_list<double> xs) : n_(static_cast<int>(xs.size())) {
    detail::check_dim(n_);
    a_.fill(0.0);
    int i = 0;
    for (double x : xs) a_[i++] = x;
  }

  int dim() const { return n_; }
  double& operator[](int i) { return a_[i]; }
  double operator[](int i) const { return a_[i]; }
  const double* data() const { return a_.data(); }
  double* data() { return a_.data(); }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < n_; ++i) a_[i] += o.a_[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < n_; ++i) a_[i] -= o.a_[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < n_; ++i) a_[i] *= s;
    return *this;
  }

  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(double s, Vec a) { return a *= s; }
  friend Vec operator*(Vec a, double s) { return a *= s; }
  friend Vec operator-(Vec a) { return a *= -1.0; }

  double dot(const Vec& o) const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += a_[i] * o.a_[i];
    return s;
  }
  double norm2() const { return dot(*this); }
  double norm() const { return std::sqrt(norm2()); }
  Vec normalized() const {
    double nn = norm();
    if (nn == 0.0) throw std::domain_error("cannot normalize the zero vector");
    Vec v = *this;
    v *= 1.0 / nn;
    return v;
  }

  static Vec unit(int n, int axis) {
    Vec e(n);
    e[axis] = 1.0;
    return e;
  }

 private:
  int n_;
  std::array<double, kMaxDim> a_;
};

// Row-major square matrix.
class Mat {
 public:
  Mat() : n_(0) { a_.fill(0.0); }
  explicit Mat(int n) : n_(n) {
    detail::check_dim(n);
    a_.fill(0.0);
  }

  static Mat identity(int n) {
    Mat m(n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Mat diag(const Vec& d) {
    Mat m(d.dim());
    for (int i = 0; i < d.dim(); ++i) m(i, i) = d[i];
    return m;
  }
  // rows: {{a,b},{c,d}}
  static Mat of(std::initializer_list<std::initializer_list<double>> rows) {
    Mat m(static_cast<int>(rows.size()));
    int i = 0;
    for (const auto& r : rows) {
      if (static_cast<int>(r.size()) != m.n_)
        throw std::invalid_argument("matrix rows must all have the declared length");
      int j = 0;
      for (double x : r) m(i, j++) = x;
      ++i;
    }
    return m;
  }

  int dim() const { return n_; }
  double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * n_ + j]; }
  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * n_ + j]; }
  const double* data() const { return a_.data(); }

  Mat transpose() const {
    Mat t(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  friend Mat operator*(const Mat& a, const Mat& b) {
    Mat c(a.n_);
    for (int i = 0; i < a.n_; ++i)
      for (int k = 0; k < a.n_; ++k) {
        double aik = a(i, k);
        for (int j = 0; j < a.n_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }
  friend Vec operator*(const Mat& a, const Vec& v) {
    Vec w(a.n_);
    for (int i = 0; i < a.n_; ++i) {
      double s = 0.0;
      for (int j = 0; j < a.n_; ++j) s += a(i, j) * v[j];
      w[i] = s;
    }
    return w;
  }
  friend Mat operator+(const Mat& a, const Mat& b) {
    Mat c(a.n_);
    for (int i = 0; i < a.n_; ++i)
      for (int j = 0; j < a.n_; ++j) c(i, j) = a(i, j) + b(i, j);
    return c;
  }
  friend Mat operator-(const Mat& a, const Mat& b) {
    Mat c(a.n_);
    for (int i = 0; i < a.n_; ++i)
      for (int j = 0; j < a.n_; ++j) c(i, j) = a(i, j) - b(i, j);
    return c;
  }
  friend Mat operator*(double s, Mat a) {
    for (int i = 0; i < a.n_; ++i)
      for (int j = 0; j < a.n_; ++j) a(i, j) *= s;
    return a;
  }

  double trace() const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += (*this)(i, i);
    return s;
  }
  double frobenius() const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) s += (*this)(i, j) * (*this)(i, j);
    return std::sqrt(s);
  }
  double max_abs() const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) s = std::max(s, std::abs((*this)(i, j)));
    return s;
  }

  // LU with partial pivoting on a copy.
  double det() const {
    Mat lu = *this;
    double d = 1.0;
    for (int k = 0; k < n_; ++k) {
      int piv = k;
      for (int i = k + 1; i < n_; ++i)
        if (std::abs(lu(i, k)) > std::abs(lu(piv, k))) piv = i;
      if (lu(piv, k) == 0.0) return 0.0;
      if (piv != k) {
        for (int j = 0; j < n_; ++j) std::swap(lu(piv, j), lu(k, j));
        d = -d;
      }
      d *= lu(k, k);
      for (int i = k + 1; i < n_; ++i) {
        double f = lu(i, k) / lu(k, k);
        for (int j = k; j < n_; ++j) lu(i, j) -= f * lu(k, j);
      }
    }
    return d;
  }

  Mat inverse() const {
    Mat a = *this;
    Mat inv = Mat::identity(n_);
    for (int k = 0; k < n_; ++k) {
      int piv = k;
      for (int i = k + 1; i < n_; ++i)
        if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
      if (a(piv, k) == 0.0) throw std::domain_error("singular matrix in inverse()");
      if (piv != k)
        for (int j = 0; j < n_; ++j) {
          std::swap(a(piv, j), a(k, j));
          std::swap(inv(piv, j), inv(k, j));
        }
      double f = 1.0 / a(k, k);
      for (int j = 0; j < n_; ++j) {
        a(k, j) *= f;
        inv(k, j) *= f;
      }
      for (int i = 0; i < n_; ++i) {
        if (i == k) continue;
        double g = a(i, k);
        if (g == 0.0) continue;
        for (int j = 0; j < n_; ++j) {
          a(i, j) -= g * a(k, j);
          inv(i, j) -= g * inv(k, j);
        }
      }
    }
    return inv;
  }

  double orthogonality_defect() const {
    Mat g = transpose() * (*this);
    for (int i = 0; i < n_; ++i) g(i, i) -= 1.0;
    return g.frobenius();
  }

 private:
  int n_;
  std::array<double, kMaxDim * kMaxDim> a_;
};

// Symmetric matrix: entries are mirrored exactly at construction.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int n) : m_(n) {}

  // Accepts a matrix whose asymmetry is below `tol` (absolute, relative to the
  // largest entry) and stores the exactly symmetrized copy.
  static SymMatrix from(const Mat& m, double tol = 1e-9) {
    double scale = std::max(1.0, m.max_abs());
    SymMatrix s;
    s.m_ = m;
    for (int i = 0; i < m.dim(); ++i)
      for (int j = i + 1; j < m.dim(); ++j) {
        if (std::abs(m(i, j) - m(j, i)) > tol * scale)
          throw std::invalid_argument("matrix is not symmetric within tolerance");
        double v = 0.5 * (m(i, j) + m(j, i));
        s.m_(i, j) = v;
        s.m_(j, i) = v;
      }
    return s;
  }
  static SymMatrix of(std::initializer_list<std::initializer_list<double>> rows) {
    return from(Mat::of(rows), 1e-12);
  }
  static SymMatrix identity(int n) { return from(Mat::identity(n)); }
  static SymMatrix diag(const Vec& d) { return from(Mat::diag(d)); }

  int dim() const { return m_.dim(); }
  double operator()(int i, int j) const { return m_(i, j); }
  const Mat& mat() const { return m_; }
  double trace() const { return m_.trace(); }
  double det() const { return m_.det(); }

  void set(int i, int j, double v) {
    m_(i, j) = v;
    m_(j, i) = v;
  }

 private:
  Mat m_;
};

// Orthogonal matrix: ||Q^T Q - I||_F <= 1e-10 enforced at construction.
class OrthoMatrix {
 public:
  OrthoMatrix() = default;

  static OrthoMatrix from(const Mat& m, double tol = 1e-10) {
    if (m.orthogonality_defect() > tol)
      throw std::invalid_argument("matrix is not orthogonal within 1e-10");
    OrthoMatrix q;
    q.m_ = m;
    return q;
  }
  static OrthoMatrix identity(int n) { return from(Mat::identity(n)); }

  int dim() const { return m_.dim(); }
  double operator()(int i, int j) const { return m_(i, j); }
  const Mat& mat() const { return m_; }
  OrthoMatrix transpose() const { return from(m_.transpose()); }

  friend Vec operator*(const OrthoMatrix& q, const Vec& v) { return q.m_ * v; }

 private:
  Mat m_;
};

}  // namespace ellab
