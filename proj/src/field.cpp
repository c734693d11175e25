#include "ellab/field.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace ellab {

double unit_ball_volume(int n) {
  // pi^{n/2} / Gamma(n/2 + 1)
  return std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

Ellipsoid::Ellipsoid(const Vec& center, const SymMatrix& shape)
    : center_(center), shape_(shape) {
  if (center.dim() != shape.dim())
    throw std::invalid_argument("ellipsoid center/shape dimension mismatch");
  EigSym e = eig_sym(shape);
  if (e.eigenvalues[0] <= 0.0)
    throw std::invalid_argument("ellipsoid shape matrix must be positive definite");
  shape_inv_ = shape.mat().inverse();
  det_ = shape.det();
}

Vec sample_uniform(const Ellipsoid& e, Rng& rng) {
  return e.center() + e.shape().mat() * ball_point(e.dim(), rng);
}

OverlapEstimate overlap_fraction(const Ellipsoid& e1, const Ellipsoid& e2,
                                 long long samples, Rng& rng) {
  if (samples < 10000)
    throw std::invalid_argument("overlap_fraction: need at least 1e4 samples");
  long long hits = 0;
  for (long long i = 0; i < samples; ++i)
    if (e2.contains(sample_uniform(e1, rng))) ++hits;
  OverlapEstimate out;
  out.samples = samples;
  out.fraction = static_cast<double>(hits) / static_cast<double>(samples);
  out.std_error = std::sqrt(out.fraction * (1.0 - out.fraction) / static_cast<double>(samples));
  return out;
}

namespace {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration.
void gauss_legendre(int m, std::vector<double>& x, std::vector<double>& w) {
  x.assign(m, 0.0);
  w.assign(m, 0.0);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (m + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < m; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = m * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[m - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[m - 1 - i] = w[i];
  }
}

}  // namespace

BallRule ball_quadrature(int n, int degree) {
  if (n != 2 && n != 3)
    throw std::invalid_argument("ball_quadrature supports n in {2,3}; use qmc_ball_points beyond");
  if (degree < 1) throw std::invalid_argument("ball_quadrature: degree must be >= 1");

  // Both product rules are antipodally symmetric by construction (even
  // azimuth counts, symmetric Gauss-Legendre polar nodes), so the pairing is
  // pure index arithmetic.
  BallRule rule;
  if (n == 2) {
    // Gauss-Legendre in radius against the Jacobian r, uniform angles.
    int mr = std::max(2, (degree + 3) / 2);
    int mt = std::max(8, 2 * ((degree + 2) / 2 + 1));
    std::vector<double> gx, gw;
    gauss_legendre(mr, gx, gw);
    double wsum = 0.0;
    for (int k = 0; k < mr; ++k) {
      double r = 0.5 * (gx[k] + 1.0);
      double wr = 0.5 * gw[k] * r;
      for (int j = 0; j < mt; ++j) {
        double th = 2.0 * M_PI * j / mt;
        rule.nodes.push_back(Vec{r * std::cos(th), r * std::sin(th)});
        rule.weights.push_back(wr);
        rule.antipode.push_back(k * mt + (j + mt / 2) % mt);
        wsum += wr;
      }
    }
    for (auto& w : rule.weights) w /= wsum;
  } else {
    int mr = std::max(2, (degree + 4) / 2);
    int mz = std::max(2, (degree + 2) / 2);
    int mp = std::max(8, 2 * ((degree + 2) / 2 + 1));
    std::vector<double> rx, rw, zx, zw;
    gauss_legendre(mr, rx, rw);
    gauss_legendre(mz, zx, zw);
    double wsum = 0.0;
    for (int k = 0; k < mr; ++k) {
      double r = 0.5 * (rx[k] + 1.0);
      double wr = 0.5 * rw[k] * r * r;
      for (int l = 0; l < mz; ++l) {
        double z = zx[l];
        double rho = r * std::sqrt(std::max(0.0, 1.0 - z * z));
        for (int j = 0; j < mp; ++j) {
          double ph = 2.0 * M_PI * j / mp;
          rule.nodes.push_back(Vec{rho * std::cos(ph), rho * std::sin(ph), r * z});
          rule.weights.push_back(wr * zw[l]);
          rule.antipode.push_back((k * mz + (mz - 1 - l)) * mp + (j + mp / 2) % mp);
          wsum += wr * zw[l];
        }
      }
    }
    for (auto& w : rule.weights) w /= wsum;
  }
  return rule;
}

std::vector<Vec> qmc_ball_points(int n, int count, std::uint64_t scramble_seed) {
  detail::check_dim(n);
  static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23};
  // Digit-scrambled Halton in n+1 dimensions: n for a Gaussian direction via
  // inverse pairs (Box-Muller), one for the radius.
  std::uint64_t sm = scramble_seed + 0x243f6a8885a308d3ULL;
  std::vector<std::uint64_t> dim_salt(n + 1);
  for (auto& s : dim_salt) s = splitmix64(sm);

  auto halton = [&](int index, int d) {
    int b = primes[d];
    double f = 1.0, x = 0.0;
    std::uint64_t i = static_cast<std::uint64_t>(index) + 1;
    int level = 0;
    while (i > 0) {
      std::uint64_t digit = i % b;
      if (scramble_seed != 0) {
        std::uint64_t h = dim_salt[d] ^ (0x9e3779b97f4a7c15ULL * (level + 1));
        digit = (digit + h) % b;
      }
      f /= b;
      x += f * static_cast<double>(digit);
      i /= b;
      ++level;
    }
    return x;
  };

  std::vector<Vec> pts;
  pts.reserve(count);
  const int gdims = (n + 1) / 2 * 2;  // even; the radius uses dimension gdims
  for (int idx = 0; idx < count; ++idx) {
    Vec g(n);
    for (int d = 0; d < gdims; d += 2) {
      double u1 = std::max(halton(idx, d), 1e-16);
      double u2 = halton(idx, d + 1);
      double rr = std::sqrt(-2.0 * std::log(u1));
      double a = 2.0 * M_PI * u2;
      g[d] = rr * std::cos(a);
      if (d + 1 < n) g[d + 1] = rr * std::sin(a);
    }
    double nn = g.norm();
    if (nn < 1e-12) {
      g = Vec::unit(n, 0);
      nn = 1.0;
    }
    double radius = std::pow(halton(idx, gdims), 1.0 / n);
    pts.push_back(g * (radius / nn));
  }
  return pts;
}

Domain Domain::ball(const Vec& center, double radius, double collar_width) {
  if (radius <= 0.0) throw std::invalid_argument("domain radius must be positive");
  Domain d;
  d.kind = Kind::ball;
  d.center_ = center;
  d.radius_ = radius;
  d.collar_width = collar_width;
  return d;
}

Domain Domain::box(const Vec& lo, const Vec& hi, double collar_width) {
  if (lo.dim() != hi.dim()) throw std::invalid_argument("domain box dimension mismatch");
  for (int i = 0; i < lo.dim(); ++i)
    if (!(lo[i] < hi[i])) throw std::invalid_argument("domain box needs lo < hi");
  Domain d;
  d.kind = Kind::box;
  d.lo_ = lo;
  d.hi_ = hi;
  d.collar_width = collar_width;
  return d;
}

bool Domain::contains(const Vec& x) const {
  if (kind == Kind::ball) return (x - center_).norm2() < radius_ * radius_;
  for (int i = 0; i < lo_.dim(); ++i)
    if (!(x[i] > lo_[i] && x[i] < hi_[i])) return false;
  return true;
}

void Domain::bounding_box(Vec& lo, Vec& hi) const {
  if (kind == Kind::ball) {
    lo = center_;
    hi = center_;
    for (int i = 0; i < center_.dim(); ++i) {
      lo[i] -= radius_;
      hi[i] += radius_;
    }
  } else {
    lo = lo_;
    hi = hi_;
  }
}

Vec Domain::center() const {
  if (kind == Kind::ball) return center_;
  return 0.5 * (lo_ + hi_);
}

namespace {

void require_member(const SymMatrix& a, const EllipticityClass& cls, const char* what) {
  if (!in_class(a, cls))
    throw std::invalid_argument(std::string(what) + ": matrix is not in A(lambda,Lambda)");
}

}  // namespace

CoefficientField CoefficientField::constant(const EllipticityClass& cls, const SymMatrix& a) {
  require_member(a, cls, "constant field");
  CoefficientField f(cls, a.det(), Kind::constant);
  f.a_even_ = a;
  return f;
}

CoefficientField CoefficientField::checkerboard(const EllipticityClass& cls, double cell,
                                                const SymMatrix& even, const SymMatrix& odd) {
  if (!(cell > 0.0)) throw std::invalid_argument("checkerboard cell size must be positive");
  require_member(even, cls, "checkerboard field (even)");
  require_member(odd, cls, "checkerboard field (odd)");
  double de = even.det(), dod = odd.det();
  if (std::abs(de - dod) > 1e-9 * std::abs(de))
    throw std::invalid_argument("checkerboard field: cell determinants differ");
  CoefficientField f(cls, de, Kind::checkerboard);
  f.a_even_ = even;
  f.a_odd_ = odd;
  f.cell_ = cell;
  return f;
}

CoefficientField CoefficientField::rotating(const EllipticityClass& cls, double omega) {
  CoefficientField f(cls, cls.lambda * cls.Lambda, Kind::rotating);
  // Axes beyond the rotation plane carry eigenvalue 1, so the class must
  // contain 1 for n > 2.
  if (cls.n > 2 && !(cls.lambda <= 1.0 && 1.0 <= cls.Lambda))
    throw std::invalid_argument("rotating field with n > 2 needs lambda <= 1 <= Lambda");
  f.omega_ = omega;
  return f;
}

CoefficientField CoefficientField::custom(const EllipticityClass& cls, double det_target,
                                          std::function<SymMatrix(const Vec&)> eval) {
  if (!(det_target > 0.0)) throw std::invalid_argument("custom field: det_target must be positive");
  CoefficientField f(cls, det_target, Kind::custom);
  f.eval_ = std::move(eval);
  return f;
}

SymMatrix CoefficientField::evaluate(const Vec& x) const {
  switch (kind_) {
    case Kind::constant:
      return a_even_;
    case Kind::checkerboard:
      return stencil_key(x) == 0 ? a_even_ : a_odd_;
    case Kind::rotating: {
      double th = omega_ * x[0];
      double c = std::cos(th), s = std::sin(th);
      Mat a = Mat::identity(cls_.n);
      // R(th) diag(lambda, Lambda, 1, ..., 1) R(th)^T in the (e1,e2) plane
      double l = cls_.lambda, L = cls_.Lambda;
      a(0, 0) = c * c * l + s * s * L;
      a(1, 1) = s * s * l + c * c * L;
      a(0, 1) = a(1, 0) = c * s * (l - L);
      return SymMatrix::from(a);
    }
    case Kind::custom: {
      SymMatrix a = eval_(x);
      std::ostringstream where;
      where << "custom field at x = (";
      for (int i = 0; i < x.dim(); ++i) where << (i ? "," : "") << x[i];
      where << ")";
      if (a.dim() != cls_.n) throw std::invalid_argument(where.str() + ": wrong dimension");
      if (!in_class(a, cls_))
        throw std::invalid_argument(where.str() + ": matrix leaves A(lambda,Lambda)");
      if (std::abs(a.det() - det_target_) > 1e-9 * det_target_)
        throw std::invalid_argument(where.str() + ": determinant is not the field constant");
      return a;
    }
  }
  throw std::logic_error("unreachable");
}

Ellipsoid CoefficientField::ellipsoid_at(const Vec& x, double eps) const {
  SymMatrix root = principal_sqrt(evaluate(x));
  Mat shape = eps * root.mat();
  return Ellipsoid(x, SymMatrix::from(shape));
}

int CoefficientField::stencil_key_count() const {
  switch (kind_) {
    case Kind::constant:
      return 1;
    case Kind::checkerboard:
      return 2;
    default:
      return 0;
  }
}

int CoefficientField::stencil_key(const Vec& x) const {
  if (kind_ == Kind::constant) return 0;
  if (kind_ == Kind::checkerboard) {
    long long parity = 0;
    for (int i = 0; i < x.dim(); ++i)
      parity += static_cast<long long>(std::floor(x[i] / cell_));
    return static_cast<int>(((parity % 2) + 2) % 2);
  }
  return -1;
}

SymMatrix CoefficientField::matrix_for_key(int key) const {
  if (kind_ == Kind::constant && key == 0) return a_even_;
  if (kind_ == Kind::checkerboard && (key == 0 || key == 1)) return key == 0 ? a_even_ : a_odd_;
  throw std::invalid_argument("matrix_for_key: field has no shared stencil keys");
}

namespace {

struct IniData {
  // section -> key -> value
  std::map<std::string, std::map<std::string, std::string>> sections;
};

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

IniData parse_ini(const std::string& text) {
  IniData ini;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      ini.sections[section];
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("field config line " + std::to_string(lineno) +
                                  ": expected key = value");
    ini.sections[section][trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return ini;
}

double to_double(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument("field config: bad number for '" + key + "': " + s);
  }
}

// rows separated by ';', entries by ','
SymMatrix parse_matrix(const std::string& s, int n) {
  Mat m(n);
  std::istringstream rows(s);
  std::string row;
  int i = 0;
  while (std::getline(rows, row, ';')) {
    if (i >= n) throw std::invalid_argument("field config: too many matrix rows");
    std::istringstream cols(row);
    std::string cell;
    int j = 0;
    while (std::getline(cols, cell, ',')) {
      if (j >= n) throw std::invalid_argument("field config: too many matrix columns");
      m(i, j) = to_double(trim(cell), "matrix entry");
      ++j;
    }
    if (j != n) throw std::invalid_argument("field config: short matrix row");
    ++i;
  }
  if (i != n) throw std::invalid_argument("field config: wrong matrix row count");
  return SymMatrix::from(m, 1e-9);
}

}  // namespace

CoefficientField CoefficientField::from_config(const std::string& text) {
  IniData ini = parse_ini(text);

  auto take = [&](const std::string& sec, const std::string& key) -> std::string {
    auto s = ini.sections.find(sec);
    if (s == ini.sections.end()) throw std::invalid_argument("field config: missing [" + sec + "]");
    auto k = s->second.find(key);
    if (k == s->second.end())
      throw std::invalid_argument("field config: missing " + sec + "." + key);
    std::string v = k->second;
    s->second.erase(k);
    return v;
  };
  auto take_opt = [&](const std::string& sec, const std::string& key,
                      const std::string& fallback) -> std::string {
    auto s = ini.sections.find(sec);
    if (s == ini.sections.end()) return fallback;
    auto k = s->second.find(key);
    if (k == s->second.end()) return fallback;
    std::string v = k->second;
    s->second.erase(k);
    return v;
  };

  int n = static_cast<int>(to_double(take("class", "n"), "n"));
  double lambda = to_double(take("class", "lambda"), "lambda");
  double Lambda = to_double(take("class", "Lambda"), "Lambda");
  EllipticityClass cls(n, lambda, Lambda);

  std::string kind = take("field", "kind");
  CoefficientField out = [&]() {
    if (kind == "constant") return constant(cls, parse_matrix(take("field", "a"), n));
    if (kind == "checkerboard")
      return checkerboard(cls, to_double(take("field", "cell"), "cell"),
                          parse_matrix(take("field", "even"), n),
                          parse_matrix(take("field", "odd"), n));
    if (kind == "rotating")
      return rotating(cls, to_double(take_opt("field", "omega", "1"), "omega"));
    throw std::invalid_argument("field config: unknown kind '" + kind + "'");
  }();

  // Unknown keys are rejected so typos cannot silently change a run.
  for (const auto& [sec, kv] : ini.sections)
    for (const auto& [key, val] : kv)
      throw std::invalid_argument("field config: unknown key " + sec + "." + key);
  return out;
}

}  // namespace ellab
