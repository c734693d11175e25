#include "ellab/dpp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ellab/coupling.hpp"
#include "ellab/kernels.hpp"

namespace ellab {

namespace {

int thread_count(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Square roots of the field matrices, cached per stencil key where the field
// takes finitely many values.
class SqrtCache {
 public:
  explicit SqrtCache(const CoefficientField& f) : f_(f) {
    for (int k = 0; k < f.stencil_key_count(); ++k)
      cached_.push_back(principal_sqrt(f.matrix_for_key(k)).mat());
  }
  Mat at(const Vec& x) const {
    if (!cached_.empty()) return cached_[f_.stencil_key(x)];
    return principal_sqrt(f_.evaluate(x)).mat();
  }

 private:
  const CoefficientField& f_;
  std::vector<Mat> cached_;
};

struct SharedStencil {
  std::vector<std::int32_t> off;
  std::vector<double> w;
  std::vector<Vec> deltas;  // quadrature offsets eps * A^{1/2} y_k
  double reach = 0.0;       // max |delta|
};

}  // namespace

Vec GridSolution::node_coord(long long flat) const {
  Vec x(n_);
  long long rem = flat;
  for (int i = 0; i < n_; ++i) {
    long long idx = rem / strides_[i];
    rem %= strides_[i];
    x[i] = origin_[i] + h_ * static_cast<double>(idx);
  }
  return x;
}

double GridSolution::interpolate(const Vec& p) const {
  long long base = 0;
  double fr[kMaxDim];
  for (int i = 0; i < n_; ++i) {
    double t = (p[i] - origin_[i]) / h_;
    if (t < -1e-9 || t > dims_[i] - 1 + 1e-9)
      throw std::out_of_range("interpolate: point outside the grid box");
    long long b = static_cast<long long>(std::floor(t));
    b = std::clamp(b, 0LL, static_cast<long long>(dims_[i]) - 2);
    fr[i] = t - static_cast<double>(b);
    base += b * strides_[i];
  }
  double acc = 0.0;
  for (int mask = 0; mask < (1 << n_); ++mask) {
    double w = 1.0;
    long long off = 0;
    for (int i = 0; i < n_; ++i) {
      if (mask & (1 << i)) {
        w *= fr[i];
        off += strides_[i];
      } else {
        w *= 1.0 - fr[i];
      }
    }
    acc += w * values_[base + off];
  }
  return acc;
}

void GridSolution::write_csv(std::ostream& os) const {
  for (int i = 0; i < n_; ++i) os << "x" << i << ",";
  os << "value,interior\n";
  char buf[64];
  for (long long f = 0; f < total_; ++f) {
    Vec x = node_coord(f);
    for (int i = 0; i < n_; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", x[i]);
      os << buf << ",";
    }
    std::snprintf(buf, sizeof buf, "%.17g", values_[f]);
    os << buf << "," << (interior_[f] ? 1 : 0) << "\n";
  }
}

void GridSolution::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_csv(os);
}

void GridSolution::write_sidecar_json(std::ostream& os) const {
  nlohmann::json j;
  j["dim"] = n_;
  j["h"] = h_;
  j["eps"] = eps_;
  j["tol"] = tol_;
  j["residual"] = residual_;
  j["iterations"] = iterations_;
  j["converged"] = converged_;
  j["nodes"] = total_;
  j["interior_nodes"] = interior_count_;
  if (domain_.kind == Domain::Kind::ball) {
    j["domain"]["kind"] = "ball";
    std::vector<double> c(domain_.center_.data(), domain_.center_.data() + n_);
    j["domain"]["center"] = c;
    j["domain"]["radius"] = domain_.radius_;
  } else {
    j["domain"]["kind"] = "box";
    std::vector<double> lo(domain_.lo_.data(), domain_.lo_.data() + n_);
    std::vector<double> hi(domain_.hi_.data(), domain_.hi_.data() + n_);
    j["domain"]["lo"] = lo;
    j["domain"]["hi"] = hi;
  }
  j["domain"]["collar_width"] = domain_.collar_width;
  os << j.dump(2) << "\n";
}

void GridSolution::write_sidecar_json(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_sidecar_json(os);
}

namespace {

SharedStencil build_shared_stencil(const Mat& scaled_root, const BallRule& rule,
                                   const long long* strides, double h, int n) {
  SharedStencil s;
  std::map<long long, double> acc;
  const int m = static_cast<int>(rule.nodes.size());
  s.deltas.reserve(m);
  for (int k = 0; k < m; ++k) {
    Vec delta = scaled_root * rule.nodes[k];
    s.deltas.push_back(delta);
    s.reach = std::max(s.reach, delta.norm());
    long long base = 0;
    double fr[kMaxDim];
    for (int i = 0; i < n; ++i) {
      double t = delta[i] / h;
      double b = std::floor(t);
      fr[i] = t - b;
      base += static_cast<long long>(b) * strides[i];
    }
    for (int mask = 0; mask < (1 << n); ++mask) {
      double w = rule.weights[k];
      long long off = base;
      for (int i = 0; i < n; ++i) {
        if (mask & (1 << i)) {
          w *= fr[i];
          off += strides[i];
        } else {
          w *= 1.0 - fr[i];
        }
      }
      acc[off] += w;
    }
  }
  for (const auto& [off, w] : acc) {
    s.off.push_back(static_cast<std::int32_t>(off));
    s.w.push_back(w);
  }
  return s;
}

}  // namespace

GridSolution solve_dpp(const CoefficientField& field, const Domain& domain, const Payoff& payoff,
                       double eps, double h, const SolveOptions& opts) {
  const int n = field.cls().n;
  if (domain.dim() != n) throw std::invalid_argument("solve_dpp: field/domain dimension mismatch");
  if (!(h > 0.0) || !(eps >= 4.0 * h * (1.0 - 1e-12)))
    throw std::invalid_argument("solve_dpp: requires eps >= 4h");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("solve_dpp: tol must be positive");

  GridSolution sol;
  sol.n_ = n;
  sol.h_ = h;
  sol.eps_ = eps;
  sol.tol_ = opts.tol;
  sol.domain_ = domain;
  sol.domain_.collar_width = std::sqrt(field.cls().Lambda) * eps;

  // Grid box: domain plus collar plus an interpolation margin, snapped to
  // multiples of h so checkerboard cells land identically on every run.
  const double pad = sol.domain_.collar_width + 3.0 * h;
  Vec lo, hi;
  domain.bounding_box(lo, hi);
  long long total = 1;
  for (int i = 0; i < n; ++i) {
    double a = std::floor((lo[i] - pad) / h);
    double b = std::ceil((hi[i] + pad) / h);
    sol.dims_[i] = static_cast<int>(b - a) + 1;
    lo[i] = a * h;
    total *= sol.dims_[i];
    if (total > (1LL << 26)) throw std::invalid_argument("solve_dpp: grid too large");
  }
  sol.origin_ = lo;
  sol.strides_[n - 1] = 1;
  for (int i = n - 2; i >= 0; --i)
    sol.strides_[i] = sol.strides_[i + 1] * sol.dims_[i + 1];
  sol.total_ = total;

  sol.values_.assign(total, 0.0);
  sol.interior_.assign(total, 0);
  for (long long f = 0; f < total; ++f) {
    Vec x = sol.node_coord(f);
    sol.values_[f] = payoff(x);
    if (domain.contains(x)) {
      sol.interior_[f] = 1;
      ++sol.interior_count_;
    }
  }

  // The stencil weights are overlap integrals of the uniform ellipsoid
  // measure against the multilinear hat functions, which vary on the h scale.
  // The rule used to build them must resolve every cell the ellipsoid covers,
  // so its density follows eps/h; this only affects the one-time stencil
  // build, never the sweep cost (the merged stencil size is geometric).
  const double cells_across = eps * std::sqrt(field.cls().Lambda) / h;
  const int density_degree =
      static_cast<int>(std::ceil((n == 2 ? 8.0 : 3.0) * cells_across));
  BallRule rule = ball_quadrature(n, std::max(opts.quad_degree, density_degree));

  const int key_count = field.stencil_key_count();
  std::vector<SharedStencil> shared;
  for (int k = 0; k < key_count; ++k) {
    Mat scaled = eps * principal_sqrt(field.matrix_for_key(k)).mat();
    shared.push_back(build_shared_stencil(scaled, rule, sol.strides_, h, n));
  }

  auto boundary_distance = [&](const Vec& x) {
    if (domain.kind == Domain::Kind::ball)
      return domain.radius_ - (x - domain.center_).norm();
    double dmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      dmin = std::min({dmin, x[i] - domain.lo_[i], domain.hi_[i] - x[i]});
    return dmin;
  };

  // Clean nodes (every quadrature point inside the domain) run the shared
  // per-key stencil; the boundary ring and keyless fields get per-node
  // stencils with the payoff folded into a constant.
  struct Run {
    long long start;
    int len;
    int key;
  };
  std::vector<Run> runs;
  std::vector<long long> ring_nodes;
  std::vector<std::size_t> ring_ptr{0};
  std::vector<long long> ring_idx;
  std::vector<double> ring_w;
  std::vector<double> ring_cst;

  auto build_ring_node = [&](long long f, const Vec& x, const std::vector<Vec>& deltas,
                             const BallRule& r) {
    std::map<long long, double> acc;
    double cst = 0.0;
    const int m = static_cast<int>(r.nodes.size());
    for (int k = 0; k < m; ++k) {
      Vec p = x + deltas[k];
      if (!domain.contains(p)) {
        cst += r.weights[k] * payoff(p);
        continue;
      }
      long long base = 0;
      double fr[kMaxDim];
      for (int i = 0; i < n; ++i) {
        double t = (p[i] - sol.origin_[i]) / h;
        long long b = static_cast<long long>(std::floor(t));
        fr[i] = t - static_cast<double>(b);
        base += b * sol.strides_[i];
      }
      for (int mask = 0; mask < (1 << n); ++mask) {
        double w = r.weights[k];
        long long off = base;
        for (int i = 0; i < n; ++i) {
          if (mask & (1 << i)) {
            w *= fr[i];
            off += sol.strides_[i];
          } else {
            w *= 1.0 - fr[i];
          }
        }
        acc[off] += w;
      }
    }
    ring_nodes.push_back(f);
    for (const auto& [idx, w] : acc) {
      ring_idx.push_back(idx);
      ring_w.push_back(w);
    }
    ring_ptr.push_back(ring_idx.size());
    ring_cst.push_back(cst);
  };

  std::vector<Vec> node_deltas;  // scratch for keyless fields
  for (long long f = 0; f < total; ++f) {
    if (!sol.interior_[f]) continue;
    Vec x = sol.node_coord(f);
    int key = key_count > 0 ? field.stencil_key(x) : -1;
    bool clean = false;
    if (key >= 0) {
      double reach = shared[key].reach;
      clean = boundary_distance(x) > reach * (1.0 + 1e-14) + 1e-15;
    }
    if (clean) {
      if (!runs.empty() && runs.back().start + runs.back().len == f && runs.back().key == key)
        ++runs.back().len;
      else
        runs.push_back({f, 1, key});
    } else if (key >= 0) {
      build_ring_node(f, x, shared[key].deltas, rule);
    } else {
      Mat scaled = eps * principal_sqrt(field.evaluate(x)).mat();
      node_deltas.clear();
      for (const Vec& y : rule.nodes) node_deltas.push_back(scaled * y);
      build_ring_node(f, x, node_deltas, rule);
    }
  }

  const int nthreads = thread_count(opts.threads);

  // Work partition: contiguous slices of runs and of ring nodes.
  auto slice = [](std::size_t m, int t, int nt) {
    std::size_t a = m * t / nt, b = m * (t + 1) / nt;
    return std::pair<std::size_t, std::size_t>(a, b);
  };

  std::vector<double> next = sol.values_;
  std::vector<double> deltas_by_thread(nthreads, 0.0);

  auto sweep = [&](const std::vector<double>& prev, std::vector<double>& out) {
    auto work = [&](int t) {
      double dmax = 0.0;
      auto [r0, r1] = slice(runs.size(), t, nthreads);
      for (std::size_t ri = r0; ri < r1; ++ri) {
        const Run& run = runs[ri];
        const SharedStencil& st = shared[run.key];
        kernels::stencil_apply_run(prev.data() + run.start, out.data() + run.start,
                                   static_cast<std::size_t>(run.len), st.off.data(), st.w.data(),
                                   st.off.size());
        for (int i = 0; i < run.len; ++i)
          dmax = std::max(dmax, std::abs(out[run.start + i] - prev[run.start + i]));
      }
      auto [g0, g1] = slice(ring_nodes.size(), t, nthreads);
      for (std::size_t gi = g0; gi < g1; ++gi) {
        double acc = ring_cst[gi];
        for (std::size_t e = ring_ptr[gi]; e < ring_ptr[gi + 1]; ++e)
          acc += ring_w[e] * prev[ring_idx[e]];
        long long f = ring_nodes[gi];
        out[f] = acc;
        dmax = std::max(dmax, std::abs(acc - prev[f]));
      }
      deltas_by_thread[t] = dmax;
    };
    if (nthreads == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < nthreads; ++t) pool.emplace_back(work, t);
      for (auto& th : pool) th.join();
    }
    double dmax = 0.0;
    for (double d : deltas_by_thread) dmax = std::max(dmax, d);
    return dmax;
  };

  double delta = std::numeric_limits<double>::infinity();
  long long it = 0;
  while (it < opts.max_iters) {
    delta = sweep(sol.values_, next);
    std::swap(sol.values_, next);
    ++it;
    if (delta <= opts.tol) break;
  }
  sol.iterations_ = it;
  sol.converged_ = delta <= opts.tol;
  // Residual of the stored field: one more application.
  sol.residual_ = sweep(sol.values_, next);
  return sol;
}

std::vector<WalkState> walk(const CoefficientField& field, const Domain& domain, const Vec& x0,
                            double eps, Rng& rng, long long step_cap) {
  if (!domain.contains(x0)) throw std::invalid_argument("walk: x0 must lie inside the domain");
  const int n = x0.dim();
  SqrtCache roots(field);
  std::vector<WalkState> trace;
  trace.push_back({x0, 0, false});
  Vec x = x0;
  for (long long k = 1; k <= step_cap; ++k) {
    x = x + roots.at(x) * ball_point(n, rng) * eps;
    bool exited = !domain.contains(x);
    trace.push_back({x, k, exited});
    if (exited) break;
  }
  return trace;
}

WalkEstimate estimate_value(const CoefficientField& field, const Domain& domain,
                            const Payoff& payoff, const Vec& x0, double eps, long long walks,
                            std::uint64_t root_seed, long long step_cap) {
  if (!domain.contains(x0)) throw std::invalid_argument("estimate_value: x0 outside domain");
  const int n = x0.dim();
  SqrtCache roots(field);
  double sum = 0.0, sumsq = 0.0, steps = 0.0;
  long long truncated = 0;
  for (long long wi = 0; wi < walks; ++wi) {
    Rng rng = Rng::stream(root_seed, static_cast<std::uint64_t>(wi));
    Vec x = x0;
    long long k = 0;
    bool exited = false;
    while (k < step_cap) {
      x = x + roots.at(x) * ball_point(n, rng) * eps;
      ++k;
      if (!domain.contains(x)) {
        exited = true;
        break;
      }
    }
    if (!exited) ++truncated;
    double v = payoff(x);
    sum += v;
    sumsq += v * v;
    steps += static_cast<double>(k);
  }
  WalkEstimate est;
  est.walks = walks;
  est.truncated = truncated;
  est.mean = sum / static_cast<double>(walks);
  double var = std::max(0.0, sumsq / static_cast<double>(walks) - est.mean * est.mean);
  est.std_error = std::sqrt(var / static_cast<double>(walks));
  est.mean_steps = steps / static_cast<double>(walks);
  return est;
}

namespace {

OrthoMatrix reflection_across(const Vec& direction) {
  const int n = direction.dim();
  OrthoMatrix h = frame_to_direction(direction);
  Vec d(n);
  d[0] = -1.0;
  for (int i = 1; i < n; ++i) d[i] = 1.0;
  return OrthoMatrix::from(h.mat() * Mat::diag(d) * h.mat().transpose());
}

}  // namespace

CoupledWalkStats coupled_walk(const CoefficientField& field, const Domain& domain, const Vec& x0,
                              const Vec& z0, double eps, CouplingStrategy strategy, double alpha,
                              Rng& rng, long long step_cap) {
  if (!domain.contains(x0) || !domain.contains(z0))
    throw std::invalid_argument("coupled_walk: both starting points must lie inside the domain");
  const int n = x0.dim();
  const EllipticityClass& cls = field.cls();
  SqrtCache roots(field);

  CoupledWalkStats st;
  Vec x = x0, z = z0;
  if ((x - z).norm() == 0.0) {
    st.met = true;
    st.meet_step = 0;
    st.final_separation = 0.0;
    return st;
  }

  const double overlap_threshold = 0.5 * std::sqrt(cls.lambda) * eps;
  const long long rejection_cap = 10'000;

  for (long long k = 1; k <= step_cap; ++k) {
    st.steps = k;
    double sep = (x - z).norm();
    if (strategy != CouplingStrategy::identity && sep <= overlap_threshold) {
      // Exact-cancellation move: a shared uniform point of the overlap with
      // probability |E_x cap E_z| / |E_x|, conditioned complements otherwise.
      Ellipsoid ex(x, SymMatrix::from(eps * roots.at(x)));
      Ellipsoid ez(z, SymMatrix::from(eps * roots.at(z)));
      Vec y = sample_uniform(ex, rng);
      if (ez.contains(y)) {
        x = z = y;
        st.met = true;
        st.meet_step = k;
        st.final_separation = 0.0;
        if (!domain.contains(y)) st.exit_step = k;
        return st;
      }
      x = y;
      bool drawn = false;
      for (long long trial = 0; trial < rejection_cap; ++trial) {
        Vec w = sample_uniform(ez, rng);
        if (!ex.contains(w)) {
          z = w;
          drawn = true;
          break;
        }
      }
      if (!drawn) {
        ++st.overlap_fallbacks;
        z = sample_uniform(ez, rng);
      }
    } else {
      Vec dir = (x - z) * (1.0 / sep);
      Mat sx = roots.at(x);
      Mat sz = roots.at(z);
      Vec y = ball_point(n, rng);
      Vec zy;
      switch (strategy) {
        case CouplingStrategy::identity:
          zy = y;
          break;
        case CouplingStrategy::mirror:
          zy = reflection_across(dir) * y;
          break;
        case CouplingStrategy::optimal: {
          SymMatrix ax = SymMatrix::from(sx * sx, 1e-9);
          SymMatrix az = SymMatrix::from(sz * sz, 1e-9);
          WeightMatrix w(n, alpha, dir);
          zy = optimal_coupling(ax, az, w).q * y;
          break;
        }
      }
      x = x + sx * y * eps;
      z = z + sz * zy * eps;
    }
    if (!domain.contains(x) || !domain.contains(z)) {
      st.exit_step = k;
      st.final_separation = (x - z).norm();
      return st;
    }
  }
  st.truncated = true;
  st.final_separation = (x - z).norm();
  return st;
}

HolderEstimate holder_estimate(const GridSolution& sol, double alpha, double r_inner) {
  const Domain& dom = sol.domain();
  if (dom.kind == Domain::Kind::ball) {
    if (!(r_inner < dom.radius_))
      throw std::invalid_argument("holder_estimate: r_inner must be strictly inside the domain");
  } else {
    for (int i = 0; i < sol.dim(); ++i)
      if (!(r_inner < 0.5 * (dom.hi_[i] - dom.lo_[i])))
        throw std::invalid_argument("holder_estimate: r_inner must be strictly inside the domain");
  }
  Vec c = dom.center();

  std::vector<Vec> pts;
  std::vector<double> vals;
  for (long long f = 0; f < sol.node_count(); ++f) {
    if (!sol.node_interior(f)) continue;
    Vec x = sol.node_coord(f);
    if ((x - c).norm() <= r_inner) {
      pts.push_back(x);
      vals.push_back(sol.value(f));
    }
  }

  HolderEstimate out;
  const double eps_alpha = std::pow(sol.eps(), alpha);
  const std::size_t m = pts.size();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      double q = std::abs(vals[i] - vals[j]) /
                 (std::pow((pts[i] - pts[j]).norm(), alpha) + eps_alpha);
      if (q > out.quotient) {
        out.quotient = q;
        out.x = pts[i];
        out.z = pts[j];
      }
    }
  }
  return out;
}

double mean_value_residual(const CoefficientField& field, const Vec& x, double eps,
                           const TestFunction& u, int quad_degree, int qmc_points) {
  const int n = x.dim();
  SymMatrix a = field.evaluate(x);
  Mat scaled = eps * principal_sqrt(a).mat();
  double avg = 0.0;
  if (n <= 3) {
    BallRule rule = ball_quadrature(n, quad_degree);
    for (std::size_t k = 0; k < rule.nodes.size(); ++k)
      avg += rule.weights[k] * u.value(x + scaled * rule.nodes[k]);
  } else {
    std::vector<Vec> pts = qmc_ball_points(n, qmc_points, 7);
    for (const Vec& y : pts) avg += u.value(x + scaled * y);
    avg /= static_cast<double>(pts.size());
  }
  double second = (a.mat() * u.hessian(x)).trace();
  return avg - u.value(x) - eps * eps / (2.0 * (n + 2.0)) * second;
}

}  // namespace ellab
