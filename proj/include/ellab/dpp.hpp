#pragma once

// Grid fixed-point solver for the mean-value equation u(x) = avg_{E_x} u,
// Monte Carlo single and coupled ellipsoid walks, and the empirical Holder
// quotient of a solved grid.

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ellab/field.hpp"

namespace ellab {

using Payoff = std::function<double(const Vec&)>;

struct SolveOptions {
  double tol = 1e-7;
  long long max_iters = 500000;
  int quad_degree = 6;
  int threads = 0;  // 0 = hardware concurrency
};

class GridSolution {
 public:
  int dim() const { return n_; }
  double spacing() const { return h_; }
  double eps() const { return eps_; }
  const Domain& domain() const { return domain_; }

  long long node_count() const { return total_; }
  long long interior_count() const { return interior_count_; }
  Vec node_coord(long long flat) const;
  bool node_interior(long long flat) const { return interior_[flat] != 0; }
  double value(long long flat) const { return values_[flat]; }
  const std::vector<double>& values() const { return values_; }

  // Multilinear interpolation; p must lie inside the grid box.
  double interpolate(const Vec& p) const;

  double residual() const { return residual_; }
  long long iterations() const { return iterations_; }
  bool converged() const { return converged_; }
  double tolerance() const { return tol_; }

  // node coordinates + value (+ interior flag), one row per node
  void write_csv(std::ostream& os) const;
  void write_csv(const std::string& path) const;
  // domain, eps, h, residual, iteration count
  void write_sidecar_json(std::ostream& os) const;
  void write_sidecar_json(const std::string& path) const;

 private:
  friend GridSolution solve_dpp(const CoefficientField&, const Domain&, const Payoff&, double,
                                double, const SolveOptions&);
  int n_ = 0;
  double h_ = 0.0, eps_ = 0.0, tol_ = 0.0;
  Domain domain_;
  Vec origin_;
  int dims_[kMaxDim] = {0};
  long long strides_[kMaxDim] = {0};
  long long total_ = 0, interior_count_ = 0;
  std::vector<double> values_;
  std::vector<char> interior_;
  double residual_ = 0.0;
  long long iterations_ = 0;
  bool converged_ = false;
};

// Jacobi-style synchronous fixed-point iteration with double-buffered values.
// Requires eps >= 4h. Off-grid points inside the domain are filled by
// multilinear interpolation; points outside get the payoff directly.
GridSolution solve_dpp(const CoefficientField& field, const Domain& domain, const Payoff& payoff,
                       double eps, double h, const SolveOptions& opts = {});

struct WalkState {
  Vec position;
  long long steps = 0;
  bool exited = false;
};

// One trajectory; the last state is the first exit position unless the cap
// truncated the walk.
std::vector<WalkState> walk(const CoefficientField& field, const Domain& domain, const Vec& x0,
                            double eps, Rng& rng, long long step_cap = 1'000'000);

struct WalkEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long long walks = 0;
  long long truncated = 0;
  double mean_steps = 0.0;
};

// mean of F(x_tau) over `walks` independent trajectories; per-walk streams are
// split from `root_seed` so results do not depend on scheduling.
WalkEstimate estimate_value(const CoefficientField& field, const Domain& domain,
                            const Payoff& payoff, const Vec& x0, double eps, long long walks,
                            std::uint64_t root_seed, long long step_cap = 1'000'000);

enum class CouplingStrategy { optimal, mirror, identity };

struct CoupledWalkStats {
  bool met = false;
  std::optional<long long> meet_step;
  std::optional<long long> exit_step;
  double final_separation = 0.0;
  long long steps = 0;
  bool truncated = false;
  long long overlap_fallbacks = 0;  // rejection-cap hits in the overlap move
};

// Two walks advanced with a shared ball sample; the second step is rotated by
// Q chosen per strategy in the frame aligned with (X-Z)/|X-Z|. Below the
// overlap threshold |X-Z| <= (1/2) sqrt(lambda) eps the mirror and optimal
// strategies take the exact-cancellation move (common point of E_X cap E_Z
// with probability equal to the overlap fraction); the identity strategy
// never does, so equal increments keep its separation constant.
CoupledWalkStats coupled_walk(const CoefficientField& field, const Domain& domain, const Vec& x0,
                              const Vec& z0, double eps, CouplingStrategy strategy, double alpha,
                              Rng& rng, long long step_cap = 1'000'000);

struct HolderEstimate {
  double quotient = 0.0;
  Vec x, z;
};

// max over interior node pairs in B_{r_inner}(domain center) of
// |u(x)-u(z)| / (|x-z|^alpha + eps^alpha).
HolderEstimate holder_estimate(const GridSolution& sol, double alpha, double r_inner);

struct TestFunction {
  std::function<double(const Vec&)> value;
  std::function<Mat(const Vec&)> hessian;
};

// avg_{E_x} u - u(x) - (eps^2 / (2(n+2))) trace(A(x) D2u(x)). Quadrature of
// the given degree for n <= 3, scrambled QMC beyond.
double mean_value_residual(const CoefficientField& field, const Vec& x, double eps,
                           const TestFunction& u, int quad_degree = 8, int qmc_points = 1 << 16);

}  // namespace ellab
