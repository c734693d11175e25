// Command-line front door: couplings, threshold tables, key-inequality
// verification, DPP solves, walks, coupled walks, Holder quotients, and the
// large-distortion counterexamples. Reports are JSON (17-digit floats via
// lossless round-trip serialization); grids are CSV with a JSON sidecar.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ellab/comparison.hpp"
#include "ellab/counterexamples.hpp"
#include "ellab/coupling.hpp"
#include "ellab/dpp.hpp"
#include "ellab/kernels.hpp"

using nlohmann::json;
using namespace ellab;

namespace {

constexpr const char* kVersion = "0.1.0";

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("ELLIPSOID_LAB_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 0;  // modules treat 0 as hardware concurrency
}

Mat parse_matrix_arg(const std::string& s) {
  std::vector<std::vector<double>> rows;
  std::istringstream rs(s);
  std::string row;
  while (std::getline(rs, row, ';')) {
    rows.emplace_back();
    std::istringstream cs(row);
    std::string cell;
    while (std::getline(cs, cell, ',')) rows.back().push_back(std::stod(cell));
  }
  int n = static_cast<int>(rows.size());
  Mat m(n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n)
      throw CLI::ValidationError("matrix", "matrix must be square (rows 'a,b;c,d')");
    for (int j = 0; j < n; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Vec parse_vec_arg(const std::string& s) {
  std::vector<double> vals;
  std::istringstream cs(s);
  std::string cell;
  while (std::getline(cs, cell, ',')) vals.push_back(std::stod(cell));
  Vec v(static_cast<int>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) v[static_cast<int>(i)] = vals[i];
  return v;
}

json matrix_json(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.dim(); ++i) {
    json r = json::array();
    for (int j = 0; j < m.dim(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.dim(); ++i) a.push_back(v[i]);
  return a;
}

void emit(const json& report, const std::string& output) {
  if (output.empty() || output == "-") {
    std::cout << report.dump(2) << "\n";
  } else {
    std::ofstream os(output);
    if (!os) throw std::runtime_error("cannot open output file " + output);
    os << report.dump(2) << "\n";
  }
}

json provenance(const std::string& command, std::uint64_t seed, const json& config) {
  json p;
  p["command"] = command;
  p["seed"] = seed;
  p["version"] = kVersion;
  p["simd"] = kernels::using_avx2() ? "avx2" : "scalar";
  p["config"] = config;
  return p;
}

CoefficientField load_field_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open field file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return CoefficientField::from_config(ss.str());
}

// Named payoff families: affine:g1,g2,b | quadratic:q11,q12;q21,q22|g1,g2|b |
// sinusoid:k1,k2,amp | constant:c
Payoff parse_payoff(const std::string& s, int n) {
  auto colon = s.find(':');
  std::string kind = colon == std::string::npos ? s : s.substr(0, colon);
  std::string args = colon == std::string::npos ? "" : s.substr(colon + 1);
  if (kind == "constant") {
    double c = args.empty() ? 1.0 : std::stod(args);
    return [c](const Vec&) { return c; };
  }
  if (kind == "affine") {
    Vec g = parse_vec_arg(args);
    if (g.dim() != n + 1)
      throw CLI::ValidationError("payoff", "affine payoff needs n+1 numbers g1,..,gn,b");
    return [g, n](const Vec& y) {
      double v = g[n];
      for (int i = 0; i < n; ++i) v += g[i] * y[i];
      return v;
    };
  }
  if (kind == "quadratic") {
    // q|g|b with q = matrix rows, g = vector, b = scalar
    std::istringstream parts(args);
    std::string qs, gs, bs;
    std::getline(parts, qs, '|');
    std::getline(parts, gs, '|');
    std::getline(parts, bs, '|');
    Mat q = parse_matrix_arg(qs);
    Vec g = gs.empty() ? Vec(n) : parse_vec_arg(gs);
    double b = bs.empty() ? 0.0 : std::stod(bs);
    return [q, g, b](const Vec& y) { return 0.5 * (q * y).dot(y) + g.dot(y) + b; };
  }
  if (kind == "sinusoid") {
    Vec k = parse_vec_arg(args.empty() ? "1,0,1" : args);
    double amp = k.dim() > n ? k[n] : 1.0;
    return [k, amp, n](const Vec& y) {
      double phase = 0.0;
      for (int i = 0; i < n; ++i) phase += k[i] * y[i];
      return amp * std::sin(phase);
    };
  }
  throw CLI::ValidationError("payoff", "unknown payoff kind '" + kind + "'");
}

struct FieldOptions {
  std::string file;
  std::string kind = "constant";
  int n = 2;
  double lambda = 1.0;
  double Lambda = 1.0;
  std::string matrix = "";
  double cell = 0.25;
  double omega = 1.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--field", file, "field description file (sections [class]/[field])");
    cmd->add_option("--kind", kind, "constant|checkerboard|rotating")
        ->check(CLI::IsMember({"constant", "checkerboard", "rotating"}));
    cmd->add_option("--n", n, "dimension");
    cmd->add_option("--lambda", lambda, "lower ellipticity bound");
    cmd->add_option("--Lambda", Lambda, "upper ellipticity bound");
    cmd->add_option("--matrix", matrix, "constant-field matrix 'a,b;c,d'");
    cmd->add_option("--cell", cell, "checkerboard cell size");
    cmd->add_option("--omega", omega, "rotating-field angle rate");
  }

  // Flags override file values only in the sense that a file, when given,
  // fully describes the field; otherwise flags assemble one.
  CoefficientField build() const {
    if (!file.empty()) return load_field_file(file);
    EllipticityClass cls(n, lambda, Lambda);
    if (kind == "constant") {
      SymMatrix a = matrix.empty()
                        ? SymMatrix::from(lambda * Mat::identity(n))
                        : SymMatrix::from(parse_matrix_arg(matrix), 1e-9);
      return CoefficientField::constant(cls, a);
    }
    if (kind == "checkerboard") {
      // det-matched diagonal pair diag(Lambda, lambda, 1..) / diag(lambda, Lambda, 1..)
      Vec de(n), dodd(n);
      for (int i = 0; i < n; ++i) de[i] = dodd[i] = 1.0;
      de[0] = Lambda;
      de[1] = lambda;
      dodd[0] = lambda;
      dodd[1] = Lambda;
      return CoefficientField::checkerboard(cls, cell, SymMatrix::diag(de), SymMatrix::diag(dodd));
    }
    return CoefficientField::rotating(cls, omega);
  }

  json echo() const {
    json j;
    j["file"] = file;
    j["kind"] = kind;
    j["n"] = n;
    j["lambda"] = lambda;
    j["Lambda"] = Lambda;
    j["matrix"] = matrix;
    j["cell"] = cell;
    j["omega"] = omega;
    return j;
  }
};

json sweep_record_json(const SweepRecord& r) {
  json j;
  j["coupling"] = r.id;
  j["parallel"] = r.parallel;
  j["orthogonal"] = r.orthogonal;
  j["parallel_stderr"] = r.parallel_se;
  j["orthogonal_stderr"] = r.orthogonal_se;
  j["violated"] = r.violated;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ellipsoid-lab: couplings, comparison functions and walks on ellipsoid processes"};
  app.require_subcommand(1);
  app.set_config("--config", "", "sectioned key=value config file; flags override file values");
  app.allow_config_extras(false);

  std::uint64_t seed = 1;
  std::string output;
  int threads_flag = 0;
  bool no_simd = false;
  app.add_option("--seed", seed, "root RNG seed")->capture_default_str();
  app.add_option("--output,-o", output, "output path (default stdout)");
  app.add_option("--threads", threads_flag, "worker threads (0 = hardware)");
  app.add_flag("--no-simd", no_simd, "force scalar kernels");

  // --- thresholds ---
  auto* cmd_thresholds = app.add_subcommand("thresholds", "distortion thresholds for a class");
  int th_n = 2;
  double th_alpha = 0.1, th_lambda = 1.0, th_Lambda = 1.0;
  cmd_thresholds->add_option("--n", th_n, "dimension")->required();
  cmd_thresholds->add_option("--alpha", th_alpha, "Holder exponent in (0,1)")->required();
  cmd_thresholds->add_option("--lambda", th_lambda, "lower bound (for tau and the trace bound)");
  cmd_thresholds->add_option("--Lambda", th_Lambda, "upper bound");

  // --- coupling ---
  auto* cmd_coupling = app.add_subcommand("coupling", "optimal/mirror coupling for a matrix pair");
  std::string cp_a1, cp_a2, cp_dir;
  double cp_alpha = 0.5;
  cmd_coupling->add_option("--a1", cp_a1, "matrix A1 as 'a,b;c,d'")->required();
  cmd_coupling->add_option("--a2", cp_a2, "matrix A2 (defaults to A1)");
  cmd_coupling->add_option("--alpha", cp_alpha, "Holder exponent")->required();
  cmd_coupling->add_option("--direction", cp_dir, "coupling direction (default e1)");

  // --- verify ---
  auto* cmd_verify = app.add_subcommand("verify", "key inequality + medium-distance checks");
  FieldOptions vf_field;
  vf_field.attach(cmd_verify);
  double vf_alpha = 0.1, vf_r = 1.0, vf_supu = 1.0, vf_eps = 1e-8;
  int vf_pairs = 10;
  long long vf_samples = 1000000;
  cmd_verify->add_option("--alpha", vf_alpha, "Holder exponent");
  cmd_verify->add_option("--r", vf_r, "ball radius of the estimate");
  cmd_verify->add_option("--sup-u", vf_supu, "bound on |u| over B_2r");
  cmd_verify->add_option("--eps", vf_eps, "step scale");
  cmd_verify->add_option("--pairs", vf_pairs, "sampled (x,z) pairs per regime");
  cmd_verify->add_option("--samples", vf_samples, "MC samples for the annular averages");

  // --- solve ---
  auto* cmd_solve = app.add_subcommand("solve", "grid fixed-point solve of the mean-value equation");
  FieldOptions sv_field;
  sv_field.attach(cmd_solve);
  double sv_radius = 1.0, sv_eps = 0.125, sv_h = 0.0, sv_tol = 1e-7;
  long long sv_maxit = 500000;
  std::string sv_payoff = "affine:1,0,0";
  std::string sv_csv;
  cmd_solve->add_option("--radius", sv_radius, "ball domain radius");
  cmd_solve->add_option("--eps", sv_eps, "step scale")->required();
  cmd_solve->add_option("--spacing", sv_h, "grid spacing h (default eps/4)");
  cmd_solve->add_option("--tol", sv_tol, "fixed-point tolerance");
  cmd_solve->add_option("--max-iters", sv_maxit, "iteration cap");
  cmd_solve->add_option("--payoff", sv_payoff, "payoff spec (affine:...|quadratic:...|sinusoid:...)");
  cmd_solve->add_option("--csv", sv_csv, "grid CSV output path");

  // --- walk ---
  auto* cmd_walk = app.add_subcommand("walk", "Monte Carlo payoff estimate from x0");
  FieldOptions wk_field;
  wk_field.attach(cmd_walk);
  std::string wk_x0 = "0,0";
  double wk_radius = 1.0, wk_eps = 0.125;
  long long wk_walks = 10000, wk_cap = 1000000;
  std::string wk_payoff = "affine:1,0,0";
  cmd_walk->add_option("--x0", wk_x0, "start point 'a,b'");
  cmd_walk->add_option("--radius", wk_radius, "ball domain radius");
  cmd_walk->add_option("--eps", wk_eps, "step scale")->required();
  cmd_walk->add_option("--walks", wk_walks, "number of walks");
  cmd_walk->add_option("--step-cap", wk_cap, "per-walk step cap");
  cmd_walk->add_option("--payoff", wk_payoff, "payoff spec");

  // --- coupled-walk ---
  auto* cmd_cw = app.add_subcommand("coupled-walk", "coupled pair of walks, meeting statistics");
  FieldOptions cw_field;
  cw_field.attach(cmd_cw);
  std::string cw_x0 = "0.1,0", cw_z0 = "-0.1,0", cw_strategy = "mirror";
  double cw_radius = 1.0, cw_eps = 0.125, cw_alpha = 0.5;
  long long cw_runs = 1000, cw_cap = 1000000;
  cmd_cw->add_option("--x0", cw_x0, "first start point");
  cmd_cw->add_option("--z0", cw_z0, "second start point");
  cmd_cw->add_option("--strategy", cw_strategy, "optimal|mirror|identity")
      ->check(CLI::IsMember({"optimal", "mirror", "identity"}));
  cmd_cw->add_option("--alpha", cw_alpha, "weight exponent for the optimal strategy");
  cmd_cw->add_option("--radius", cw_radius, "ball domain radius");
  cmd_cw->add_option("--eps", cw_eps, "step scale")->required();
  cmd_cw->add_option("--runs", cw_runs, "number of coupled runs");
  cmd_cw->add_option("--step-cap", cw_cap, "per-run step cap");

  // --- holder ---
  auto* cmd_holder = app.add_subcommand("holder", "empirical Holder quotients across eps values");
  FieldOptions hd_field;
  hd_field.attach(cmd_holder);
  double hd_radius = 1.0, hd_alpha = 0.1, hd_rinner = 0.5, hd_tol = 1e-6;
  std::vector<double> hd_eps{0.125, 0.0625};
  std::string hd_payoff = "sinusoid:3,2,1";
  cmd_holder->add_option("--radius", hd_radius, "ball domain radius");
  cmd_holder->add_option("--alpha", hd_alpha, "Holder exponent");
  cmd_holder->add_option("--r-inner", hd_rinner, "quotient ball radius");
  cmd_holder->add_option("--eps", hd_eps, "step scales (repeatable)");
  cmd_holder->add_option("--tol", hd_tol, "solver tolerance");
  cmd_holder->add_option("--payoff", hd_payoff, "payoff spec");

  // --- counterexample ---
  auto* cmd_ce = app.add_subcommand("counterexample", "large-distortion projection counterexamples");
  std::string ce_case = "2d";
  long long ce_samples = 1000000;
  int ce_grid = 0;
  cmd_ce->add_option("--case", ce_case, "2d|3d")->check(CLI::IsMember({"2d", "3d"}));
  cmd_ce->add_option("--samples", ce_samples, "MC samples per coupling");
  cmd_ce->add_option("--grid", ce_grid, "couplings per class (2d) / Haar samples (3d); 0 = default");

  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  if (no_simd) kernels::set_force_scalar(true);
  int threads = resolve_threads(threads_flag);

  try {
    if (*cmd_thresholds) {
      json cfg{{"n", th_n}, {"alpha", th_alpha}, {"lambda", th_lambda}, {"Lambda", th_Lambda}};
      EllipticityClass cls(th_n, th_lambda, th_Lambda);
      Thresholds t = thresholds(cls, th_alpha);
      json rep;
      rep["provenance"] = provenance("thresholds", seed, cfg);
      rep["thresholds"] = {{"optimal", t.optimal},
                           {"limit", t.limit},
                           {"mirror", t.mirror},
                           {"diagonal", t.diagonal}};
      rep["tau"] = tau(cls, th_alpha);
      rep["min_trace_bound"] = min_trace_bound(cls, th_alpha);
      emit(rep, output);
      return 0;
    }

    if (*cmd_coupling) {
      SymMatrix a1 = SymMatrix::from(parse_matrix_arg(cp_a1), 1e-9);
      SymMatrix a2 = cp_a2.empty() ? a1 : SymMatrix::from(parse_matrix_arg(cp_a2), 1e-9);
      int n = a1.dim();
      WeightMatrix w = cp_dir.empty() ? WeightMatrix(n, cp_alpha)
                                      : WeightMatrix(n, cp_alpha, parse_vec_arg(cp_dir));
      CouplingResult opt = optimal_coupling(a1, a2, w);
      OrthoMatrix j0 = mirror_coupling(w);
      double mirror_obj = trace_objective(a1, a2, j0, w);
      json cfg{{"a1", cp_a1}, {"a2", cp_a2.empty() ? cp_a1 : cp_a2}, {"alpha", cp_alpha},
               {"direction", cp_dir}};
      json rep;
      rep["provenance"] = provenance("coupling", seed, cfg);
      rep["objective"] = opt.objective;
      rep["half_objective"] = 0.5 * opt.objective;
      rep["negative"] = opt.negative;
      rep["q"] = matrix_json(opt.q.mat());
      rep["mirror_objective"] = mirror_obj;
      rep["mirror_half_objective"] = 0.5 * mirror_obj;
      emit(rep, output);
      return 0;
    }

    if (*cmd_verify) {
      CoefficientField field = vf_field.build();
      const EllipticityClass& cls = field.cls();
      ComparisonConstants k = build_constants(cls, vf_alpha, vf_r, vf_supu);
      Rng rng(seed);
      IntegratorSpec spec;
      spec.mc_samples = vf_samples;
      spec.seed = seed ^ 0xabcdULL;

      json pairs_json = json::array();
      bool all_positive = true;
      double sqrt_lambda_eps = std::sqrt(cls.lambda) * vf_eps;
      // large-distance pairs: beyond (N+3) sqrt(lambda) eps the annular term
      // is certifiably absent
      {
        double lo = (static_cast<double>(k.N) + 3.0) * sqrt_lambda_eps * 1.01;
        if (lo >= 1.8 * vf_r)
          throw std::invalid_argument(
              "verify: eps too large for the ledger (N sqrt(lambda) eps = " +
              std::to_string(static_cast<double>(k.N) * sqrt_lambda_eps) +
              " leaves no large-distance pairs inside B_r); lower --eps");
      }
      for (int p = 0; p < vf_pairs; ++p) {
        double lo = (static_cast<double>(k.N) + 3.0) * sqrt_lambda_eps * 1.01;
        double hi = 1.8 * vf_r;
        double dist = lo * std::pow(hi / lo, rng.uniform());
        Vec dir = sphere_point(cls.n, rng);
        Vec mid(cls.n);
        for (int i = 0; i < cls.n; ++i) mid[i] = rng.uniform(-0.05, 0.05) * vf_r;
        Vec x = mid + dir * (0.5 * dist);
        Vec z = mid - dir * (0.5 * dist);
        if (x.norm() > vf_r || z.norm() > vf_r) {
          --p;
          continue;
        }
        OrthoMatrix q = coupling_for_pair(x, z, field, vf_alpha);
        VerifyResult vr = verify_key_inequality(x, z, field, q, vf_eps, k, spec);
        all_positive = all_positive && vr.positive;
        json pj;
        pj["x"] = vec_json(x);
        pj["z"] = vec_json(z);
        pj["distance"] = dist;
        pj["branch"] = vr.branch == VerifyBranch::large_distance ? "large" : "medium";
        pj["margin"] = vr.margin;
        pj["margin_rel"] = vr.margin_rel;
        pj["positive"] = vr.positive;
        pj["conclusive"] = vr.conclusive;
        pairs_json.push_back(pj);
      }

      // medium-distance annular lower bounds
      json medium_json = json::array();
      bool all_hold = true;
      for (int p = 0; p < vf_pairs; ++p) {
        double dist = rng.uniform(0.6, std::min<double>(static_cast<double>(k.N), 50.0)) *
                      sqrt_lambda_eps;
        Vec dir = sphere_point(cls.n, rng);
        Vec x = dir * (0.5 * dist);
        Vec z = dir * (-0.5 * dist);
        F2AverageCheck chk = f2_average_lower_bound_check(x, z, field, vf_eps, k, vf_samples, rng);
        all_hold = all_hold && chk.holds;
        json mj;
        mj["distance"] = dist;
        mj["lhs_over_f2"] = chk.lhs_rel;
        mj["rhs_over_f2"] = chk.rhs_rel;
        mj["holds"] = chk.holds;
        medium_json.push_back(mj);
      }

      json cfg = vf_field.echo();
      cfg["alpha"] = vf_alpha;
      cfg["r"] = vf_r;
      cfg["sup_u"] = vf_supu;
      cfg["eps"] = vf_eps;
      cfg["pairs"] = vf_pairs;
      cfg["samples"] = vf_samples;
      json rep;
      rep["provenance"] = provenance("verify", seed, cfg);
      rep["ledger"] = {{"alpha", k.alpha},         {"C", k.C},
                       {"C_tilde", k.C_tilde},     {"N", k.N},
                       {"r", k.r},                 {"sup_u", k.sup_u},
                       {"gamma_short", k.gamma_short}, {"gamma_medium", k.gamma_medium}};
      rep["key_inequality"] = pairs_json;
      rep["f2_lower_bound"] = medium_json;
      rep["all_margins_positive"] = all_positive;
      rep["all_f2_bounds_hold"] = all_hold;
      emit(rep, output);
      return all_positive && all_hold ? 0 : 2;
    }

    if (*cmd_solve) {
      CoefficientField field = sv_field.build();
      double h = sv_h > 0.0 ? sv_h : sv_eps / 4.0;
      Domain dom = Domain::ball(Vec(field.cls().n), sv_radius);
      Payoff payoff = parse_payoff(sv_payoff, field.cls().n);
      SolveOptions opts;
      opts.tol = sv_tol;
      opts.max_iters = sv_maxit;
      opts.threads = threads;
      GridSolution sol = solve_dpp(field, dom, payoff, sv_eps, h, opts);
      if (!sv_csv.empty()) sol.write_csv(sv_csv);
      json cfg = sv_field.echo();
      cfg["radius"] = sv_radius;
      cfg["eps"] = sv_eps;
      cfg["h"] = h;
      cfg["tol"] = sv_tol;
      cfg["payoff"] = sv_payoff;
      json rep;
      rep["provenance"] = provenance("solve", seed, cfg);
      rep["residual"] = sol.residual();
      rep["iterations"] = sol.iterations();
      rep["converged"] = sol.converged();
      rep["nodes"] = sol.node_count();
      rep["interior_nodes"] = sol.interior_count();
      if (!sv_csv.empty()) rep["csv"] = sv_csv;
      std::ostringstream sidecar;
      sol.write_sidecar_json(sidecar);
      rep["sidecar"] = json::parse(sidecar.str());
      emit(rep, output);
      return sol.converged() ? 0 : 2;
    }

    if (*cmd_walk) {
      CoefficientField field = wk_field.build();
      Vec x0 = parse_vec_arg(wk_x0);
      Domain dom = Domain::ball(Vec(field.cls().n), wk_radius);
      Payoff payoff = parse_payoff(wk_payoff, field.cls().n);
      WalkEstimate est = estimate_value(field, dom, payoff, x0, wk_eps, wk_walks, seed, wk_cap);
      json cfg = wk_field.echo();
      cfg["x0"] = wk_x0;
      cfg["radius"] = wk_radius;
      cfg["eps"] = wk_eps;
      cfg["walks"] = wk_walks;
      cfg["payoff"] = wk_payoff;
      json rep;
      rep["provenance"] = provenance("walk", seed, cfg);
      rep["mean"] = est.mean;
      rep["std_error"] = est.std_error;
      rep["walks"] = est.walks;
      rep["truncated"] = est.truncated;
      rep["mean_steps"] = est.mean_steps;
      emit(rep, output);
      return 0;
    }

    if (*cmd_cw) {
      CoefficientField field = cw_field.build();
      Vec x0 = parse_vec_arg(cw_x0);
      Vec z0 = parse_vec_arg(cw_z0);
      Domain dom = Domain::ball(Vec(field.cls().n), cw_radius);
      CouplingStrategy strategy = cw_strategy == "optimal"   ? CouplingStrategy::optimal
                                  : cw_strategy == "mirror"  ? CouplingStrategy::mirror
                                                             : CouplingStrategy::identity;
      long long met = 0, exited = 0, truncated = 0, fallbacks = 0;
      double mean_meet_step = 0.0, mean_final_sep = 0.0;
      for (long long r = 0; r < cw_runs; ++r) {
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(r));
        CoupledWalkStats st =
            coupled_walk(field, dom, x0, z0, cw_eps, strategy, cw_alpha, rng, cw_cap);
        if (st.met) {
          ++met;
          mean_meet_step += static_cast<double>(*st.meet_step);
        }
        if (st.exit_step) ++exited;
        if (st.truncated) ++truncated;
        fallbacks += st.overlap_fallbacks;
        mean_final_sep += st.final_separation;
      }
      json cfg = cw_field.echo();
      cfg["x0"] = cw_x0;
      cfg["z0"] = cw_z0;
      cfg["strategy"] = cw_strategy;
      cfg["alpha"] = cw_alpha;
      cfg["radius"] = cw_radius;
      cfg["eps"] = cw_eps;
      cfg["runs"] = cw_runs;
      json rep;
      rep["provenance"] = provenance("coupled-walk", seed, cfg);
      rep["runs"] = cw_runs;
      rep["met"] = met;
      rep["meeting_frequency"] = static_cast<double>(met) / static_cast<double>(cw_runs);
      rep["mean_meet_step"] = met > 0 ? mean_meet_step / static_cast<double>(met) : 0.0;
      rep["exited"] = exited;
      rep["truncated"] = truncated;
      rep["overlap_fallbacks"] = fallbacks;
      rep["mean_final_separation"] = mean_final_sep / static_cast<double>(cw_runs);
      emit(rep, output);
      return 0;
    }

    if (*cmd_holder) {
      CoefficientField field = hd_field.build();
      Domain dom = Domain::ball(Vec(field.cls().n), hd_radius);
      Payoff payoff = parse_payoff(hd_payoff, field.cls().n);
      json quotients = json::array();
      bool all_converged = true;
      for (double eps : hd_eps) {
        SolveOptions opts;
        opts.tol = hd_tol;
        opts.threads = threads;
        GridSolution sol = solve_dpp(field, dom, payoff, eps, eps / 4.0, opts);
        all_converged = all_converged && sol.converged();
        HolderEstimate he = holder_estimate(sol, hd_alpha, hd_rinner);
        json qj;
        qj["eps"] = eps;
        qj["quotient"] = he.quotient;
        qj["argmax_x"] = vec_json(he.x);
        qj["argmax_z"] = vec_json(he.z);
        qj["residual"] = sol.residual();
        qj["converged"] = sol.converged();
        quotients.push_back(qj);
      }
      json cfg = hd_field.echo();
      cfg["radius"] = hd_radius;
      cfg["alpha"] = hd_alpha;
      cfg["r_inner"] = hd_rinner;
      cfg["eps"] = hd_eps;
      cfg["tol"] = hd_tol;
      cfg["payoff"] = hd_payoff;
      json rep;
      rep["provenance"] = provenance("holder", seed, cfg);
      rep["quotients"] = quotients;
      emit(rep, output);
      return all_converged ? 0 : 2;
    }

    if (*cmd_ce) {
      Rng rng(seed);
      CounterexampleReport cer;
      if (ce_case == "2d") {
        int grid = ce_grid > 0 ? ce_grid : 720;
        cer = counterexample_2d(ce_samples, grid, rng);
      } else {
        int grid = ce_grid > 0 ? ce_grid : 1000;
        cer = counterexample_3d(ce_samples, grid, rng);
      }
      json cfg{{"case", ce_case}, {"samples", ce_samples}, {"grid", ce_grid}};
      json rep;
      rep["provenance"] = provenance("counterexample", seed, cfg);
      rep["dim"] = cer.dim;
      rep["parallel_bound"] = cer.parallel_bound;
      rep["orthogonal_floor"] = cer.orthogonal_floor;
      rep["volume"] = cer.volume;
      rep["all_violated"] = cer.all_violated;
      rep["samples_per_coupling"] = cer.samples_per_coupling;
      json recs = json::array();
      for (const SweepRecord& r : cer.couplings) recs.push_back(sweep_record_json(r));
      rep["couplings"] = recs;
      emit(rep, output);
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
