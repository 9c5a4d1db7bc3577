#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "popfj/certify.hpp"
#include "popfj/fjsys.hpp"
#include "popfj/oracle.hpp"
#include "popfj/problem_file.hpp"
#include "popfj/relax.hpp"
#include "popfj/sdp.hpp"

namespace {

using namespace popfj;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double env_default_tol() {
  if (const char* s = std::getenv("POPFJ_SOLVER_TOL")) {
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (end != s && v > 0) return v;
  }
  return 1e-8;
}

SolverConfig make_config(double tol, int max_iter, int jobs, int verbose) {
  SolverConfig cfg;
  cfg.feas_tol = tol;
  cfg.gap_tol = tol;
  cfg.max_iter = max_iter;
  cfg.jobs = jobs;
  cfg.verbose = verbose;
  return cfg;
}

struct ModeBuild {
  Polynomial f;
  std::vector<Polynomial> g;
  std::vector<Polynomial> h;
  std::vector<std::string> vars;
};

// mode none: relax (f, g) directly; fj / fj-plus: relax the lifted problem
// with the first-order system as equality constraints.
ModeBuild build_mode(const PopProblem& prob, const std::string& mode) {
  ModeBuild mb;
  if (mode != "none" && mode != "fj" && mode != "fj-plus")
    throw std::runtime_error("mode must be none, fj, or fj-plus (got '" + mode + "')");
  if (mode == "none") {
    mb.f = prob.f;
    mb.g = prob.g;
    mb.vars = prob.vars();
    return mb;
  }
  FjSystem sys = (mode == "fj") ? build_fj_system(prob) : build_fj_plus_system(prob);
  mb.f = sys.f_ext;
  mb.g = sys.g_ext;
  mb.h = sys.h;
  mb.vars = sys.ext_vars;
  return mb;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct HierarchyRow {
  int k = 0;
  double value = std::nan("");
  double time = 0.0;
  SizeQuadruple sizes;
  std::string status;
  bool optimal = false;
};

int cmd_hierarchy(const std::string& path, std::string mode, int kmin, int kmax,
                  bool preordering, bool sign_symmetry, double tol, int max_iter, int jobs,
                  int verbose, const std::string& csv_path, const std::string& dump_dir) {
  ProblemFile pf = load_problem(path);
  if (mode.empty()) mode = pf.options.mode.value_or("none");
  if (kmin <= 0) kmin = pf.options.kmin.value_or(1);
  if (kmax <= 0) kmax = pf.options.kmax.value_or(kmin);
  if (kmax < kmin) kmax = kmin;

  ModeBuild mb = build_mode(pf.problem, mode);
  std::vector<HierarchyRow> rows;
  std::printf("problem %s  mode %s  k = %d..%d%s%s\n", pf.problem.name.c_str(), mode.c_str(),
              kmin, kmax, preordering ? "  [preordering]" : "",
              sign_symmetry ? "  [sign-symmetry]" : "");
  std::printf("%4s %14s %9s %10s %9s %9s %9s  %s\n", "k", "bound", "time_s", "max_block",
              "n_affine", "n_scalar", "n_matrix", "status");
  for (int k = kmin; k <= kmax; ++k) {
    HierarchyRow row;
    row.k = k;
    auto t0 = Clock::now();
    try {
      RelaxOptions opt;
      opt.k = k;
      opt.preordering = preordering;
      opt.sign_symmetry = sign_symmetry;
      Relaxation relax = build_sos(mb.f, mb.g, mb.h, opt);
      if (!dump_dir.empty()) {
        std::filesystem::create_directories(dump_dir);
        std::ostringstream name;
        name << pf.problem.name << "_" << mode << "_k" << k << ".dat";
        std::ofstream out(std::filesystem::path(dump_dir) / name.str());
        dump_sdpa(relax.sdp, out);
      }
      SdpSolution sol = solve(relax.sdp, make_config(tol, max_iter, jobs, verbose));
      row.time = seconds_since(t0);
      row.value = -sol.primal_objective;  // relaxation minimizes -xi
      row.sizes = relax.sizes;
      row.status = to_string(sol.status);
      row.optimal = sol.status == SdpStatus::OPTIMAL;
    } catch (const std::exception& e) {
      row.time = seconds_since(t0);
      row.status = std::string("ERROR: ") + e.what();
    }
    std::printf("%4d %14.6f %9.2f %10d %9d %9d %9d  %s\n", row.k, row.value, row.time,
                row.sizes.max_block, row.sizes.n_affine, row.sizes.n_scalar,
                row.sizes.n_matrix, row.status.c_str());
    std::fflush(stdout);
    rows.push_back(std::move(row));
  }

  bool all_optimal = true, monotone = true;
  double prev = -std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    all_optimal = all_optimal && r.optimal;
    if (!r.optimal) continue;
    if (r.value < prev - 1e-6) monotone = false;
    prev = std::max(prev, r.value);
  }
  if (!monotone) std::printf("warning: bounds not monotone across OPTIMAL rows\n");

  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    csv << "k,value,time,max_block,n_affine,n_scalar,n_matrix,status\n";
    for (const auto& r : rows) {
      csv << r.k << "," << std::setprecision(12) << r.value << "," << r.time << ","
          << r.sizes.max_block << "," << r.sizes.n_affine << "," << r.sizes.n_scalar << ","
          << r.sizes.n_matrix << "," << csv_escape(r.status) << "\n";
    }
  }
  return (all_optimal && monotone) ? 0 : 1;
}

std::vector<std::vector<double>> collect_points(const std::vector<std::string>& point_args,
                                                const std::string& points_file,
                                                const std::string& grid_spec, int n) {
  std::vector<std::vector<double>> pts;
  for (const auto& s : point_args) {
    std::vector<double> p;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) p.push_back(std::stod(tok));
    pts.push_back(std::move(p));
  }
  if (!points_file.empty()) {
    std::ifstream in(points_file);
    if (!in) throw std::runtime_error("cannot open points file: " + points_file);
    double v;
    std::vector<double> p;
    while (in >> v) {
      p.push_back(v);
      if (static_cast<int>(p.size()) == n) {
        pts.push_back(p);
        p.clear();
      }
    }
    if (!p.empty()) throw std::runtime_error("points file: trailing coordinates");
  }
  if (!grid_spec.empty()) {
    double lo, hi, res;
    if (std::sscanf(grid_spec.c_str(), "%lf,%lf,%lf", &lo, &hi, &res) != 3 || res <= 0 ||
        hi < lo)
      throw std::runtime_error("bad --grid spec, want lo,hi,res");
    int steps = static_cast<int>(std::floor((hi - lo) / res + 1e-9)) + 1;
    std::vector<double> p(n, lo);
    std::vector<int> idx(n, 0);
    while (true) {
      pts.push_back(p);
      int d = 0;
      for (; d < n; ++d) {
        if (++idx[d] < steps) {
          p[d] = lo + idx[d] * res;
          break;
        }
        idx[d] = 0;
        p[d] = lo;
      }
      if (d == n) break;
    }
  }
  return pts;
}

int cmd_critical(const std::string& path, const std::vector<std::string>& point_args,
                 const std::string& points_file, const std::string& grid_spec, bool plus,
                 double tol) {
  ProblemFile pf = load_problem(path);
  const PopProblem& prob = pf.problem;
  auto pts = collect_points(point_args, points_file, grid_spec, prob.n_vars());
  if (pts.empty()) throw std::runtime_error("no points given (use --point/--points/--grid)");
  std::printf("problem %s  test %s  tol %g  (%zu points)\n", prob.name.c_str(),
              plus ? "critical-plus" : "critical", tol, pts.size());
  int members = 0;
  for (const auto& p : pts) {
    if (static_cast<int>(p.size()) != prob.n_vars())
      throw std::runtime_error("point dimension mismatch");
    CriticalResult r = plus ? is_critical_plus(prob, p, tol) : is_critical(prob, p, tol);
    members += r.critical ? 1 : 0;
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
    os << ")";
    std::printf("  %-24s %s", os.str().c_str(), r.critical ? "CRITICAL" : "not critical");
    if (r.critical && r.witness.size() > 0) {
      std::printf("  lambda = [");
      for (int i = 0; i < r.witness.size(); ++i)
        std::printf("%s%.6g", i ? ", " : "", r.witness[i]);
      std::printf("]");
    }
    std::printf("\n");
  }
  std::printf("%d of %zu points %s\n", members, pts.size(),
              plus ? "in C+(g)" : "in C(g)");
  return 0;
}

int cmd_certify(const std::string& path, std::string mode, int k, bool preordering,
                bool sign_symmetry, double tol, int max_iter, int jobs, int verbose,
                const std::string& out_path) {
  ProblemFile pf = load_problem(path);
  if (mode.empty()) mode = pf.options.mode.value_or("none");
  ModeBuild mb = build_mode(pf.problem, mode);
  RelaxOptions opt;
  opt.k = k;
  opt.preordering = preordering;
  opt.sign_symmetry = sign_symmetry;
  Relaxation relax = build_sos(mb.f, mb.g, mb.h, opt);
  SdpSolution sol = solve(relax.sdp, make_config(tol, max_iter, jobs, verbose));
  std::printf("problem %s  mode %s  k=%d  status %s  bound %.8f\n", pf.problem.name.c_str(),
              mode.c_str(), k, to_string(sol.status).c_str(), -sol.primal_objective);
  if (sol.status != SdpStatus::OPTIMAL) {
    std::printf("no certificate: solve did not reach OPTIMAL\n");
    return 1;
  }
  Certificate cert = extract_certificate(relax, sol, mb.h);
  double coeff_tol = default_coeff_tol(cert, mb.f, tol);
  VerifyReport rep = verify_certificate(cert, mb.f, coeff_tol, 1e-7);
  std::printf("verify: identity %s (residual %.3e, tol %.3e), gram %s (min eig %.3e)\n",
              rep.identity_ok ? "ok" : "FAIL", rep.coeff_residual_inf, coeff_tol,
              rep.psd_ok ? "ok" : "FAIL", rep.min_gram_eig);
  if (!out_path.empty()) {
    save_certificate(cert, out_path);
    std::printf("saved certificate to %s\n", out_path.c_str());
  }
  return rep.ok ? 0 : 1;
}

int cmd_verify(const std::string& path, const std::string& cert_path, std::string mode,
               double tol) {
  ProblemFile pf = load_problem(path);
  if (mode.empty()) mode = pf.options.mode.value_or("none");
  ModeBuild mb = build_mode(pf.problem, mode);
  Certificate cert = load_certificate(cert_path);
  Polynomial f = lift(mb.f, cert.vars);
  double coeff_tol = default_coeff_tol(cert, f, tol);
  VerifyReport rep = verify_certificate(cert, f, coeff_tol, 1e-7);
  std::printf("certificate %s  xi %.8f\n", cert_path.c_str(), cert.xi);
  std::printf("verify: identity %s (residual %.3e, tol %.3e), gram %s (min eig %.3e)\n",
              rep.identity_ok ? "ok" : "FAIL", rep.coeff_residual_inf, coeff_tol,
              rep.psd_ok ? "ok" : "FAIL", rep.min_gram_eig);
  std::printf("verdict: %s\n", rep.ok ? "true" : "false");
  return rep.ok ? 0 : 1;
}

int cmd_oracle(const std::string& path, const std::string& box_spec, double res, int jobs) {
  ProblemFile pf = load_problem(path);
  double lo = -2, hi = 2;
  if (!box_spec.empty() &&
      std::sscanf(box_spec.c_str(), "%lf,%lf", &lo, &hi) != 2)
    throw std::runtime_error("bad --box spec, want lo,hi");
  GridResult r = grid_minimize(pf.problem, lo, hi, res, 1e-9, jobs);
  if (!r.found) {
    std::printf("problem %s: no feasible grid point in [%g,%g]^%d at resolution %g\n",
                pf.problem.name.c_str(), lo, hi, pf.problem.n_vars(), res);
    return 1;
  }
  std::ostringstream os;
  for (size_t i = 0; i < r.x.size(); ++i) os << (i ? ", " : "") << r.x[i];
  std::printf("problem %s: grid min %.8f, polished %.8f at (%s)\n", pf.problem.name.c_str(),
              r.grid_value, r.value, os.str().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lower bounds for polynomial optimization via first-order systems"};
  app.require_subcommand(1);
  double tol = env_default_tol();
  int max_iter = 200, jobs = 0, verbose = 0;

  std::string h_path, h_mode, h_csv, h_dump;
  int h_kmin = 0, h_kmax = 0;
  bool h_pre = false, h_ts = false;
  auto* hier = app.add_subcommand("hierarchy", "solve a range of relaxation orders");
  hier->add_option("problem", h_path, "problem JSON file")->required();
  hier->add_option("--mode", h_mode, "none | fj | fj-plus");
  hier->add_option("--kmin", h_kmin, "first order k");
  hier->add_option("--kmax", h_kmax, "last order k");
  hier->add_flag("--preordering", h_pre, "weight all constraint products");
  hier->add_flag("--sign-symmetry", h_ts, "split blocks by term sparsity when available");
  hier->add_option("--tol", tol, "solver feasibility/gap tolerance");
  hier->add_option("--max-iter", max_iter, "interior-point iteration cap");
  hier->add_option("--jobs", jobs, "worker threads (0 = auto)");
  hier->add_option("--csv", h_csv, "write rows to CSV file");
  hier->add_option("--dump-sdp", h_dump, "dump each SDP to this directory");
  hier->add_flag("-v,--verbose", verbose, "print solver iterations");

  std::string c_path, c_points_file, c_grid;
  std::vector<std::string> c_points;
  bool c_plus = false;
  double c_tol = 1e-8;
  auto* crit = app.add_subcommand("critical", "test points for critical-set membership");
  crit->add_option("problem", c_path, "problem JSON file")->required();
  crit->add_option("--point", c_points, "point as comma-separated coordinates (repeatable)");
  crit->add_option("--points", c_points_file, "whitespace-separated coordinate file");
  crit->add_option("--grid", c_grid, "lo,hi,res grid over the box");
  crit->add_flag("--plus", c_plus, "test the nonnegative-multiplier variant");
  crit->add_option("--tol", c_tol, "rank / feasibility tolerance");

  std::string ce_path, ce_mode, ce_out;
  int ce_k = 2;
  bool ce_pre = false, ce_ts = false;
  auto* cert = app.add_subcommand("certify", "solve one order and verify the certificate");
  cert->add_option("problem", ce_path, "problem JSON file")->required();
  cert->add_option("--mode", ce_mode, "none | fj | fj-plus");
  cert->add_option("--k", ce_k, "relaxation order")->required();
  cert->add_flag("--preordering", ce_pre, "weight all constraint products");
  cert->add_flag("--sign-symmetry", ce_ts, "split blocks by term sparsity when available");
  cert->add_option("--tol", tol, "solver tolerance");
  cert->add_option("--max-iter", max_iter, "interior-point iteration cap");
  cert->add_option("--jobs", jobs, "worker threads");
  cert->add_option("--out", ce_out, "save certificate JSON here");
  cert->add_flag("-v,--verbose", verbose, "print solver iterations");

  std::string v_path, v_cert, v_mode;
  auto* ver = app.add_subcommand("verify", "re-check a saved certificate");
  ver->add_option("problem", v_path, "problem JSON file")->required();
  ver->add_option("certificate", v_cert, "certificate JSON file")->required();
  ver->add_option("--mode", v_mode, "none | fj | fj-plus (match the certify run)");
  ver->add_option("--tol", tol, "tolerance scale for the identity check");

  std::string o_path, o_box;
  double o_res = 0.05;
  auto* ora = app.add_subcommand("oracle", "grid-search reference minimum");
  ora->add_option("problem", o_path, "problem JSON file")->required();
  ora->add_option("--box", o_box, "lo,hi search box (default -2,2)");
  ora->add_option("--res", o_res, "grid resolution");
  ora->add_option("--jobs", jobs, "worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (hier->parsed())
      return cmd_hierarchy(h_path, h_mode, h_kmin, h_kmax, h_pre, h_ts, tol, max_iter, jobs,
                           verbose, h_csv, h_dump);
    if (crit->parsed())
      return cmd_critical(c_path, c_points, c_points_file, c_grid, c_plus, c_tol);
    if (cert->parsed())
      return cmd_certify(ce_path, ce_mode, ce_k, ce_pre, ce_ts, tol, max_iter, jobs, verbose,
                         ce_out);
    if (ver->parsed()) return cmd_verify(v_path, v_cert, v_mode, tol);
    if (ora->parsed()) return cmd_oracle(o_path, o_box, o_res, jobs);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
