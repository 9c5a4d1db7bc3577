#include "popfj/oracle.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "popfj/kernels.hpp"

namespace popfj {

namespace {

// Polynomial flattened for tight grid loops, with per-axis power tables.
struct FlatPoly {
  struct Term {
    double c;
    int e[8];
  };
  std::vector<Term> terms;
  int nv = 0;

  static FlatPoly from(const Polynomial& p) {
    FlatPoly fp;
    fp.nv = p.n_vars();
    if (fp.nv > 8) throw std::invalid_argument("grid oracle supports at most 8 variables");
    for (const auto& [m, c] : p.terms()) {
      Term t{};
      t.c = c;
      for (int i = 0; i < fp.nv; ++i) t.e[i] = m.e[i];
      fp.terms.push_back(t);
    }
    return fp;
  }

  // pw[i] points at the power table of axis i: pw[i][e] = x_i^e
  double eval_pw(const double* const* pw) const {
    double s = 0.0;
    for (const auto& t : terms) {
      double v = t.c;
      for (int i = 0; i < nv; ++i) v *= pw[i][t.e[i]];
      s += v;
    }
    return s;
  }
};

struct Grid {
  int nv = 0;
  int npts = 0;
  std::vector<double> coords;          // shared axis coordinates
  std::vector<std::vector<double>> pw; // pw[point][exponent] per axis point
  int max_deg = 0;

  Grid(int nv_, double lo, double hi, double res, int max_deg_)
      : nv(nv_), max_deg(max_deg_) {
    npts = static_cast<int>(std::floor((hi - lo) / res + 0.5)) + 1;
    for (int i = 0; i < npts; ++i) coords.push_back(lo + i * res);
    pw.resize(npts);
    for (int i = 0; i < npts; ++i) {
      pw[i].resize(max_deg + 1);
      pw[i][0] = 1.0;
      for (int e = 1; e <= max_deg; ++e) pw[i][e] = pw[i][e - 1] * coords[i];
    }
  }

  std::int64_t total() const {
    std::int64_t t = 1;
    for (int i = 0; i < nv; ++i) t *= npts;
    return t;
  }

  void decode(std::int64_t idx, int* out) const {
    for (int i = nv - 1; i >= 0; --i) {
      out[i] = static_cast<int>(idx % npts);
      idx /= npts;
    }
  }

  std::vector<double> point(std::int64_t idx) const {
    int ix[8];
    decode(idx, ix);
    std::vector<double> x(nv);
    for (int i = 0; i < nv; ++i) x[i] = coords[ix[i]];
    return x;
  }
};

int max_degree(const std::vector<const Polynomial*>& ps) {
  int d = 0;
  for (const auto* p : ps) d = std::max(d, p->degree());
  return std::max(d, 1);
}

double eval_at(const std::vector<FlatPoly>& fps, const Grid& grid, std::int64_t idx,
               double feas_slack, size_t n_cons) {
  int ix[8];
  grid.decode(idx, ix);
  const double* pw[8];
  for (int i = 0; i < grid.nv; ++i) pw[i] = grid.pw[ix[i]].data();
  for (size_t j = 0; j < n_cons; ++j)
    if (fps[1 + j].eval_pw(pw) < -feas_slack) return 1e300;
  return fps[0].eval_pw(pw);
}

}  // namespace

GridResult grid_minimize(const PopProblem& prob, double lo, double hi, double resolution,
                         double feas_slack, int jobs) {
  const int n = prob.n_vars();
  if (n > 4) throw std::invalid_argument("grid_minimize: more than 4 variables");
  GridResult res;

  std::vector<const Polynomial*> ps{&prob.f};
  for (const auto& gj : prob.g) ps.push_back(&gj);
  Grid grid(n, lo, hi, resolution, max_degree(ps));
  std::vector<FlatPoly> fps;
  fps.push_back(FlatPoly::from(prob.f));
  for (const auto& gj : prob.g) fps.push_back(FlatPoly::from(gj));

  std::int64_t best = kernels::grid_argmin(
      grid.total(),
      [&](std::int64_t i) { return eval_at(fps, grid, i, feas_slack, prob.g.size()); },
      jobs);
  double bv = eval_at(fps, grid, best, feas_slack, prob.g.size());
  if (bv >= 1e299) return res;  // no feasible grid point: reported, not fatal

  res.found = true;
  res.x = grid.point(best);
  res.grid_value = bv;

  // coordinate-descent polish inside the box, keeping feasibility
  auto feasible = [&](const std::vector<double>& x) {
    for (const auto& gj : prob.g)
      if (evaluate(gj, x) < -feas_slack) return false;
    return true;
  };
  double cur = evaluate(prob.f, res.x);
  double step = resolution;
  for (int sweep = 0; sweep < 400 && step > 1e-9; ++sweep) {
    bool improved = false;
    for (int i = 0; i < n; ++i) {
      for (double s : {step, -step}) {
        std::vector<double> cand = res.x;
        cand[i] += s;
        if (cand[i] < lo - 1e-12 || cand[i] > hi + 1e-12) continue;
        if (!feasible(cand)) continue;
        double v = evaluate(prob.f, cand);
        if (v < cur - 1e-15) {
          res.x = cand;
          cur = v;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  res.value = cur;
  return res;
}

GridResult grid_min_residual(const FjSystem& sys, double lo, double hi, double resolution,
                             int jobs) {
  const int n = static_cast<int>(sys.ext_vars.size());
  if (n > 8) throw std::invalid_argument("grid_min_residual: more than 8 variables");
  GridResult res;

  std::vector<FlatPoly> fps;
  std::vector<const Polynomial*> ps;
  for (const auto& ht : sys.h) {
    fps.push_back(FlatPoly::from(ht));
    ps.push_back(&ht);
  }
  Grid grid(n, lo, hi, resolution, max_degree(ps));

  auto value = [&](std::int64_t idx) {
    int ix[8];
    grid.decode(idx, ix);
    const double* pw[8];
    for (int i = 0; i < n; ++i) pw[i] = grid.pw[ix[i]].data();
    double r = 0.0;
    for (const auto& fp : fps) r = std::max(r, std::fabs(fp.eval_pw(pw)));
    return r;
  };
  std::int64_t best = kernels::grid_argmin(grid.total(), value, jobs);
  res.found = true;
  res.x = grid.point(best);
  res.value = res.grid_value = value(best);
  return res;
}

}  // namespace popfj
