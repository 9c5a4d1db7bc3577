#pragma once

#include <vector>

#include "popfj/fjsys.hpp"

namespace popfj {

struct GridResult {
  bool found = false;       // some grid point satisfied all constraints
  double value = 0.0;       // polished objective at the best feasible point
  std::vector<double> x;
  double grid_value = 0.0;  // objective before polish
};

// Brute-force reference minimum of f over {g >= -feas_slack} restricted to the
// box [lo, hi]^n, scanned at `resolution` spacing and refined by coordinate
// descent. Guards n <= 4; an infeasible grid is reported, not fatal.
GridResult grid_minimize(const PopProblem& prob, double lo, double hi, double resolution,
                         double feas_slack = 1e-9, int jobs = 0);

// max_t |h_t| minimized over the grid; used to probe whether a system has
// solutions in a box.
GridResult grid_min_residual(const FjSystem& sys, double lo, double hi, double resolution,
                             int jobs = 0);

}  // namespace popfj
