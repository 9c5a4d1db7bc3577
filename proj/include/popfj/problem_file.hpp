#pragma once

#include <optional>
#include <string>

#include "popfj/fjsys.hpp"

namespace popfj {

// Defaults a problem file may carry; command-line flags win over these.
struct ProblemOptions {
  std::optional<std::string> mode;  // none | fj | fj-plus
  std::optional<int> kmin;
  std::optional<int> kmax;
};

struct ProblemFile {
  PopProblem problem;
  ProblemOptions options;
};

// JSON schema:
//   { "name": str, "variables": [str,...], "objective": expr,
//     "inequalities": [expr,...],
//     "options": { "mode": str, "kmin": int, "kmax": int } }   (options optional)
// Expressions use the polynomial grammar: terms of numeric literals and
// variables combined with + - * ^ and parentheses; juxtaposition multiplies.
ProblemFile parse_problem_json(const std::string& text);
ProblemFile load_problem(const std::string& path);

// Canonical re-emission; emit(parse(emit(p))) == emit(p).
std::string emit_problem_json(const ProblemFile& pf);

}  // namespace popfj
