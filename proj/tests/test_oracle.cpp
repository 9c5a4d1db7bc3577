#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "popfj/oracle.hpp"
#include "popfj/relax.hpp"

using namespace popfj;

namespace {

PopProblem make(const std::string& name, const std::vector<std::string>& vars,
                const std::string& f, const std::vector<std::string>& gs) {
  PopProblem p;
  p.name = name;
  p.f = parse_polynomial(f, vars);
  for (const auto& s : gs) p.g.push_back(parse_polynomial(s, vars));
  return p;
}

}  // namespace

TEST_CASE("reference minima of the worked examples") {
  PopProblem e2 = make("example2", {"x1", "x2"}, "(x1+1)^2 + x2^2 - 1", {"x1^3 - x2^2"});
  GridResult r2 = grid_minimize(e2, -2.0, 2.0, 0.05);
  REQUIRE(r2.found);
  CHECK(std::fabs(r2.value) < 1e-6);

  PopProblem e1 = make("example1", {"x"}, "x", {"-x^2"});
  GridResult r1 = grid_minimize(e1, -2.0, 2.0, 0.05);
  REQUIRE(r1.found);
  CHECK(std::fabs(r1.value) < 1e-4);

  PopProblem ball = make("ball", {"x1", "x2"}, "x1", {"1 - x1^2 - x2^2"});
  GridResult rb = grid_minimize(ball, -2.0, 2.0, 0.05);
  REQUIRE(rb.found);
  CHECK(rb.value == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("refining the grid never raises the raw minimum") {
  PopProblem box = make("box", {"x1", "x2"}, "x1^3 - x1 + x2^2", {"1 - x1^2", "1 - x2^2"});
  GridResult coarse = grid_minimize(box, -2.0, 2.0, 0.1);
  GridResult fine = grid_minimize(box, -2.0, 2.0, 0.05);
  REQUIRE(coarse.found);
  REQUIRE(fine.found);
  CHECK(fine.grid_value <= coarse.grid_value + 1e-12);
  CHECK(fine.value <= coarse.value + 1e-9);
}

TEST_CASE("infeasible boxes are reported, not fabricated") {
  PopProblem far = make("far", {"x1"}, "x1", {"x1 - 10"});
  GridResult r = grid_minimize(far, -2.0, 2.0, 0.1);
  CHECK_FALSE(r.found);
}

TEST_CASE("dimension guard rejects large grids") {
  std::vector<std::string> vs = {"x1", "x2", "x3", "x4", "x5"};
  PopProblem big;
  big.name = "big";
  big.f = parse_polynomial("x1 + x2 + x3 + x4 + x5", vs);
  CHECK_THROWS(grid_minimize(big, -1.0, 1.0, 0.5));
}

TEST_CASE("system-residual scans separate solvable from empty varieties") {
  PopProblem e1 = make("example1", {"x"}, "x", {"-x^2"});
  FjSystem s1 = build_fj_system(e1);
  GridResult hit = grid_min_residual(s1, -2.0, 2.0, 0.05);
  REQUIRE(hit.found);
  CHECK(hit.grid_value < 1e-12);  // (0, 0, +/-1) lies on the grid

  PopProblem na = make("na", {"x1", "x2"}, "x1", {"x1*x2^2 - 1"});
  FjSystem sna = build_fj_system(na);
  GridResult miss = grid_min_residual(sna, -2.0, 2.0, 0.05);
  REQUIRE(miss.found);
  CHECK(miss.grid_value >= 1e-3);
}

TEST_CASE("oracle dominates the relaxation bounds") {
  PopProblem ball = make("ball", {"x1", "x2"}, "x1", {"1 - x1^2 - x2^2"});
  GridResult oracle = grid_minimize(ball, -2.0, 2.0, 0.05);
  REQUIRE(oracle.found);
  RelaxOptions opt;
  opt.k = 2;
  Relaxation R = build_sos(ball.f, ball.g, {}, opt);
  SdpSolution sol = solve(R.sdp);
  REQUIRE(sol.status == SdpStatus::OPTIMAL);
  CHECK(-sol.primal_objective <= oracle.value + 1e-4);
}
