#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "popfj/polyring.hpp"

using namespace popfj;

namespace {

std::vector<std::string> xs(int n) {
  std::vector<std::string> v;
  for (int i = 1; i <= n; ++i) v.push_back("x" + std::to_string(i));
  return v;
}

Polynomial random_poly(int n, int deg, std::mt19937& rng, bool integer_coeffs = false) {
  Polynomial p(xs(n));
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  std::uniform_int_distribution<int> icoef(-4, 4);
  for (const auto& m : monomial_basis(n, deg)) {
    double c = integer_coeffs ? static_cast<double>(icoef(rng)) : coef(rng);
    if (c != 0) p.add_term(m, c);
  }
  return p;
}

long long choose(int n, int k) {
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

TEST_CASE("parsing matches hand-expanded forms") {
  auto p = parse_polynomial("(x1+1)^2 + x2^2 - 1", xs(2));
  CHECK(p.coeff(Monomial({2, 0})) == 1.0);
  CHECK(p.coeff(Monomial({1, 0})) == 2.0);
  CHECK(p.coeff(Monomial({0, 2})) == 1.0);
  CHECK(p.coeff(Monomial({0, 0})) == 0.0);
  CHECK(p.terms().size() == 3);
  CHECK(p.degree() == 2);

  auto z = parse_polynomial("0", {"x"});
  CHECK(z.is_zero());
  CHECK(z.degree() == 0);

  auto g = parse_polynomial("x1^3 - x2^2", xs(2));
  CHECK(g.terms().size() == 2);
  CHECK(g.degree() == 3);

  auto impl = parse_polynomial("3x1^2 x2 - 0.5", xs(2));
  CHECK(impl.coeff(Monomial({2, 1})) == 3.0);
  CHECK(impl.coeff(Monomial({0, 0})) == -0.5);

  auto sci = parse_polynomial("1e-2 x1 + 2.5E+1", xs(2));
  CHECK(sci.coeff(Monomial({1, 0})) == doctest::Approx(0.01));
  CHECK(sci.coeff(Monomial({0, 0})) == doctest::Approx(25.0));

  CHECK_THROWS(parse_polynomial("x1 +", xs(2)));
  CHECK_THROWS(parse_polynomial("y1", xs(2)));
}

TEST_CASE("print-parse round trip is idempotent") {
  std::mt19937 rng(7);
  for (int it = 0; it < 20; ++it) {
    auto p = random_poly(3, 3, rng);
    std::string s1 = to_string(p);
    auto q = parse_polynomial(s1, p.vars());
    CHECK(to_string(q) == s1);
    CHECK(q.terms().size() == p.terms().size());
    for (const auto& [m, c] : p.terms()) CHECK(q.coeff(m) == c);
  }
}

TEST_CASE("arithmetic identities") {
  auto x1 = Polynomial::variable(0, xs(2));
  auto x2 = Polynomial::variable(1, xs(2));
  auto prod = multiply(x1, x2);
  CHECK(prod.coeff(Monomial({1, 1})) == 1.0);
  CHECK(prod.degree() == 2);

  std::mt19937 rng(11);
  auto p = random_poly(2, 3, rng);
  CHECK(add(p, scale(p, -1.0)).is_zero());
}

TEST_CASE("multiply is commutative and associative on integer-coefficient triples") {
  std::mt19937 rng(3);
  for (int it = 0; it < 10; ++it) {
    auto a = random_poly(2, 2, rng, true);
    auto b = random_poly(2, 2, rng, true);
    auto c = random_poly(2, 2, rng, true);
    auto ab = multiply(a, b);
    auto ba = multiply(b, a);
    CHECK(sub(ab, ba).is_zero());
    auto abc1 = multiply(ab, c);
    auto abc2 = multiply(a, multiply(b, c));
    CHECK(sub(abc1, abc2).is_zero());
  }
}

TEST_CASE("degree is additive under multiplication") {
  std::mt19937 rng(5);
  for (int it = 0; it < 20; ++it) {
    auto a = random_poly(2, 1 + it % 3, rng, true);
    auto b = random_poly(2, 1 + (it / 3) % 3, rng, true);
    if (a.is_zero() || b.is_zero()) continue;
    CHECK(multiply(a, b).degree() == a.degree() + b.degree());
  }
}

TEST_CASE("gradients match the displayed forms") {
  auto g = parse_polynomial("x1^3 - x2^2", xs(2));
  auto grad = gradient(g);
  REQUIRE(grad.size() == 2);
  CHECK(sub(grad[0], parse_polynomial("3x1^2", xs(2))).is_zero());
  CHECK(sub(grad[1], parse_polynomial("-2x2", xs(2))).is_zero());

  auto c = parse_polynomial("5", xs(2));
  CHECK(partial_derivative(c, 0).is_zero());
  CHECK(partial_derivative(c, 1).is_zero());

  auto ball = parse_polynomial("1 - x1^2 - x2^2 - x3^2", xs(3));
  auto gb = gradient(ball);
  for (int i = 0; i < 3; ++i) {
    Polynomial want(xs(3));
    std::vector<int> e(3, 0);
    e[i] = 1;
    want.add_term(Monomial(e), -2.0);
    CHECK(sub(gb[i], want).is_zero());
  }
}

TEST_CASE("partial derivatives match central finite differences") {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> pt(-1.0, 1.0);
  for (int n = 1; n <= 3; ++n) {
    for (int it = 0; it < 6; ++it) {
      auto p = random_poly(n, 4, rng);
      std::vector<double> u(n);
      for (auto& v : u) v = pt(rng);
      const double h = 1e-5;
      for (int i = 0; i < n; ++i) {
        auto up = u, um = u;
        up[i] += h;
        um[i] -= h;
        double fd = (evaluate(p, up) - evaluate(p, um)) / (2 * h);
        double an = evaluate(partial_derivative(p, i), u);
        double scale_ref = std::max({1.0, std::fabs(fd), std::fabs(an)});
        CHECK(std::fabs(fd - an) / scale_ref < 1e-6);
      }
    }
  }
}

TEST_CASE("evaluation examples") {
  auto f = parse_polynomial("(x1+1)^2 + x2^2 - 1", xs(2));
  CHECK(evaluate(f, {0.0, 0.0}) == doctest::Approx(0.0));
  CHECK(evaluate(f, {0.0, 0.0}) == f.coeff(Monomial({0, 0})) + 0.0);  // constant at origin is 0 here
  auto g = parse_polynomial("x1^3 - x2^2", xs(2));
  CHECK(evaluate(g, {1.0, 1.0}) == doctest::Approx(0.0));
  std::mt19937 rng(17);
  auto p = random_poly(2, 3, rng);
  CHECK(evaluate(p, {0.0, 0.0}) == doctest::Approx(p.coeff(Monomial({0, 0}))));
}

TEST_CASE("monomial basis sizes and ordering") {
  CHECK(monomial_basis(4, 2).size() == 15);
  CHECK(monomial_basis(4, 4).size() == 70);
  auto b0 = monomial_basis(3, 0);
  REQUIRE(b0.size() == 1);
  CHECK(b0[0].degree() == 0);
  for (int n = 1; n <= 6; ++n)
    for (int d = 0; d <= 6; ++d)
      CHECK(monomial_basis(n, d).size() == static_cast<size_t>(choose(n + d, d)));

  auto b = monomial_basis(3, 4);
  MonoLess less;
  for (size_t i = 0; i + 1 < b.size(); ++i) CHECK(less(b[i], b[i + 1]));
}

TEST_CASE("lift keeps coefficients and renames nothing") {
  auto f = parse_polynomial("x1^2 - 2x2", xs(2));
  std::vector<std::string> ext = {"x1", "x2", "lam0", "lam1"};
  auto lf = lift(f, ext);
  CHECK(lf.n_vars() == 4);
  CHECK(lf.coeff(Monomial({2, 0, 0, 0})) == 1.0);
  CHECK(lf.coeff(Monomial({0, 1, 0, 0})) == -2.0);
  CHECK_THROWS(lift(f, std::vector<std::string>{"x2", "x1", "lam0"}));
}
