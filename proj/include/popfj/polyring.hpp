#pragma once

#include <map>
#include <string>
#include <vector>

namespace popfj {

// Monomial over a fixed variable list: exponent vector, one entry per variable.
struct Monomial {
  std::vector<int> e;

  Monomial() = default;
  explicit Monomial(std::vector<int> exps) : e(std::move(exps)) {}
  static Monomial unit(int n) { return Monomial(std::vector<int>(n, 0)); }

  int degree() const {
    int d = 0;
    for (int k : e) d += k;
    return d;
  }
  bool operator==(const Monomial& o) const { return e == o.e; }
};

// Graded lexicographic order: lower total degree first, ties broken lexicographically.
struct MonoLess {
  bool operator()(const Monomial& a, const Monomial& b) const {
    int da = a.degree(), db = b.degree();
    if (da != db) return da < db;
    return a.e < b.e;
  }
};

Monomial mono_mul(const Monomial& a, const Monomial& b);

// Sparse multivariate polynomial with double coefficients over named variables.
// All operations return new values; exact-zero coefficients are never stored.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<std::string> vars) : vars_(std::move(vars)) {}

  static Polynomial constant(double c, std::vector<std::string> vars);
  static Polynomial variable(int i, std::vector<std::string> vars);

  const std::vector<std::string>& vars() const { return vars_; }
  int n_vars() const { return static_cast<int>(vars_.size()); }
  const std::map<Monomial, double, MonoLess>& terms() const { return terms_; }

  bool is_zero() const { return terms_.empty(); }
  int degree() const;  // degree of the zero polynomial is 0 by convention
  double coeff(const Monomial& m) const;

  // Adds c to the coefficient of m, pruning exact zeros.
  void add_term(const Monomial& m, double c);

 private:
  std::vector<std::string> vars_;
  std::map<Monomial, double, MonoLess> terms_;
};

Polynomial add(const Polynomial& a, const Polynomial& b);
Polynomial sub(const Polynomial& a, const Polynomial& b);
Polynomial multiply(const Polynomial& a, const Polynomial& b);
Polynomial scale(const Polynomial& a, double c);
Polynomial poly_pow(const Polynomial& a, int k);
Polynomial partial_derivative(const Polynomial& a, int var);
std::vector<Polynomial> gradient(const Polynomial& a);
double evaluate(const Polynomial& a, const std::vector<double>& x);
Polynomial mono_poly(const Monomial& m, double c, std::vector<std::string> vars);

// Re-expresses a over a larger variable list; old variables keep their names
// and must appear as a prefix of new_vars.
Polynomial lift(const Polynomial& a, const std::vector<std::string>& new_vars);

// All monomials in n variables of total degree <= d, graded-lex ordered.
std::vector<Monomial> monomial_basis(int n, int d);

// Parses "+ - * ^ ( )" with implicit multiplication, e.g. "3x1^2 x2 - 0.5".
// Throws std::invalid_argument on malformed input or unknown variables.
Polynomial parse_polynomial(const std::string& text, const std::vector<std::string>& var_names);

std::string to_string(const Polynomial& a);

}  // namespace popfj
