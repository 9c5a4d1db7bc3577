#include "popfj/polyring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace popfj {

Monomial mono_mul(const Monomial& a, const Monomial& b) {
  Monomial r = a;
  for (size_t i = 0; i < r.e.size(); ++i) r.e[i] += b.e[i];
  return r;
}

Polynomial Polynomial::constant(double c, std::vector<std::string> vars) {
  Polynomial p(std::move(vars));
  p.add_term(Monomial::unit(p.n_vars()), c);
  return p;
}

Polynomial Polynomial::variable(int i, std::vector<std::string> vars) {
  Polynomial p(std::move(vars));
  Monomial m = Monomial::unit(p.n_vars());
  m.e[i] = 1;
  p.add_term(m, 1.0);
  return p;
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
  return d;
}

double Polynomial::coeff(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

void Polynomial::add_term(const Monomial& m, double c) {
  if (c == 0.0) return;
  auto [it, fresh] = terms_.try_emplace(m, c);
  if (!fresh) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

Polynomial add(const Polynomial& a, const Polynomial& b) {
  Polynomial r = a;
  for (const auto& [m, c] : b.terms()) r.add_term(m, c);
  return r;
}

Polynomial sub(const Polynomial& a, const Polynomial& b) {
  Polynomial r = a;
  for (const auto& [m, c] : b.terms()) r.add_term(m, -c);
  return r;
}

Polynomial multiply(const Polynomial& a, const Polynomial& b) {
  Polynomial r(a.vars());
  for (const auto& [ma, ca] : a.terms())
    for (const auto& [mb, cb] : b.terms()) r.add_term(mono_mul(ma, mb), ca * cb);
  return r;
}

Polynomial scale(const Polynomial& a, double c) {
  Polynomial r(a.vars());
  for (const auto& [m, v] : a.terms()) r.add_term(m, v * c);
  return r;
}

Polynomial poly_pow(const Polynomial& a, int k) {
  Polynomial r = Polynomial::constant(1.0, a.vars());
  for (int i = 0; i < k; ++i) r = multiply(r, a);
  return r;
}

Polynomial partial_derivative(const Polynomial& a, int var) {
  Polynomial r(a.vars());
  for (const auto& [m, c] : a.terms()) {
    if (m.e[var] == 0) continue;
    Monomial d = m;
    d.e[var] -= 1;
    r.add_term(d, c * m.e[var]);
  }
  return r;
}

std::vector<Polynomial> gradient(const Polynomial& a) {
  std::vector<Polynomial> g;
  g.reserve(a.n_vars());
  for (int i = 0; i < a.n_vars(); ++i) g.push_back(partial_derivative(a, i));
  return g;
}

double evaluate(const Polynomial& a, const std::vector<double>& x) {
  double s = 0.0;
  for (const auto& [m, c] : a.terms()) {
    double t = c;
    for (size_t i = 0; i < m.e.size(); ++i)
      for (int k = 0; k < m.e[i]; ++k) t *= x[i];
    s += t;
  }
  return s;
}

Polynomial mono_poly(const Monomial& m, double c, std::vector<std::string> vars) {
  Polynomial p(std::move(vars));
  p.add_term(m, c);
  return p;
}

Polynomial lift(const Polynomial& a, const std::vector<std::string>& new_vars) {
  if (new_vars.size() < a.vars().size())
    throw std::invalid_argument("lift: variable list shrank");
  for (size_t i = 0; i < a.vars().size(); ++i)
    if (new_vars[i] != a.vars()[i]) throw std::invalid_argument("lift: prefix mismatch");
  Polynomial r(new_vars);
  for (const auto& [m, c] : a.terms()) {
    Monomial mm = Monomial::unit(static_cast<int>(new_vars.size()));
    std::copy(m.e.begin(), m.e.end(), mm.e.begin());
    r.add_term(mm, c);
  }
  return r;
}

static void basis_rec(int n, int pos, int rem, Monomial& cur, std::vector<Monomial>& out) {
  if (pos == n) {
    if (rem == 0) out.push_back(cur);
    return;
  }
  for (int e = 0; e <= rem; ++e) {
    cur.e[pos] = e;
    basis_rec(n, pos + 1, rem - e, cur, out);
  }
  cur.e[pos] = 0;
}

std::vector<Monomial> monomial_basis(int n, int d) {
  std::vector<Monomial> out;
  Monomial cur = Monomial::unit(n);
  for (int deg = 0; deg <= d; ++deg) basis_rec(n, 0, deg, cur, out);
  std::sort(out.begin(), out.end(), MonoLess{});
  return out;
}

namespace {

struct Parser {
  const std::string& s;
  size_t i = 0;
  const std::vector<std::string>& vars;

  void skip() {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  }
  bool eat(char c) {
    skip();
    if (i < s.size() && s[i] == c) {
      ++i;
      return true;
    }
    return false;
  }
  char peek() {
    skip();
    return i < s.size() ? s[i] : '\0';
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument("parse error at position " + std::to_string(i) + ": " + msg);
  }

  bool starts_atom() {
    char c = peek();
    return c == '(' || std::isdigit(static_cast<unsigned char>(c)) || c == '.' ||
           std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  }

  double number() {
    skip();
    size_t j = i;
    while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.')) ++j;
    if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
      size_t k = j + 1;
      if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
      if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
        ++k;
        while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
        j = k;
      }
    }
    if (j == i) fail("expected number");
    double v = std::stod(s.substr(i, j - i));
    i = j;
    return v;
  }

  Polynomial ident() {
    skip();
    size_t j = i;
    while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
    std::string name = s.substr(i, j - i);
    auto it = std::find(vars.begin(), vars.end(), name);
    if (it == vars.end()) fail("unknown variable '" + name + "'");
    i = j;
    return Polynomial::variable(static_cast<int>(it - vars.begin()), vars);
  }

  Polynomial atom() {
    char c = peek();
    if (c == '(') {
      ++i;
      Polynomial p = expr();
      if (!eat(')')) fail("expected ')'");
      return p;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return Polynomial::constant(number(), vars);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return ident();
    fail("expected term");
  }

  Polynomial factor() {
    Polynomial p = atom();
    if (eat('^')) {
      skip();
      size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      if (j == i) fail("expected integer exponent");
      int k = std::stoi(s.substr(i, j - i));
      i = j;
      p = poly_pow(p, k);
    }
    return p;
  }

  Polynomial term() {
    Polynomial p = factor();
    for (;;) {
      if (eat('*')) {
        p = multiply(p, factor());
      } else if (starts_atom()) {
        p = multiply(p, factor());  // implicit multiplication
      } else {
        return p;
      }
    }
  }

  Polynomial expr() {
    bool neg = false;
    if (eat('-'))
      neg = true;
    else
      eat('+');
    Polynomial p = term();
    if (neg) p = scale(p, -1.0);
    for (;;) {
      if (eat('+'))
        p = add(p, term());
      else if (eat('-'))
        p = sub(p, term());
      else
        return p;
    }
  }
};

}  // namespace

Polynomial parse_polynomial(const std::string& text, const std::vector<std::string>& var_names) {
  Parser ps{text, 0, var_names};
  Polynomial p = ps.expr();
  ps.skip();
  if (ps.i != text.size()) ps.fail("trailing input");
  return p;
}

namespace {

// Shortest decimal that parses back to exactly v, so emitted text round-trips.
std::string fmt_coeff(double v) {
  for (int prec = 6; prec <= 17; ++prec) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    if (std::stod(os.str()) == v) return os.str();
  }
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string to_string(const Polynomial& a) {
  if (a.is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  // highest-degree terms first for readability
  std::vector<std::pair<Monomial, double>> ts(a.terms().begin(), a.terms().end());
  std::reverse(ts.begin(), ts.end());
  for (const auto& [m, c] : ts) {
    double v = c;
    if (first) {
      if (v < 0) {
        os << "-";
        v = -v;
      }
      first = false;
    } else {
      os << (v < 0 ? " - " : " + ");
      v = std::fabs(v);
    }
    bool anyvar = m.degree() > 0;
    if (!anyvar || v != 1.0) {
      os << fmt_coeff(v);
      if (anyvar) os << "*";
    }
    bool firstv = true;
    for (size_t i = 0; i < m.e.size(); ++i) {
      if (m.e[i] == 0) continue;
      if (!firstv) os << "*";
      firstv = false;
      os << a.vars()[i];
      if (m.e[i] > 1) os << "^" << m.e[i];
    }
  }
  return os.str();
}

}  // namespace popfj
