#include "popfj/relax.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace popfj {

namespace {

int half_up(int d) { return (d + 1) / 2; }

struct Dsu {
  std::vector<int> p;
  explicit Dsu(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int a) { return p[a] == a ? a : p[a] = find(p[a]); }
  void unite(int a, int b) { p[find(a)] = find(b); }
};

using MonoSet = std::set<Monomial, MonoLess>;

std::vector<Monomial> support(const Polynomial& q) {
  std::vector<Monomial> s;
  for (const auto& [m, c] : q.terms()) s.push_back(m);
  return s;
}

// Sign-symmetry group of the data supports: the GF(2) null space of the
// exponent-parity vectors. Nontrivial when some coordinate flip fixes every
// data monomial.
bool has_nontrivial_sign_symmetry(const std::vector<const Polynomial*>& data, int nv) {
  std::vector<std::vector<int>> rows;  // parity vectors, reduced
  auto reduce = [&](std::vector<int> v) {
    for (const auto& r : rows) {
      int lead = -1;
      for (int i = 0; i < nv; ++i)
        if (r[i]) {
          lead = i;
          break;
        }
      if (lead >= 0 && v[lead])
        for (int i = 0; i < nv; ++i) v[i] ^= r[i];
    }
    return v;
  };
  for (const auto* q : data)
    for (const auto& [m, c] : q->terms()) {
      std::vector<int> v(nv);
      for (int i = 0; i < nv; ++i) v[i] = m.e[i] & 1;
      v = reduce(std::move(v));
      if (std::any_of(v.begin(), v.end(), [](int x) { return x != 0; })) {
        rows.push_back(v);
        if (static_cast<int>(rows.size()) == nv) return false;  // full rank: trivial group
      }
    }
  return static_cast<int>(rows.size()) < nv;
}

}  // namespace

std::vector<std::vector<int>> sparsity_components(const std::vector<Monomial>& basis,
                                                  const std::vector<Monomial>& shifts,
                                                  const std::vector<Monomial>& closure) {
  const int n = static_cast<int>(basis.size());
  MonoSet cl(closure.begin(), closure.end());
  Dsu dsu(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      for (const auto& g : shifts) {
        Monomial s = mono_mul(mono_mul(basis[i], basis[j]), g);
        if (cl.count(s)) {
          dsu.unite(i, j);
          break;
        }
      }
    }
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < n; ++i) groups[dsu.find(i)].push_back(i);
  std::vector<std::vector<int>> out;
  for (auto& [r, v] : groups) out.push_back(std::move(v));
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return a[0] < b[0];
  });
  return out;
}

namespace {

struct Builder {
  const Polynomial& f;
  const std::vector<Polynomial>& g;
  const std::vector<Polynomial>& h;
  const RelaxOptions& opt;

  std::vector<std::string> vars;
  int nv = 0;
  std::vector<Polynomial> ineqs;
  std::vector<int> dJ, rT;
  bool ts = false;  // sign-symmetry splitting active

  // planned Gram blocks (generator, basis) and multiplier bases
  std::vector<std::pair<Polynomial, std::vector<Monomial>>> gram_plan;
  std::vector<std::pair<int, std::vector<Monomial>>> mult_plan;  // h index, basis

  void prepare() {
    vars = f.vars();
    nv = f.n_vars();
    ineqs = opt.preordering ? products_preordering(g) : g;
    for (const auto& q : ineqs) {
      dJ.push_back(half_up(q.degree()));
      if (opt.k < dJ.back()) throw std::invalid_argument("relaxation order below constraint degree");
    }
    for (const auto& q : h) {
      rT.push_back(half_up(q.degree()));
      if (opt.k < rT.back()) throw std::invalid_argument("relaxation order below equation degree");
    }
    if (opt.k < half_up(f.degree()))
      throw std::invalid_argument("relaxation order below objective degree");

    std::vector<const Polynomial*> data{&f};
    for (const auto& q : ineqs) data.push_back(&q);
    for (const auto& q : h) data.push_back(&q);
    ts = opt.sign_symmetry && has_nontrivial_sign_symmetry(data, nv);

    if (!ts) {
      gram_plan.emplace_back(Polynomial::constant(1.0, vars), monomial_basis(nv, opt.k));
      for (size_t j = 0; j < ineqs.size(); ++j)
        gram_plan.emplace_back(ineqs[j], monomial_basis(nv, opt.k - dJ[j]));
      for (size_t t = 0; t < h.size(); ++t)
        mult_plan.emplace_back(static_cast<int>(t), monomial_basis(nv, 2 * (opt.k - rT[t])));
      return;
    }

    // support closure: data supports plus the squares of the order-k basis
    MonoSet closure_set;
    for (const auto* q : data)
      for (const auto& [m, c] : q->terms()) closure_set.insert(m);
    std::vector<Monomial> vk = monomial_basis(nv, opt.k);
    for (const auto& b : vk) closure_set.insert(mono_mul(b, b));
    std::vector<Monomial> closure(closure_set.begin(), closure_set.end());

    auto split = [&](const Polynomial& gen, const std::vector<Monomial>& basis) {
      std::vector<Monomial> shifts =
          gen.is_zero() ? std::vector<Monomial>{} : support(gen);
      if (shifts.empty()) shifts.push_back(Monomial::unit(nv));
      auto comps = sparsity_components(basis, shifts, closure);
      std::vector<std::vector<Monomial>> out;
      for (const auto& c : comps) {
        std::vector<Monomial> bs;
        for (int i : c) bs.push_back(basis[i]);
        out.push_back(std::move(bs));
      }
      return out;
    };

    Polynomial one = Polynomial::constant(1.0, vars);
    for (auto& bs : split(one, vk)) gram_plan.emplace_back(one, std::move(bs));
    // dense first-order block alongside the split diagonal Gram
    gram_plan.emplace_back(one, monomial_basis(nv, 1));
    for (size_t j = 0; j < ineqs.size(); ++j)
      for (auto& bs : split(ineqs[j], monomial_basis(nv, opt.k - dJ[j])))
        gram_plan.emplace_back(ineqs[j], std::move(bs));
    for (size_t t = 0; t < h.size(); ++t)
      for (auto& bs : split(h[t], monomial_basis(nv, opt.k - rT[t])))
        mult_plan.emplace_back(static_cast<int>(t), std::move(bs));
  }
};

std::map<Monomial, int, MonoLess> index_rows(const std::vector<Monomial>& rows) {
  std::map<Monomial, int, MonoLess> idx;
  for (size_t i = 0; i < rows.size(); ++i) idx.emplace(rows[i], static_cast<int>(i));
  return idx;
}

}  // namespace

SizeQuadruple size_report(const SdpProblem& prob) {
  SizeQuadruple s;
  s.n_affine = prob.n_rows();
  s.n_scalar = prob.n_nonneg + prob.n_free;
  for (int d : prob.block_dims) {
    s.max_block = std::max(s.max_block, d);
    if (d >= 2)
      ++s.n_matrix;
    else
      ++s.n_scalar;
  }
  return s;
}

Relaxation build_sos(const Polynomial& f, const std::vector<Polynomial>& g,
                     const std::vector<Polynomial>& h, const RelaxOptions& opt) {
  Builder B{f, g, h, opt};
  B.prepare();

  Relaxation R;
  R.vars = B.vars;
  R.ineqs = B.ineqs;
  R.eqs = h;
  R.sign_symmetry_applied = B.ts;

  // row monomials
  MonoSet rows_set;
  if (!B.ts) {
    auto all = monomial_basis(B.nv, 2 * opt.k);
    rows_set.insert(all.begin(), all.end());
  } else {
    rows_set.insert(Monomial::unit(B.nv));
    for (const auto& [m, c] : f.terms()) rows_set.insert(m);
    for (const auto& [gen, basis] : B.gram_plan)
      for (size_t i = 0; i < basis.size(); ++i)
        for (size_t j = i; j < basis.size(); ++j)
          for (const auto& [gm, gc] : gen.terms())
            rows_set.insert(mono_mul(mono_mul(basis[i], basis[j]), gm));
    for (const auto& [t, basis] : B.mult_plan)
      for (size_t i = 0; i < basis.size(); ++i)
        for (size_t j = i; j < basis.size(); ++j)
          for (const auto& [hm, hc] : h[t].terms())
            rows_set.insert(mono_mul(mono_mul(basis[i], basis[j]), hm));
  }
  R.row_monos.assign(rows_set.begin(), rows_set.end());
  auto idx = index_rows(R.row_monos);

  SdpProblem& P = R.sdp;
  P.rhs.assign(R.row_monos.size(), 0.0);
  for (const auto& [m, c] : f.terms()) P.rhs[idx.at(m)] = c;

  // psd Gram blocks
  for (const auto& [gen, basis] : B.gram_plan) {
    int bidx = static_cast<int>(P.block_dims.size());
    int boff = P.block_offset(bidx);
    int s = static_cast<int>(basis.size());
    P.block_dims.push_back(s);
    for (int j = 0; j < s; ++j)
      for (int i = 0; i <= j; ++i) {
        int col = boff + svec_index(i, j);
        double w = (i == j) ? 1.0 : kSqrt2;
        for (const auto& [gm, gc] : gen.terms()) {
          Monomial target = mono_mul(mono_mul(basis[i], basis[j]), gm);
          P.coeffs.push_back({idx.at(target), col, gc * w});
        }
      }
    R.gram.push_back({gen, basis, bidx});
  }

  // free columns: the bound first, then the equation multipliers
  int foff_cols = P.free_offset();
  int nfree = 0;
  R.xi_free_index = nfree++;
  P.coeffs.push_back({idx.at(Monomial::unit(B.nv)), foff_cols + R.xi_free_index, 1.0});
  for (const auto& [t, basis] : B.mult_plan) {
    MultiplierMeta mm;
    mm.h_index = t;
    mm.gram_form = B.ts;
    mm.basis = basis;
    mm.free_offset = nfree;
    int s = static_cast<int>(basis.size());
    if (!B.ts) {
      for (int i = 0; i < s; ++i) {
        int col = foff_cols + nfree++;
        for (const auto& [hm, hc] : h[t].terms())
          P.coeffs.push_back({idx.at(mono_mul(basis[i], hm)), col, hc});
      }
    } else {
      for (int j = 0; j < s; ++j)
        for (int i = 0; i <= j; ++i) {
          int col = foff_cols + nfree++;
          double w = (i == j) ? 1.0 : 2.0;
          for (const auto& [hm, hc] : h[t].terms())
            P.coeffs.push_back(
                {idx.at(mono_mul(mono_mul(basis[i], basis[j]), hm)), col, hc * w});
        }
    }
    R.mults.push_back(std::move(mm));
  }
  P.n_free = nfree;
  P.objective.push_back({0, P.free_offset() + R.xi_free_index, -1.0});

  R.sizes = size_report(P);
  return R;
}

Relaxation build_moment(const Polynomial& f, const std::vector<Polynomial>& g,
                        const std::vector<Polynomial>& h, const RelaxOptions& opt) {
  Builder B{f, g, h, opt};
  B.prepare();

  Relaxation R;
  R.vars = B.vars;
  R.ineqs = B.ineqs;
  R.eqs = h;
  R.sign_symmetry_applied = B.ts;
  R.row_monos = monomial_basis(B.nv, 2 * opt.k);  // the moment-sequence monomials
  auto idx = index_rows(R.row_monos);
  const int ny = static_cast<int>(R.row_monos.size());

  SdpProblem& P = R.sdp;
  P.n_free = ny;
  for (const auto& [gen, basis] : B.gram_plan)
    P.block_dims.push_back(static_cast<int>(basis.size()));
  const int foff = P.free_offset();

  // moment/localizer blocks linked entrywise to y
  for (size_t bi = 0; bi < B.gram_plan.size(); ++bi) {
    const auto& [gen, basis] = B.gram_plan[bi];
    int boff = P.block_offset(static_cast<int>(bi));
    int s = static_cast<int>(basis.size());
    for (int j = 0; j < s; ++j)
      for (int i = 0; i <= j; ++i) {
        int row = P.n_rows();
        P.rhs.push_back(0.0);
        double w = (i == j) ? 1.0 : kSqrt2;
        P.coeffs.push_back({row, boff + svec_index(i, j), 1.0});
        for (const auto& [gm, gc] : gen.terms())
          P.coeffs.push_back(
              {row, foff + idx.at(mono_mul(mono_mul(basis[i], basis[j]), gm)), -gc * w});
      }
    R.gram.push_back({gen, basis, static_cast<int>(bi)});
  }

  // equation localizers pinned to zero
  for (const auto& [t, basis] : B.mult_plan) {
    int s = static_cast<int>(basis.size());
    for (int j = 0; j < s; ++j)
      for (int i = 0; i <= j; ++i) {
        int row = P.n_rows();
        P.rhs.push_back(0.0);
        for (const auto& [hm, hc] : h[t].terms())
          P.coeffs.push_back(
              {row, foff + idx.at(mono_mul(mono_mul(basis[i], basis[j]), hm)), hc});
      }
    MultiplierMeta mm;
    mm.h_index = t;
    mm.gram_form = true;
    mm.basis = basis;
    mm.free_offset = -1;
    R.mults.push_back(std::move(mm));
  }

  // normalization y_1 = 1
  {
    int row = P.n_rows();
    P.rhs.push_back(1.0);
    P.coeffs.push_back({row, foff + idx.at(Monomial::unit(B.nv)), 1.0});
  }

  for (const auto& [m, c] : f.terms()) P.objective.push_back({0, foff + idx.at(m), c});

  R.xi_free_index = -1;
  R.sizes = size_report(P);
  return R;
}

Relaxation build_sos(const FjSystem& sys, const RelaxOptions& opt) {
  return build_sos(sys.f_ext, sys.g_ext, sys.h, opt);
}

Relaxation build_moment(const FjSystem& sys, const RelaxOptions& opt) {
  return build_moment(sys.f_ext, sys.g_ext, sys.h, opt);
}

}  // namespace popfj
