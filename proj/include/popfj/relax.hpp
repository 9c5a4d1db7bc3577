#pragma once

#include <vector>

#include "popfj/fjsys.hpp"
#include "popfj/polyring.hpp"
#include "popfj/sdp.hpp"

namespace popfj {

struct SizeQuadruple {
  int max_block = 0;
  int n_affine = 0;
  int n_scalar = 0;
  int n_matrix = 0;
};

struct RelaxOptions {
  int k = 1;                   // relaxation order
  bool preordering = false;    // weight products of constraint subsets, not just singletons
  bool sign_symmetry = false;  // split Gram blocks along term-sparsity components
};

// One Gram block of the weighted-sums decomposition: generator * v G v^T with
// v the monomial column. sdp_block indexes SdpProblem.block_dims.
struct GramBlockMeta {
  Polynomial generator;
  std::vector<Monomial> basis;
  int sdp_block = -1;
};

// Free multiplier of one equation h_t. Vector form: coefficients over `basis`
// occupy free columns [free_offset, free_offset + basis.size()). Gram form
// (sign-symmetry mode): upper-triangle entries of a symmetric matrix over
// `basis`, diag weight 1, off-diag weight 2.
struct MultiplierMeta {
  int h_index = 0;
  bool gram_form = false;
  std::vector<Monomial> basis;
  int free_offset = 0;
};

struct Relaxation {
  SdpProblem sdp;
  std::vector<std::string> vars;
  std::vector<Polynomial> ineqs;   // weights actually used (after preordering)
  std::vector<Polynomial> eqs;
  std::vector<GramBlockMeta> gram;
  std::vector<MultiplierMeta> mults;
  int xi_free_index = -1;          // bound variable position among free columns
  std::vector<Monomial> row_monos; // coefficient-matching rows (certificate form)
  SizeQuadruple sizes;
  bool sign_symmetry_applied = false;
};

// Certificate-side relaxation of min f over {g >= 0, h = 0} at order k:
//   f - xi = sigma_0 + sum_J g_J sigma_J + sum_t u_t h_t
// emitted as a minimization of -xi, so the reported bound is the negated
// optimal value. Gram blocks are psd; the u_t are unconstrained.
Relaxation build_sos(const Polynomial& f, const std::vector<Polynomial>& g,
                     const std::vector<Polynomial>& h, const RelaxOptions& opt);

// Measure-side relaxation: free vector y over monomials of degree <= 2k,
// moment matrix and localizer blocks linked to y entrywise, equation
// localizers pinned to zero, y_1 = 1; minimizes sum_a f_a y_a.
Relaxation build_moment(const Polynomial& f, const std::vector<Polynomial>& g,
                        const std::vector<Polynomial>& h, const RelaxOptions& opt);

Relaxation build_sos(const FjSystem& sys, const RelaxOptions& opt);
Relaxation build_moment(const FjSystem& sys, const RelaxOptions& opt);

// (largest block, #equality rows, #scalar variables incl. 1x1 blocks,
//  #matrix blocks of dimension >= 2).
SizeQuadruple size_report(const SdpProblem& prob);

// Term-sparsity split of `basis` against the support closure generated by the
// problem data: a and b share a component when a + b + c hits the closure for
// some c in `shifts`. Returns the partition, coarsest blocks first.
std::vector<std::vector<int>> sparsity_components(const std::vector<Monomial>& basis,
                                                  const std::vector<Monomial>& shifts,
                                                  const std::vector<Monomial>& closure);

}  // namespace popfj
