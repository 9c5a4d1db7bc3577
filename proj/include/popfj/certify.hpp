#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "popfj/relax.hpp"

namespace popfj {

// Weighted-sums certificate for f - xi = sum generator_b (v_b' G_b v_b) + sum u_t h_t.
struct Certificate {
  double xi = 0.0;
  std::vector<std::string> vars;
  struct GramEntry {
    Polynomial generator;
    std::vector<Monomial> basis;
    Eigen::MatrixXd G;
  };
  std::vector<GramEntry> grams;
  struct MultEntry {
    Polynomial h;
    Polynomial mult;
  };
  std::vector<MultEntry> mults;
};

// Reads the Gram blocks and multipliers out of a solved certificate-side
// relaxation. Only meaningful for solutions with status OPTIMAL.
Certificate extract_certificate(const Relaxation& relax, const SdpSolution& sol,
                                const std::vector<Polynomial>& h);

struct VerifyReport {
  double coeff_residual_inf = 0.0;  // worst coefficient of the recomputed identity
  double min_gram_eig = 0.0;
  bool identity_ok = false;
  bool psd_ok = false;
  bool ok = false;
};

// Recomputes the identity in the polynomial ring and checks every Gram block
// for near-positive-semidefiniteness. coeff_tol scales with the certificate
// data; eig_tol bounds the admissible negative eigenvalue.
VerifyReport verify_certificate(const Certificate& cert, const Polynomial& f,
                                double coeff_tol, double eig_tol);

// Default tolerance used by the CLI: 100 * feas_tol * max(1, largest |coeff|).
double default_coeff_tol(const Certificate& cert, const Polynomial& f, double feas_tol);

std::string certificate_to_json(const Certificate& cert);
Certificate certificate_from_json(const std::string& text);
void save_certificate(const Certificate& cert, const std::string& path);
Certificate load_certificate(const std::string& path);

}  // namespace popfj
