#include "popfj/certify.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace popfj {

using nlohmann::json;

Certificate extract_certificate(const Relaxation& relax, const SdpSolution& sol,
                                const std::vector<Polynomial>& h) {
  if (relax.xi_free_index < 0)
    throw std::invalid_argument("extract_certificate: not a certificate-form relaxation");
  Certificate cert;
  cert.vars = relax.vars;
  cert.xi = -sol.primal_objective;  // the emitted problem minimizes -xi

  for (const auto& gm : relax.gram)
    cert.grams.push_back({gm.generator, gm.basis, sol.blocks[gm.sdp_block]});

  for (const auto& mm : relax.mults) {
    Polynomial mult(relax.vars);
    int s = static_cast<int>(mm.basis.size());
    if (!mm.gram_form) {
      for (int i = 0; i < s; ++i)
        mult.add_term(mm.basis[i], sol.free_vars[mm.free_offset + i]);
    } else {
      for (int j = 0; j < s; ++j)
        for (int i = 0; i <= j; ++i) {
          double w = sol.free_vars[mm.free_offset + svec_index(i, j)] * (i == j ? 1.0 : 2.0);
          mult.add_term(mono_mul(mm.basis[i], mm.basis[j]), w);
        }
    }
    cert.mults.push_back({h[mm.h_index], mult});
  }
  return cert;
}

VerifyReport verify_certificate(const Certificate& cert, const Polynomial& f,
                                double coeff_tol, double eig_tol) {
  VerifyReport rep;
  Polynomial r = f;
  r.add_term(Monomial::unit(static_cast<int>(cert.vars.size())), -cert.xi);

  for (const auto& ge : cert.grams) {
    int s = static_cast<int>(ge.basis.size());
    for (int j = 0; j < s; ++j)
      for (int i = 0; i <= j; ++i) {
        double c = ge.G(i, j) * (i == j ? 1.0 : 2.0);
        if (c == 0.0) continue;
        Monomial m = mono_mul(ge.basis[i], ge.basis[j]);
        for (const auto& [gm, gc] : ge.generator.terms())
          r.add_term(mono_mul(m, gm), -c * gc);
      }
  }
  for (const auto& me : cert.mults) r = sub(r, multiply(me.mult, me.h));

  for (const auto& [m, c] : r.terms())
    rep.coeff_residual_inf = std::max(rep.coeff_residual_inf, std::fabs(c));
  rep.identity_ok = rep.coeff_residual_inf <= coeff_tol;

  rep.min_gram_eig = 0.0;
  bool first = true;
  for (const auto& ge : cert.grams) {
    if (ge.G.size() == 0) continue;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ge.G, Eigen::EigenvaluesOnly);
    double e = es.eigenvalues()(0);
    rep.min_gram_eig = first ? e : std::min(rep.min_gram_eig, e);
    first = false;
  }
  rep.psd_ok = rep.min_gram_eig >= -eig_tol;
  rep.ok = rep.identity_ok && rep.psd_ok;
  return rep;
}

double default_coeff_tol(const Certificate& cert, const Polynomial& f, double feas_tol) {
  double scale = std::max(1.0, std::fabs(cert.xi));
  for (const auto& [m, c] : f.terms()) scale = std::max(scale, std::fabs(c));
  for (const auto& ge : cert.grams)
    if (ge.G.size()) scale = std::max(scale, ge.G.cwiseAbs().maxCoeff());
  for (const auto& me : cert.mults)
    for (const auto& [m, c] : me.mult.terms()) scale = std::max(scale, std::fabs(c));
  return 100.0 * feas_tol * scale;
}

namespace {

json poly_to_json(const Polynomial& p) {
  json terms = json::array();
  for (const auto& [m, c] : p.terms()) terms.push_back({{"e", m.e}, {"c", c}});
  return {{"terms", terms}};
}

Polynomial poly_from_json(const json& j, const std::vector<std::string>& vars) {
  Polynomial p(vars);
  for (const auto& t : j.at("terms"))
    p.add_term(Monomial(t.at("e").get<std::vector<int>>()), t.at("c").get<double>());
  return p;
}

}  // namespace

std::string certificate_to_json(const Certificate& cert) {
  json j;
  j["bound"] = cert.xi;
  j["vars"] = cert.vars;
  j["grams"] = json::array();
  for (const auto& ge : cert.grams) {
    json basis = json::array();
    for (const auto& b : ge.basis) basis.push_back(b.e);
    int s = static_cast<int>(ge.basis.size());
    std::vector<double> flat(static_cast<size_t>(s) * s);
    for (int i = 0; i < s; ++i)
      for (int jj = 0; jj < s; ++jj) flat[i * s + jj] = ge.G(i, jj);  // row-major
    j["grams"].push_back(
        {{"generator", poly_to_json(ge.generator)}, {"basis", basis}, {"G", flat}});
  }
  j["multipliers"] = json::array();
  for (const auto& me : cert.mults)
    j["multipliers"].push_back({{"h", poly_to_json(me.h)}, {"mult", poly_to_json(me.mult)}});
  return j.dump(1);
}

Certificate certificate_from_json(const std::string& text) {
  json j = json::parse(text);
  Certificate cert;
  cert.xi = j.at("bound").get<double>();
  cert.vars = j.at("vars").get<std::vector<std::string>>();
  for (const auto& gj : j.at("grams")) {
    Certificate::GramEntry ge;
    ge.generator = poly_from_json(gj.at("generator"), cert.vars);
    for (const auto& b : gj.at("basis")) ge.basis.emplace_back(b.get<std::vector<int>>());
    int s = static_cast<int>(ge.basis.size());
    auto flat = gj.at("G").get<std::vector<double>>();
    if (static_cast<int>(flat.size()) != s * s)
      throw std::invalid_argument("certificate: Gram size mismatch");
    ge.G.resize(s, s);
    for (int i = 0; i < s; ++i)
      for (int jj = 0; jj < s; ++jj) ge.G(i, jj) = flat[i * s + jj];
    cert.grams.push_back(std::move(ge));
  }
  for (const auto& mj : j.at("multipliers"))
    cert.mults.push_back({poly_from_json(mj.at("h"), cert.vars),
                          poly_from_json(mj.at("mult"), cert.vars)});
  return cert;
}

void save_certificate(const Certificate& cert, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << certificate_to_json(cert);
}

Certificate load_certificate(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return certificate_from_json(ss.str());
}

}  // namespace popfj
