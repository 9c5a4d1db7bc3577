#include "popfj/problem_file.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace popfj {

using nlohmann::json;

ProblemFile parse_problem_json(const std::string& text) {
  json j = json::parse(text);
  ProblemFile pf;
  if (!j.contains("variables") || !j["variables"].is_array() || j["variables"].empty())
    throw std::runtime_error("problem file: nonempty \"variables\" array required");
  std::vector<std::string> vars = j["variables"].get<std::vector<std::string>>();
  pf.problem.name = j.value("name", std::string("unnamed"));
  if (!j.contains("objective")) throw std::runtime_error("problem file: \"objective\" required");
  pf.problem.f = parse_polynomial(j["objective"].get<std::string>(), vars);
  for (const auto& s : j.value("inequalities", std::vector<std::string>{}))
    pf.problem.g.push_back(parse_polynomial(s, vars));
  if (j.contains("options")) {
    const json& o = j["options"];
    if (o.contains("mode")) pf.options.mode = o["mode"].get<std::string>();
    if (o.contains("kmin")) pf.options.kmin = o["kmin"].get<int>();
    if (o.contains("kmax")) pf.options.kmax = o["kmax"].get<int>();
  }
  return pf;
}

ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open problem file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem_json(ss.str());
}

std::string emit_problem_json(const ProblemFile& pf) {
  json j;
  j["name"] = pf.problem.name;
  j["variables"] = pf.problem.vars();
  j["objective"] = to_string(pf.problem.f);
  json gs = json::array();
  for (const auto& g : pf.problem.g) gs.push_back(to_string(g));
  j["inequalities"] = gs;
  if (pf.options.mode || pf.options.kmin || pf.options.kmax) {
    json o = json::object();
    if (pf.options.mode) o["mode"] = *pf.options.mode;
    if (pf.options.kmin) o["kmin"] = *pf.options.kmin;
    if (pf.options.kmax) o["kmax"] = *pf.options.kmax;
    j["options"] = o;
  }
  return j.dump(2) + "\n";
}

}  // namespace popfj
