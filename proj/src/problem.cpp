#include "mpecsos/problem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mpecsos {

using nlohmann::json;

bool OmegaBox::contains(const Eigen::Ref<const Eigen::VectorXd>& z, double slack) const {
  if (z.size() != halfwidth.size()) throw ProblemError("point dimension differs from box");
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (std::abs(z[i]) > halfwidth[i] + slack) return false;
  }
  return true;
}

std::vector<std::string> MpecProblem::xy_vars() const {
  std::vector<std::string> out = x_vars;
  out.insert(out.end(), y_vars.begin(), y_vars.end());
  return out;
}

std::vector<std::string> MpecProblem::xyv_vars() const {
  std::vector<std::string> out = xy_vars();
  out.insert(out.end(), v_vars.begin(), v_vars.end());
  return out;
}

Polynomial MpecProblem::h_in_v(std::size_t j) const {
  const auto ambient = xyv_vars();
  std::map<std::string, Polynomial> mapping;
  for (int i = 0; i < m(); ++i) {
    mapping.emplace(y_vars[static_cast<std::size_t>(i)],
                    Polynomial::variable(ambient, v_vars[static_cast<std::size_t>(i)]));
  }
  for (const auto& x : x_vars) mapping.emplace(x, Polynomial::variable(ambient, x));
  return substitute(constraints_h.at(j), mapping);
}

int MpecProblem::k_min() const {
  int k = ceil_half(phi.degree());
  for (const auto& h : constraints_h) k = std::max(k, ceil_half(h.degree()));
  return std::max(k, 1);
}

DegreeSummary degrees(const MpecProblem& problem) {
  DegreeSummary d;
  d.objective = problem.objective.degree();
  for (const auto& g : problem.constraints_g) d.g.push_back(g.degree());
  for (const auto& h : problem.constraints_h) d.h.push_back(h.degree());
  d.phi = problem.phi.degree();
  d.k_min = problem.k_min();
  return d;
}

namespace {

const json& require(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw ProblemError(std::string("instance document: missing section '") + key + "'");
  }
  return doc.at(key);
}

std::vector<std::string> name_list(const json& node, const char* what) {
  std::vector<std::string> out;
  if (node.is_string()) {
    out.push_back(node.get<std::string>());
  } else if (node.is_array()) {
    for (const auto& item : node) {
      if (!item.is_string()) throw ProblemError(std::string(what) + ": names must be strings");
      out.push_back(item.get<std::string>());
    }
  } else {
    throw ProblemError(std::string(what) + ": expected a name or a list of names");
  }
  return out;
}

Polynomial parse_field(const json& node, const std::vector<std::string>& vars,
                       const std::string& what) {
  if (!node.is_string()) throw ProblemError(what + ": expected an expression string");
  const std::string text = node.get<std::string>();
  try {
    return parse_polynomial(text, vars);
  } catch (const ParseError& e) {
    throw ProblemError(what + ": " + e.what() + " at offset " + std::to_string(e.position()) +
                       " in \"" + text + "\"");
  } catch (const PolynomialError& e) {
    throw ProblemError(what + ": " + e.what());
  }
}

double positive_bound(const json& node, const std::string& what) {
  if (!node.is_number()) throw ProblemError(what + ": expected a number");
  const double v = node.get<double>();
  if (!(v > 0.0) || !std::isfinite(v)) throw ProblemError(what + " must be positive");
  return v;
}

}  // namespace

MpecProblem load_problem(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw ProblemError(std::string("instance document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ProblemError("instance document must be a JSON object");

  MpecProblem p;
  if (doc.contains("name") && doc["name"].is_string()) p.name = doc["name"].get<std::string>();
  const json& vars = require(doc, "variables");
  p.x_vars = name_list(require(vars, "x"), "variables.x");
  p.y_vars = name_list(require(vars, "y"), "variables.y");
  if (p.x_vars.empty() || p.y_vars.empty()) {
    throw ProblemError("variables.x and variables.y must be nonempty");
  }
  if (vars.contains("v")) {
    p.v_vars = name_list(vars["v"], "variables.v");
    if (p.v_vars.size() != p.y_vars.size()) {
      throw ProblemError("variables.v must have as many names as variables.y");
    }
  } else if (p.m() == 1) {
    p.v_vars = {"v"};
  } else {
    for (int i = 1; i <= p.m(); ++i) p.v_vars.push_back("v" + std::to_string(i));
  }
  {
    std::set<std::string> seen;
    for (const auto& name : p.xyv_vars()) {
      if (!seen.insert(name).second) throw ProblemError("duplicate variable name '" + name + "'");
    }
  }

  const auto xy = p.xy_vars();
  p.objective = parse_field(require(doc, "objective"), xy, "objective");
  const json& a = require(doc, "A");
  const json& b = require(doc, "B");
  if (!a.is_array() || !b.is_array()) throw ProblemError("sections A and B must be lists");
  for (std::size_t i = 0; i < a.size(); ++i) {
    p.constraints_g.push_back(parse_field(a[i], xy, "A[" + std::to_string(i) + "]"));
  }
  for (std::size_t j = 0; j < b.size(); ++j) {
    p.constraints_h.push_back(parse_field(b[j], xy, "B[" + std::to_string(j) + "]"));
  }
  p.phi = parse_field(require(doc, "phi"), p.xyv_vars(), "phi");

  const json& mnode = require(doc, "M");
  p.box.halfwidth.resize(p.n() + p.m());
  if (mnode.is_number()) {
    p.box.halfwidth.setConstant(std::sqrt(positive_bound(mnode, "M")));
  } else if (mnode.is_object()) {
    for (std::size_t i = 0; i < xy.size(); ++i) {
      if (!mnode.contains(xy[i])) throw ProblemError("M: no bound for variable '" + xy[i] + "'");
      p.box.halfwidth[static_cast<Eigen::Index>(i)] =
          std::sqrt(positive_bound(mnode[xy[i]], "M." + xy[i]));
    }
    for (const auto& item : mnode.items()) {
      if (std::find(xy.begin(), xy.end(), item.key()) == xy.end()) {
        throw ProblemError("M: unknown variable '" + item.key() + "'");
      }
    }
  } else {
    throw ProblemError("M: expected a number or a per-variable object");
  }
  return p;
}

MpecProblem load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ProblemError("cannot open instance file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  MpecProblem p = load_problem(ss.str());
  if (p.name.empty()) p.name = path;
  return p;
}

namespace {

// Keep in sync with data/instances/*.json (checked by the test suite).
const std::map<std::string, std::string, std::less<>>& bundled() {
  static const std::map<std::string, std::string, std::less<>> docs{
      {"p1_mpec", R"json({
  "name": "p1_mpec",
  "variables": {"x": ["x"], "y": ["y"], "v": ["v"]},
  "objective": "x + y",
  "A": ["-x^2*((x*y-1)^2+y^4)"],
  "B": ["1-x^2", "1-y^2"],
  "phi": "x*v^2/2 - v^3/3 - (x*y^2/2 - y^3/3)",
  "M": 1
}
)json"},
      {"p2_bilevel", R"json({
  "name": "p2_bilevel",
  "variables": {"x": ["x"], "y": ["y"], "v": ["v"]},
  "objective": "x + y",
  "A": ["-x^2*(x^2+(y-1)^2-1)"],
  "B": ["1-x^2", "4-y^2"],
  "phi": "x*v^2/8 - v^3/24 - (x*y^2/8 - y^3/24)",
  "M": {"x": 1, "y": 4}
}
)json"},
      {"p3_sip", R"json({
  "name": "p3_sip",
  "variables": {"x": ["x"], "y": ["y"], "v": ["v"]},
  "objective": "y",
  "A": ["-x^2*(x^2+(y-1)^2-1)", "4-y^2"],
  "B": ["1-y^2"],
  "phi": "-2*x^2*v^2 + v^4 - x^2 + y",
  "M": {"x": 1, "y": 4}
}
)json"},
  };
  return docs;
}

}  // namespace

std::vector<std::string> bundled_instance_names() {
  std::vector<std::string> out;
  for (const auto& [name, doc] : bundled()) out.push_back(name);
  return out;
}

std::string bundled_instance(std::string_view name) {
  const auto& docs = bundled();
  const auto it = docs.find(name);
  if (it == docs.end()) throw ProblemError("unknown bundled instance '" + std::string(name) + "'");
  return it->second;
}

MpecProblem resolve_problem(const std::string& name_or_path) {
  const auto& docs = bundled();
  const auto it = docs.find(name_or_path);
  if (it != docs.end()) return load_problem(it->second);
  return load_problem_file(name_or_path);
}

namespace {

// Calls fn(point) for every node of a tensor grid with `count` points per
// dimension over prod_i [-w_i, w_i].
template <class Fn>
void for_each_grid_point(const Eigen::VectorXd& w, int count, Fn&& fn) {
  const Eigen::Index d = w.size();
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  Eigen::VectorXd z(d);
  while (true) {
    for (Eigen::Index i = 0; i < d; ++i) {
      z[i] = -w[i] + 2.0 * w[i] * idx[static_cast<std::size_t>(i)] / (count - 1);
    }
    fn(z);
    Eigen::Index i = 0;
    for (; i < d; ++i) {
      if (++idx[static_cast<std::size_t>(i)] < count) break;
      idx[static_cast<std::size_t>(i)] = 0;
    }
    if (i == d) return;
  }
}

std::string format_point(const Eigen::VectorXd& z) {
  std::ostringstream ss;
  ss.precision(4);
  ss << '(';
  for (Eigen::Index i = 0; i < z.size(); ++i) ss << (i ? ", " : "") << z[i];
  ss << ')';
  return ss.str();
}

}  // namespace

AssumptionReport validate_assumptions(const MpecProblem& problem, int sample_count) {
  AssumptionReport rep;
  rep.degrees = degrees(problem);
  rep.archimedean_note =
      "Archimedean property is not tested; every relaxation appends the box constraints "
      "M_i - z_i^2 >= 0, which makes its generator set Archimedean.";

  const int n = problem.n();
  const int m = problem.m();
  const int per_dim = std::max(
      3, static_cast<int>(std::lround(std::pow(std::max(sample_count, 1), 1.0 / (n + m)))) | 1);
  const Eigen::VectorXd wx = problem.box.halfwidth.head(n);
  const Eigen::VectorXd wy = problem.box.halfwidth.tail(m);

  std::vector<Polynomial> hv;
  for (std::size_t j = 0; j < problem.constraints_h.size(); ++j) hv.push_back(problem.h_in_v(j));

  std::vector<std::string> empty_at;
  Eigen::VectorXd full(n + 2 * m);
  for_each_grid_point(wx, per_dim, [&](const Eigen::VectorXd& x) {
    ++rep.x_samples;
    full.head(n) = x;
    full.segment(n, m) = Eigen::VectorXd::Zero(m);
    std::vector<Polynomial> local;
    for (const auto& h : hv) {
      std::vector<std::string> fixed = problem.xy_vars();
      local.push_back(partial_evaluate(h, fixed, full.head(n + m)));
    }
    bool any = false;
    // Twice the box in y so that points of B(x) outside Omega are seen.
    for_each_grid_point(Eigen::VectorXd(2.0 * wy), per_dim, [&](const Eigen::VectorXd& v) {
      for (const auto& h : local) {
        if (evaluate(h, v) < 0.0) return;
      }
      any = true;
      ++rep.b_samples;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (std::abs(v[i]) > wy[i] * (1.0 + 1e-12)) {
          ++rep.b_outside_box;
          return;
        }
      }
    });
    if (!any) {
      ++rep.x_with_empty_bx;
      if (empty_at.size() < 3) empty_at.push_back(format_point(x));
    }
  });

  rep.b_in_omega = rep.b_outside_box == 0;
  rep.bx_nonempty = rep.x_with_empty_bx == 0;
  if (!rep.b_in_omega) {
    rep.warnings.push_back(std::to_string(rep.b_outside_box) + " of " +
                           std::to_string(rep.b_samples) +
                           " sampled points of B(x) lie outside the box; enlarge M");
  }
  if (!rep.bx_nonempty) {
    std::string where;
    for (const auto& s : empty_at) where += (where.empty() ? "" : ", ") + s;
    rep.warnings.push_back("B(x) sampled empty at " + std::to_string(rep.x_with_empty_bx) +
                           " of " + std::to_string(rep.x_samples) + " x grid points, e.g. " +
                           where);
  }
  return rep;
}

}  // namespace mpecsos
