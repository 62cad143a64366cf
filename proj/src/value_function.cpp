#include "mpecsos/value_function.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace mpecsos {

namespace {

// Half-widths for (x, y, v): v shares those of y.
Eigen::VectorXd ambient_halfwidths(const MpecProblem& p) {
  Eigen::VectorXd c(p.n() + 2 * p.m());
  c << p.box.halfwidth, p.box.halfwidth.tail(p.m());
  return c;
}

template <class Fn>
void visit_box_grid(const Eigen::VectorXd& w, int count, Fn&& fn) {
  const Eigen::Index d = w.size();
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  Eigen::VectorXd z(d);
  double weight;
  while (true) {
    weight = 1.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const int k = idx[static_cast<std::size_t>(i)];
      z[i] = k == count - 1 ? w[i] : -w[i] + 2.0 * w[i] * k / (count - 1);
      if (k == 0 || k == count - 1) weight *= 0.5;
    }
    fn(z, weight);
    Eigen::Index i = d - 1;
    for (; i >= 0; --i) {
      if (++idx[static_cast<std::size_t>(i)] < count) break;
      idx[static_cast<std::size_t>(i)] = 0;
    }
    if (i < 0) return;
  }
}

}  // namespace

std::pair<SosIdentityProgram, SdpProblem> build_jm_program(const MpecProblem& problem, int k) {
  if (k < problem.k_min()) {
    throw ValueFunctionError("k = " + std::to_string(k) + " is below the admissible minimum " +
                             std::to_string(problem.k_min()));
  }
  const Eigen::VectorXd c = ambient_halfwidths(problem);
  const auto ambient = problem.xyv_vars();
  const Polynomial target = scale_variables(problem.phi, c);

  std::vector<Polynomial> gens;
  for (std::size_t j = 0; j < problem.constraints_h.size(); ++j) {
    gens.push_back(scale_variables(problem.h_in_v(j), c));
  }
  for (const auto& y : problem.y_vars) {
    gens.push_back(Polynomial::constant(ambient, 1.0) - pow(Polynomial::variable(ambient, y), 2));
  }
  const int degree = 2 * k;
  const MomentVector gamma = moment_vector(problem.n() + problem.m(), degree, 1.0);
  return build_sos_identity(target, problem.xy_vars(), max_degree_multipliers(gens, degree),
                            degree, gamma);
}

ValueFunctionApprox compute_Jk(const MpecProblem& problem, int k, const SolverOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const auto [prog, sdp] = build_jm_program(problem, k);
  const SosIdentitySolution sol = solve_sos_identity(prog, sdp, options);

  ValueFunctionApprox out;
  out.k = k;
  out.status = sol.sdp.status;
  out.iterations = sol.sdp.iterations;
  out.achieved_gap = sol.sdp.gap;
  out.primal_residual = sol.sdp.primal_residual;
  out.dual_residual = sol.sdp.dual_residual;
  out.rho = sol.rho;
  out.identity_residual = sol.identity_residual;
  // back to original coordinates: J_k(z) = p(z / c)
  out.jk = scale_variables(sol.p, problem.box.halfwidth.cwiseInverse());
  out.multiplier_degrees.emplace_back("sigma_0", prog.multipliers[0].sigma_degree);
  for (std::size_t j = 0; j < problem.constraints_h.size(); ++j) {
    out.multiplier_degrees.emplace_back("B[" + std::to_string(j) + "](x,v)",
                                        prog.multipliers[j + 1].sigma_degree);
  }
  for (std::size_t i = 0; i < problem.y_vars.size(); ++i) {
    out.multiplier_degrees.emplace_back(
        "box(" + problem.y_vars[i] + ")",
        prog.multipliers[1 + problem.constraints_h.size() + i].sigma_degree);
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

GridCheck lower_bound_check(const Polynomial& jk, const MpecProblem& problem,
                            int grid_points_per_dim, const OracleConfig& config) {
  if (grid_points_per_dim < 2) throw ValueFunctionError("grid needs at least 2 points per dim");
  const ValueFunctionOracle oracle(problem, config);
  const int n = problem.n();
  const int m = problem.m();
  GridCheck out;
  out.value = -std::numeric_limits<double>::infinity();
  visit_box_grid(problem.box.halfwidth, grid_points_per_dim, [&](const Eigen::VectorXd& z, double) {
    const auto j = oracle(z.head(n), z.tail(m));
    if (!j) {
      ++out.skipped;
      return;
    }
    ++out.evaluated;
    const double viol = evaluate(jk, z) - j->value;
    if (viol > out.value) {
      out.value = viol;
      out.worst = z;
    }
  });
  return out;
}

GridCheck l1_distance_estimate(const Polynomial& jk, const MpecProblem& problem,
                               int grid_points_per_dim, const OracleConfig& config) {
  if (grid_points_per_dim < 2) throw ValueFunctionError("grid needs at least 2 points per dim");
  const ValueFunctionOracle oracle(problem, config);
  const int n = problem.n();
  const int m = problem.m();
  GridCheck out;
  double num = 0.0;
  double den = 0.0;
  visit_box_grid(problem.box.halfwidth, grid_points_per_dim,
                 [&](const Eigen::VectorXd& z, double w) {
                   const auto j = oracle(z.head(n), z.tail(m));
                   if (!j) {
                     ++out.skipped;
                     return;
                   }
                   ++out.evaluated;
                   num += w * std::abs(evaluate(jk, z) - j->value);
                   den += w;
                 });
  out.value = den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
  return out;
}

std::string jk_table_json(const ValueFunctionApprox& approx, int indent) {
  nlohmann::json doc;
  doc["k"] = approx.k;
  doc["variables"] = approx.jk.variables();
  doc["rho"] = approx.rho;
  doc["status"] = to_string(approx.status);
  doc["achieved_gap"] = approx.achieved_gap;
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [alpha, c] : approx.jk.terms()) {
    terms.push_back({{"exponents", alpha.exponents()}, {"coefficient", c}});
  }
  doc["terms"] = terms;
  return doc.dump(indent);
}

Polynomial jk_from_table_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    const auto vars = doc.at("variables").get<std::vector<std::string>>();
    Polynomial::TermMap terms;
    for (const auto& t : doc.at("terms")) {
      auto e = t.at("exponents").get<std::vector<int>>();
      if (e.size() != vars.size()) throw ValueFunctionError("exponent length mismatch");
      terms[ExponentVector(std::move(e))] += t.at("coefficient").get<double>();
    }
    return Polynomial(vars, terms);
  } catch (const nlohmann::json::exception& e) {
    throw ValueFunctionError(std::string("malformed coefficient table: ") + e.what());
  }
}

}  // namespace mpecsos
