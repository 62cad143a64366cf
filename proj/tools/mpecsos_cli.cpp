// mpecsos command-line front end.  Exit codes: 0 ok, 2 parse error,
// 3 solver failure, 4 precondition violated (or a report failing its
// invariants), 5 every S_k certified empty.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mpecsos/driver.hpp"
#include "mpecsos/oracle.hpp"
#include "mpecsos/problem.hpp"
#include "mpecsos/report.hpp"
#include "mpecsos/value_function.hpp"

namespace {

using namespace mpecsos;

enum Exit { kOk = 0, kParse = 2, kSolver = 3, kPrecondition = 4, kAllEmpty = 5 };

struct Failure {
  int code;
  std::string message;
};

struct Loaded {
  MpecProblem problem;
  nlohmann::json document;
};

Loaded load(const std::string& name_or_path) {
  std::string text;
  try {
    text = bundled_instance(name_or_path);
  } catch (const ProblemError&) {
    std::ifstream in(name_or_path);
    if (!in) throw Failure{kParse, "cannot open instance '" + name_or_path + "'"};
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  try {
    Loaded l{load_problem(text), nlohmann::json::parse(text)};
    return l;
  } catch (const ProblemError& e) {
    throw Failure{kParse, e.what()};
  } catch (const nlohmann::json::exception& e) {
    throw Failure{kParse, e.what()};
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Failure{kPrecondition, "cannot write '" + path + "'"};
  out << text << '\n';
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt_point(const Eigen::VectorXd& z) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < z.size(); ++i) s += (i ? ", " : "") + fmt(z[i]);
  return s + ")";
}

std::pair<int, int> parse_k_range(const std::string& text) {
  const auto dots = text.find("..");
  try {
    std::size_t used = 0;
    if (dots == std::string::npos) {
      const int k = std::stoi(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return {k, k};
    }
    const int a = std::stoi(text.substr(0, dots), &used);
    if (used != dots) throw std::invalid_argument(text);
    const std::string rest = text.substr(dots + 2);
    const int b = std::stoi(rest, &used);
    if (used != rest.size()) throw std::invalid_argument(text);
    return {a, b};
  } catch (const std::exception&) {
    throw Failure{kParse, "bad k range '" + text + "' (expected K or A..B)"};
  }
}

bool oracle_supported(const MpecProblem& p) { return p.n() + p.m() <= kMaxOracleDims; }

int cmd_approx(const std::string& instance, int k, const std::string& output, int grid,
               bool diagnostics) {
  const Loaded in = load(instance);
  ValueFunctionApprox a;
  try {
    a = compute_Jk(in.problem, k);
  } catch (const ValueFunctionError& e) {
    throw Failure{kPrecondition, e.what()};
  }
  std::cout << "J_" << k << "(" << in.problem.name << ") = " << to_string(a.jk) << '\n';
  std::cout << "rho_k          " << fmt(a.rho) << '\n';
  std::cout << "status         " << to_string(a.status) << '\n';
  std::cout << "gap            " << a.achieved_gap << '\n';
  nlohmann::json doc = nlohmann::json::parse(jk_table_json(a));
  doc["instance"] = in.problem.name;
  doc["identity_residual"] = a.identity_residual;
  doc["seconds"] = a.seconds;
  if (!a.ok()) {
    if (!output.empty()) write_file(output, doc.dump(2));
    throw Failure{kSolver, "value-function program ended with " + to_string(a.status)};
  }
  if (diagnostics && oracle_supported(in.problem)) {
    const GridCheck lb = lower_bound_check(a.jk, in.problem, grid);
    const GridCheck l1 = l1_distance_estimate(a.jk, in.problem, grid);
    std::cout << "lower-bound    " << fmt(lb.value) << " (max of J_k - J on " << grid
              << " points/dim, " << lb.skipped << " skipped)\n";
    std::cout << "L1 distance    " << fmt(l1.value) << '\n';
    doc["diagnostics"] = {{"grid_points_per_dim", grid},
                          {"lower_bound_violation", lb.value},
                          {"l1_distance", l1.value},
                          {"skipped", lb.skipped}};
  }
  if (!output.empty()) write_file(output, doc.dump(2));
  return kOk;
}

void print_trace(const AlgorithmTrace& t) {
  std::printf("%-3s %-15s %-6s %-12s %-12s %s\n", "k", "S_k", "order", "val", "v_eps_k", "note");
  for (const auto& r : t.records) {
    std::printf("%-3d %-15s %-6d %-12s %-12s %s\n", r.k, to_string(r.sk_status).c_str(), r.order,
                r.val ? fmt(*r.val).c_str() : "-", r.v_eps_k ? fmt(*r.v_eps_k).c_str() : "-",
                r.note.c_str());
  }
  std::cout << "termination    " << to_string(t.termination) << '\n';
  if (t.any_successful()) {
    std::cout << "final value    " << fmt(t.final_value) << '\n';
    for (const auto& z : t.final_points) std::cout << "final point    " << fmt_point(z) << '\n';
  }
}

int cmd_solve(const std::string& instance, double eps, const std::string& k_range,
              const std::string& output, const std::string& csv, bool reference, int order_extra,
              const std::vector<double>& ladder) {
  const Loaded in = load(instance);
  const auto [k0, k1] = parse_k_range(k_range);
  AlgoConfig cfg;
  cfg.epsilon = eps;
  cfg.k_start = k0;
  cfg.k_max = k1;
  cfg.order_extra = order_extra;
  cfg.epsilon_ladder = ladder;
  std::vector<AlgorithmTrace> traces;
  try {
    if (ladder.empty()) {
      traces.push_back(run_algorithm1(in.problem, cfg));
    } else {
      traces = run_epsilon_ladder(in.problem, cfg);
    }
  } catch (const DriverError& e) {
    throw Failure{kPrecondition, e.what()};
  }

  nlohmann::json reports = nlohmann::json::array();
  std::string series = "epsilon,k,val,v_eps_k\n";
  bool any_success = false;
  bool all_empty = true;
  for (const auto& t : traces) {
    if (traces.size() > 1) std::cout << "epsilon        " << t.config.epsilon << '\n';
    print_trace(t);
    std::optional<ReferenceComparison> ref;
    if (reference && oracle_supported(in.problem)) {
      ref = compare_with_reference(t, in.problem);
      std::cout << "oracle val     " << fmt(ref->reference_value) << " at "
                << fmt_point(ref->reference_point) << '\n';
      if (ref->stagnation) std::cout << "warning        v_eps_k stagnates above the oracle value\n";
      if (!ref->sandwich_ok) std::cout << "warning        a val(P_eps^k) lies below the oracle value\n";
    }
    reports.push_back(trace_to_json(t, in.document, ref));
    std::istringstream rows(trace_series_csv(t));
    std::string line;
    std::getline(rows, line);  // header
    std::ostringstream e;
    e.precision(17);
    e << t.config.epsilon;
    while (std::getline(rows, line)) series += e.str() + "," + line + "\n";
    any_success = any_success || t.any_successful();
    all_empty = all_empty && t.termination == TerminationReason::AllEmpty;
  }
  if (!output.empty()) write_file(output, (traces.size() == 1 ? reports[0] : reports).dump(2));
  if (!csv.empty()) write_file(csv, series);
  if (any_success) return kOk;
  if (all_empty) return kAllEmpty;
  throw Failure{kSolver, "no iteration produced a certified value"};
}

int cmd_oracle(const std::string& instance, const std::vector<double>& point,
               const std::vector<double>& peps) {
  const Loaded in = load(instance);
  const MpecProblem& p = in.problem;
  if (!oracle_supported(p)) {
    throw Failure{kPrecondition, "oracle limited to n + m <= " + std::to_string(kMaxOracleDims)};
  }
  if (!point.empty()) {
    if (static_cast<int>(point.size()) != p.n() + p.m()) {
      throw Failure{kPrecondition, "--J expects " + std::to_string(p.n() + p.m()) + " numbers"};
    }
    const Eigen::Map<const Eigen::VectorXd> z(point.data(), static_cast<Eigen::Index>(point.size()));
    if (!p.box.contains(z, 1e-12)) throw Failure{kPrecondition, "point lies outside the box"};
    const auto j = eval_J(p, z.head(p.n()), z.tail(p.m()));
    if (!j) {
      std::cout << "J = empty (no sampled point of B(x))\n";
    } else {
      std::cout << "J = " << fmt(j->value) << "  argmin v = " << fmt_point(j->v) << '\n';
    }
  }
  for (double eps : peps) {
    if (!(eps >= 0.0)) throw Failure{kPrecondition, "eps must be >= 0"};
    const auto r = solve_P_eps_reference(p, eps);
    if (!r) {
      std::cout << "eps = " << eps << "  infeasible on the grid\n";
    } else {
      std::cout << "eps = " << eps << "  value = " << fmt(r->value) << "  point = "
                << fmt_point(r->point) << '\n';
    }
  }
  return kOk;
}

int cmd_fit_eps(const std::string& instance, const std::vector<double>& eps_list,
                const std::vector<double>& values, double f_star) {
  const Loaded in = load(instance);
  if (eps_list.size() < 3) throw Failure{kPrecondition, "need at least 3 epsilon values"};
  if (!values.empty() && values.size() != eps_list.size()) {
    throw Failure{kPrecondition, "--values must match --eps in length"};
  }
  std::vector<std::pair<double, double>> samples;
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    double v;
    if (!values.empty()) {
      v = values[i];
    } else {
      if (!oracle_supported(in.problem)) {
        throw Failure{kPrecondition, "oracle limited to n + m <= " + std::to_string(kMaxOracleDims)};
      }
      const auto r = solve_P_eps_reference(in.problem, eps_list[i]);
      if (!r) throw Failure{kSolver, "oracle: (P_eps) infeasible on the grid"};
      v = r->value;
    }
    samples.emplace_back(eps_list[i], v);
    std::cout << "eps = " << eps_list[i] << "  val = " << fmt(v) << '\n';
  }
  EpsScalingFit fit;
  try {
    fit = fit_eps_scaling(samples, f_star);
  } catch (const DriverError& e) {
    throw Failure{kPrecondition, e.what()};
  }
  if (!fit.q_defined) {
    std::cout << "c = 0 (constant branch, q undefined)\n";
  } else {
    std::cout << "c = " << fmt(fit.c) << "  q = " << fmt(fit.q) << "  residual = " << fit.residual
              << "  (" << fit.used << " samples)\n";
  }
  return kOk;
}

int cmd_validate(const std::string& instance) {
  const Loaded in = load(instance);
  const AssumptionReport r = validate_assumptions(in.problem);
  const DegreeSummary& d = r.degrees;
  std::cout << "instance       " << in.problem.name << "  (n = " << in.problem.n()
            << ", m = " << in.problem.m() << ")\n";
  std::cout << "degrees        f " << d.objective << ", phi " << d.phi << ", k_min " << d.k_min
            << '\n';
  std::cout << "B in Omega     " << (r.b_in_omega ? "yes" : "no") << "  (" << r.b_outside_box
            << " of " << r.b_samples << " sampled points outside)\n";
  std::cout << "B(x) nonempty  " << (r.bx_nonempty ? "yes" : "no") << "  (" << r.x_with_empty_bx
            << " of " << r.x_samples << " x samples empty)\n";
  if (!r.archimedean_note.empty()) std::cout << "note           " << r.archimedean_note << '\n';
  for (const auto& w : r.warnings) std::cout << "warning        " << w << '\n';
  return kOk;
}

int cmd_check_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Failure{kParse, "cannot open report '" + path + "'"};
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Failure{kParse, e.what()};
  }
  const auto docs = doc.is_array() ? doc : nlohmann::json::array({doc});
  int bad = 0;
  for (const auto& d : docs) {
    LoadedTrace t;
    try {
      t = trace_from_json(d);
    } catch (const ReportError& e) {
      throw Failure{kParse, e.what()};
    }
    const auto failures = check_trace_invariants(t.trace, t.problem);
    std::cout << t.problem.name << "  eps = " << t.trace.config.epsilon << "  "
              << (failures.empty() ? "invariants hold" : "INVARIANTS VIOLATED") << '\n';
    for (const auto& f : failures) std::cout << "  " << f << '\n';
    bad += static_cast<int>(failures.size());
  }
  return bad == 0 ? kOk : kPrecondition;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Global solver for polynomial MPECs via value-function approximation"};
  app.require_subcommand(1);

  std::string instance;
  int k = 0;
  std::string output;
  int grid = 41;
  bool no_diag = false;
  auto* approx = app.add_subcommand("approx", "compute the value-function approximation J_k");
  approx->add_option("instance", instance, "bundled name or JSON file")->required();
  approx->add_option("--k", k, "relaxation order")->required();
  approx->add_option("--output,-o", output, "write the coefficient table (JSON)");
  approx->add_option("--grid", grid, "oracle grid points per dimension")->check(CLI::Range(2, 401));
  approx->add_flag("--no-diagnostics", no_diag, "skip the oracle checks");

  double eps = 0.0;
  std::string k_range;
  std::string csv;
  bool reference = false;
  int order_extra = 2;
  std::vector<double> ladder;
  auto* solve = app.add_subcommand("solve", "run the algorithm for one epsilon");
  solve->add_option("instance", instance, "bundled name or JSON file")->required();
  solve->add_option("--eps", eps, "perturbation epsilon > 0")->required();
  solve->add_option("--k", k_range, "orders, K or A..B (default: smallest admissible..5)");
  solve->add_option("--output,-o", output, "write the trace report (JSON)");
  solve->add_option("--csv", csv, "write the (epsilon, k, val, v_eps_k) series");
  solve->add_option("--order-extra", order_extra, "relaxation orders tried beyond the base order");
  solve->add_option("--ladder", ladder, "decreasing epsilons, overriding --eps")->delimiter(',');
  solve->add_flag("--reference", reference, "compare with the grid oracle");

  std::vector<double> jpoint;
  std::vector<double> peps;
  auto* oracle = app.add_subcommand("oracle", "brute-force ground truth");
  oracle->add_option("instance", instance, "bundled name or JSON file")->required();
  oracle->add_option("--J", jpoint, "evaluate J at the point (x..., y...)");
  oracle->add_option("--Peps", peps, "reference solve of (P_eps) for these epsilons")
      ->delimiter(',');

  std::vector<double> eps_list;
  std::vector<double> values;
  double f_star = 0.0;
  auto* fit = app.add_subcommand("fit-eps", "fit f* - val(P_eps) = -c eps^q");
  fit->add_option("instance", instance, "bundled name or JSON file")->required();
  fit->add_option("--eps", eps_list, "epsilon values")->delimiter(',')->required();
  fit->add_option("--fstar", f_star, "reference optimum f*")->required();
  fit->add_option("--values", values, "use these values instead of the oracle")->delimiter(',');

  auto* validate = app.add_subcommand("validate", "check the standing assumptions by sampling");
  validate->add_option("instance", instance, "bundled name or JSON file")->required();

  std::string report_path;
  auto* check = app.add_subcommand("check-report", "re-check the invariants of a saved trace");
  check->add_option("report", report_path, "JSON report written by solve")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kParse;
  }

  try {
    if (*approx) return cmd_approx(instance, k, output, grid, !no_diag);
    if (*solve) {
      if (k_range.empty()) k_range = std::to_string(load(instance).problem.k_min()) + "..5";
      if (ladder.empty() && !(eps > 0.0)) throw Failure{kPrecondition, "--eps must be > 0"};
      if (!ladder.empty()) eps = ladder.front();
      return cmd_solve(instance, eps, k_range, output, csv, reference, order_extra, ladder);
    }
    if (*oracle) {
      if (jpoint.empty() && peps.empty()) throw Failure{kParse, "oracle needs --J or --Peps"};
      return cmd_oracle(instance, jpoint, peps);
    }
    if (*fit) return cmd_fit_eps(instance, eps_list, values, f_star);
    if (*validate) return cmd_validate(instance);
    if (*check) return cmd_check_report(report_path);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return f.code;
  } catch (const OracleError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kPrecondition;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolver;
  }
  return kParse;
}
