#include "mpecsos/report.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace mpecsos {

namespace {

using nlohmann::json;

constexpr double kFeasSlack = 1e-6;

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

json vector_json(const Eigen::VectorXd& z) {
  return json(std::vector<double>(z.data(), z.data() + z.size()));
}

Eigen::VectorXd vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json points_json(const std::vector<Eigen::VectorXd>& pts) {
  json out = json::array();
  for (const auto& z : pts) out.push_back(vector_json(z));
  return out;
}

std::vector<Eigen::VectorXd> points_from(const json& j) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& z : j) out.push_back(vector_from(z));
  return out;
}

json polynomial_json(const Polynomial& p) {
  json terms = json::array();
  for (const auto& [alpha, c] : p.terms()) {
    terms.push_back({{"exponents", alpha.exponents()}, {"coefficient", c}});
  }
  return {{"variables", p.variables()}, {"terms", terms}};
}

Polynomial polynomial_from(const json& j) {
  const auto vars = j.at("variables").get<std::vector<std::string>>();
  Polynomial::TermMap terms;
  for (const auto& t : j.at("terms")) {
    auto e = t.at("exponents").get<std::vector<int>>();
    if (e.size() != vars.size()) throw ReportError("exponent length mismatch");
    terms[ExponentVector(std::move(e))] += t.at("coefficient").get<double>();
  }
  return Polynomial(vars, terms);
}

template <class Enum>
Enum enum_from(const std::string& text, std::initializer_list<Enum> values) {
  for (Enum e : values) {
    if (to_string(e) == text) return e;
  }
  throw ReportError("unknown status '" + text + "'");
}

SdpStatus sdp_status_from(const std::string& s) {
  return enum_from(s, {SdpStatus::Optimal, SdpStatus::PrimalInfeasible, SdpStatus::DualInfeasible,
                       SdpStatus::NumericalTrouble, SdpStatus::IterationLimit});
}

FeasibilityStatus feasibility_from(const std::string& s) {
  return enum_from(s, {FeasibilityStatus::Nonempty, FeasibilityStatus::EmptyCertified,
                       FeasibilityStatus::Unknown});
}

TerminationReason termination_from(const std::string& s) {
  return enum_from(s, {TerminationReason::Converged, TerminationReason::KMax,
                       TerminationReason::AllEmpty});
}

json config_json(const AlgoConfig& c) {
  return {{"epsilon", c.epsilon},
          {"k_start", c.k_start},
          {"k_max", c.k_max},
          {"order_extra", c.order_extra},
          {"stop_tol", c.stop_tol},
          {"stall_iterations", c.stall_iterations},
          {"epsilon_ladder", c.epsilon_ladder},
          {"solver",
           {{"gap_tol", c.solver.gap_tol},
            {"feas_tol", c.solver.feas_tol},
            {"max_iterations", c.solver.max_iterations},
            {"step_fraction", c.solver.step_fraction}}}};
}

AlgoConfig config_from(const json& j) {
  AlgoConfig c;
  c.epsilon = j.at("epsilon").get<double>();
  c.k_start = j.at("k_start").get<int>();
  c.k_max = j.at("k_max").get<int>();
  c.order_extra = j.at("order_extra").get<int>();
  c.stop_tol = j.at("stop_tol").get<double>();
  c.stall_iterations = j.at("stall_iterations").get<int>();
  c.epsilon_ladder = j.at("epsilon_ladder").get<std::vector<double>>();
  const json& s = j.at("solver");
  c.solver.gap_tol = s.at("gap_tol").get<double>();
  c.solver.feas_tol = s.at("feas_tol").get<double>();
  c.solver.max_iterations = s.at("max_iterations").get<int>();
  c.solver.step_fraction = s.at("step_fraction").get<double>();
  return c;
}

}  // namespace

ReferenceComparison compare_with_reference(const AlgorithmTrace& trace, const MpecProblem& problem,
                                           const OracleConfig& config) {
  const auto ref = solve_P_eps_reference(problem, trace.config.epsilon, config);
  if (!ref) throw ReportError("oracle found no feasible grid point for (P_eps)");
  ReferenceComparison out;
  out.reference_value = ref->value;
  out.reference_point = ref->point;
  for (const auto& r : trace.records) {
    if (r.val && *r.val < ref->value - out.grid_tolerance) out.sandwich_ok = false;
  }
  out.stagnation = trace.any_successful() &&
                   trace.final_value > ref->value + out.grid_tolerance;
  return out;
}

json value_function_json(const ValueFunctionApprox& a) {
  json degs = json::array();
  for (const auto& [label, d] : a.multiplier_degrees) degs.push_back({{"label", label}, {"degree", d}});
  return {{"k", a.k},
          {"jk", polynomial_json(a.jk)},
          {"rho", a.rho},
          {"status", to_string(a.status)},
          {"achieved_gap", a.achieved_gap},
          {"primal_residual", a.primal_residual},
          {"dual_residual", a.dual_residual},
          {"identity_residual", a.identity_residual},
          {"iterations", a.iterations},
          {"multiplier_degrees", degs},
          {"seconds", a.seconds}};
}

ValueFunctionApprox value_function_from_json(const json& j) {
  ValueFunctionApprox a;
  a.k = j.at("k").get<int>();
  a.jk = polynomial_from(j.at("jk"));
  a.rho = j.at("rho").get<double>();
  a.status = sdp_status_from(j.at("status").get<std::string>());
  a.achieved_gap = j.at("achieved_gap").get<double>();
  a.primal_residual = j.at("primal_residual").get<double>();
  a.dual_residual = j.at("dual_residual").get<double>();
  a.identity_residual = j.at("identity_residual").get<double>();
  a.iterations = j.at("iterations").get<int>();
  for (const auto& d : j.at("multiplier_degrees")) {
    a.multiplier_degrees.emplace_back(d.at("label").get<std::string>(), d.at("degree").get<int>());
  }
  a.seconds = j.at("seconds").get<double>();
  return a;
}

json trace_to_json(const AlgorithmTrace& trace, const json& instance,
                   const std::optional<ReferenceComparison>& reference) {
  json records = json::array();
  for (const auto& r : trace.records) {
    records.push_back({{"k", r.k},
                       {"value_function", value_function_json(r.jk)},
                       {"sk_status", to_string(r.sk_status)},
                       {"sk_sdp_status", to_string(r.sk_sdp_status)},
                       {"val", optional_number(r.val)},
                       {"bound", optional_number(r.bound)},
                       {"order", r.order},
                       {"flat", r.flat},
                       {"points", points_json(r.points)},
                       {"v_eps_k", optional_number(r.v_eps_k)},
                       {"solver_failure", r.solver_failure},
                       {"note", r.note},
                       {"seconds", r.seconds}});
  }
  json doc = {{"schema", kTraceSchema},
              {"instance", instance},
              {"config", config_json(trace.config)},
              {"records", records},
              {"final_value", trace.any_successful() ? json(trace.final_value) : json(nullptr)},
              {"final_points", points_json(trace.final_points)},
              {"termination", to_string(trace.termination)},
              {"seconds", trace.seconds}};
  if (reference) {
    doc["reference"] = {{"value", reference->reference_value},
                        {"point", vector_json(reference->reference_point)},
                        {"grid_tolerance", reference->grid_tolerance},
                        {"sandwich_ok", reference->sandwich_ok},
                        {"stagnation", reference->stagnation}};
  }
  return doc;
}

LoadedTrace trace_from_json(const json& doc) {
  try {
    if (doc.at("schema").get<std::string>() != kTraceSchema) {
      throw ReportError("unsupported report schema '" + doc.at("schema").get<std::string>() + "'");
    }
    LoadedTrace out;
    out.problem = load_problem(doc.at("instance").dump());
    AlgorithmTrace& t = out.trace;
    t.config = config_from(doc.at("config"));
    for (const auto& j : doc.at("records")) {
      IterationRecord r;
      r.k = j.at("k").get<int>();
      r.jk = value_function_from_json(j.at("value_function"));
      r.sk_status = feasibility_from(j.at("sk_status").get<std::string>());
      r.sk_sdp_status = sdp_status_from(j.at("sk_sdp_status").get<std::string>());
      r.val = read_optional(j, "val");
      r.bound = read_optional(j, "bound");
      r.order = j.at("order").get<int>();
      r.flat = j.at("flat").get<bool>();
      r.points = points_from(j.at("points"));
      r.v_eps_k = read_optional(j, "v_eps_k");
      r.solver_failure = j.at("solver_failure").get<bool>();
      r.note = j.at("note").get<std::string>();
      r.seconds = j.at("seconds").get<double>();
      t.records.push_back(std::move(r));
    }
    t.final_value = read_optional(doc, "final_value").value_or(std::numeric_limits<double>::quiet_NaN());
    t.final_points = points_from(doc.at("final_points"));
    t.termination = termination_from(doc.at("termination").get<std::string>());
    t.seconds = doc.at("seconds").get<double>();
    if (doc.contains("reference")) {
      const json& ref = doc.at("reference");
      ReferenceComparison c;
      c.reference_value = ref.at("value").get<double>();
      c.reference_point = vector_from(ref.at("point"));
      c.grid_tolerance = ref.at("grid_tolerance").get<double>();
      c.sandwich_ok = ref.at("sandwich_ok").get<bool>();
      c.stagnation = ref.at("stagnation").get<bool>();
      out.reference = c;
    }
    return out;
  } catch (const json::exception& e) {
    throw ReportError(std::string("malformed report: ") + e.what());
  } catch (const ProblemError& e) {
    throw ReportError(std::string("embedded instance: ") + e.what());
  }
}

std::vector<std::string> check_trace_invariants(const AlgorithmTrace& trace,
                                                const MpecProblem& problem) {
  std::vector<std::string> fail;
  auto note = [&](const std::string& where, const std::string& what) {
    fail.push_back(where + ": " + what);
  };
  const double eps = trace.config.epsilon;
  std::optional<double> running;
  int expected_k = trace.config.k_start;
  bool all_empty = !trace.records.empty();
  int successful = 0;
  for (const auto& r : trace.records) {
    const std::string where = "k=" + std::to_string(r.k);
    if (r.k != expected_k++) note(where, "orders are not consecutive from k_start");
    if (r.k > trace.config.k_max) note(where, "order exceeds k_max");
    if (r.jk.ok() && r.jk.jk.degree() > 2 * r.k) note(where, "deg J_k exceeds 2k");
    if (r.sk_status != FeasibilityStatus::EmptyCertified) all_empty = false;
    if (r.val) {
      ++successful;
      if (!r.flat) note(where, "value recorded without a flat relaxation");
      const double expect = running ? std::min(*running, *r.val) : *r.val;
      if (running && expect > *running) note(where, "v_eps_k increased");
      running = expect;
    }
    if (running.has_value() != r.v_eps_k.has_value() || (running && *running != *r.v_eps_k)) {
      note(where, "v_eps_k is not the running minimum of val");
    }
    for (const auto& z : r.points) {
      const double viol = pk_eps_violation(problem, r.jk.jk, eps, z);
      if (viol > kFeasSlack) {
        std::ostringstream os;
        os << "extracted point violates (P_eps^k) by " << viol;
        note(where, os.str());
      }
    }
  }
  if (running) {
    if (trace.final_value != *running) note("final", "final value differs from the last v_eps_k");
  } else if (!std::isnan(trace.final_value)) {
    note("final", "final value without a successful iteration");
  }
  for (const auto& z : trace.final_points) {
    bool found = false;
    for (const auto& r : trace.records) {
      for (const auto& p : r.points) found = found || (p.size() == z.size() && p == z);
    }
    if (!found) note("final", "final point not among the extracted points");
  }
  if ((trace.termination == TerminationReason::AllEmpty) != all_empty) {
    note("termination", "AllEmpty does not match the per-iteration outcomes");
  }
  if (trace.termination == TerminationReason::Converged &&
      successful < trace.config.stall_iterations + 1) {
    note("termination", "Converged with too few successful iterations");
  }
  return fail;
}

std::string trace_series_csv(const AlgorithmTrace& trace) {
  std::ostringstream os;
  os.precision(17);
  os << "k,val,v_eps_k\n";
  for (const auto& r : trace.records) {
    os << r.k << ',';
    if (r.val) os << *r.val;
    os << ',';
    if (r.v_eps_k) os << *r.v_eps_k;
    os << '\n';
  }
  return os.str();
}

}  // namespace mpecsos
