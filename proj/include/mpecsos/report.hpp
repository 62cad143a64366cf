#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpecsos/driver.hpp"
#include "mpecsos/oracle.hpp"
#include "mpecsos/problem.hpp"
#include "mpecsos/value_function.hpp"

namespace mpecsos {

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kTraceSchema = "mpecsos-trace/1";

/// Oracle comparison of a finished trace (desk-scale problems only).
struct ReferenceComparison {
  double reference_value = 0.0;
  Eigen::VectorXd reference_point;
  double grid_tolerance = 5e-3;
  bool sandwich_ok = true;  // every val(P_eps^k) >= reference - tolerance
  bool stagnation = false;  // final value above the reference by more than the tolerance
};

ReferenceComparison compare_with_reference(const AlgorithmTrace& trace, const MpecProblem& problem,
                                           const OracleConfig& config = {});

nlohmann::json value_function_json(const ValueFunctionApprox& approx);
ValueFunctionApprox value_function_from_json(const nlohmann::json& doc);

/// `instance` is the instance document the run was made from; it is embedded
/// so that the report can be checked without the original file.
nlohmann::json trace_to_json(const AlgorithmTrace& trace, const nlohmann::json& instance,
                             const std::optional<ReferenceComparison>& reference = std::nullopt);

struct LoadedTrace {
  MpecProblem problem;
  AlgorithmTrace trace;
  std::optional<ReferenceComparison> reference;
};

/// Throws ReportError on schema mismatch or malformed content.
LoadedTrace trace_from_json(const nlohmann::json& doc);

/// Re-asserts the recorded invariants; returns human-readable failures.
std::vector<std::string> check_trace_invariants(const AlgorithmTrace& trace,
                                                const MpecProblem& problem);

/// "k,val,v_eps_k" rows; empty cells for absent values.
std::string trace_series_csv(const AlgorithmTrace& trace);

}  // namespace mpecsos
