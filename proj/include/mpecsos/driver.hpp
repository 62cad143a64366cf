#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mpecsos/problem.hpp"
#include "mpecsos/sdp.hpp"
#include "mpecsos/sos_moment.hpp"
#include "mpecsos/value_function.hpp"

namespace mpecsos {

class DriverError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct AlgoConfig {
  double epsilon = 1e-3;
  int k_start = 0;       // 0: the problem's smallest admissible order
  int k_max = 5;
  int order_extra = 2;   // relaxation orders t0 .. t0 + order_extra are tried
  double stop_tol = 1e-6;
  int stall_iterations = 2;
  std::vector<double> epsilon_ladder;  // decreasing; used by run_epsilon_ladder
  SolverOptions solver;

  /// Throws DriverError; resolves k_start = 0 against the problem.
  AlgoConfig resolved(const MpecProblem& problem) const;
};

enum class TerminationReason { Converged, KMax, AllEmpty };
std::string to_string(TerminationReason reason);

struct IterationRecord {
  int k = 0;
  ValueFunctionApprox jk;
  FeasibilityStatus sk_status = FeasibilityStatus::Unknown;
  SdpStatus sk_sdp_status = SdpStatus::NumericalTrouble;
  std::optional<double> val;    // val(P_eps^k), set when the relaxation was flat
  std::optional<double> bound;  // relaxation lower bound at the last order solved
  int order = 0;                // relaxation order of `bound`
  bool flat = false;
  std::vector<Eigen::VectorXd> points;  // extracted minimizers, original coordinates
  std::optional<double> v_eps_k;        // running min of val over records so far
  bool solver_failure = false;
  std::string note;
  double seconds = 0.0;

  bool successful() const { return val.has_value(); }
};

struct AlgorithmTrace {
  AlgoConfig config;
  std::vector<IterationRecord> records;
  double final_value = 0.0;  // NaN without a successful iteration
  std::vector<Eigen::VectorXd> final_points;
  TerminationReason termination = TerminationReason::KMax;
  double seconds = 0.0;

  bool any_successful() const;
};

/// J_k is independent of eps; share one cache across runs on the same problem.
using JkCache = std::map<int, ValueFunctionApprox>;

/// Generators of S_k = {g + eps >= 0, h + eps >= 0, J_k + eps >= 0, box} in
/// normalized coordinates u = z / c.
std::vector<Polynomial> sk_generators(const MpecProblem& problem, const Polynomial& jk,
                                      double epsilon);

AlgorithmTrace run_algorithm1(const MpecProblem& problem, const AlgoConfig& config,
                              JkCache* cache = nullptr);

/// One run per entry of config.epsilon_ladder, reusing J_k across runs.
std::vector<AlgorithmTrace> run_epsilon_ladder(const MpecProblem& problem,
                                               const AlgoConfig& config);

/// Largest violation of the (P_eps^k) constraints at z (original coordinates);
/// <= 0 means feasible.  Box violations count as well.
double pk_eps_violation(const MpecProblem& problem, const Polynomial& jk, double epsilon,
                        const Eigen::VectorXd& z);

/// v_eps^k < f_star + eps + 1e-6 for the final value of the trace.
bool check_upper_bound(const AlgorithmTrace& trace, double f_star, double epsilon);

struct EpsScalingFit {
  double c = 0.0;
  double q = 0.0;
  bool q_defined = false;  // false on the c = 0 branch
  double residual = 0.0;   // sum of squared log-log residuals
  std::vector<std::pair<double, double>> samples;  // (eps, value)
  int used = 0;
};

/// Fits f_star - val(eps) = -c eps^q by least squares in log-log space.
EpsScalingFit fit_eps_scaling(const std::vector<std::pair<double, double>>& samples,
                              double f_star);

}  // namespace mpecsos
