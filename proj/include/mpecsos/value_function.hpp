#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mpecsos/oracle.hpp"
#include "mpecsos/problem.hpp"
#include "mpecsos/sdp.hpp"
#include "mpecsos/sos_moment.hpp"

namespace mpecsos {

class ValueFunctionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// J_k and the data of the solve that produced it.
struct ValueFunctionApprox {
  int k = 0;
  Polynomial jk;              // over (x, y), original coordinates
  double rho = 0.0;           // integral of J_k against the uniform measure on Omega
  SdpStatus status = SdpStatus::NumericalTrouble;
  double achieved_gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double identity_residual = 0.0;  // in normalized coordinates
  int iterations = 0;
  std::vector<std::pair<std::string, int>> multiplier_degrees;  // label, deg sigma
  double seconds = 0.0;

  bool ok() const { return status == SdpStatus::Optimal; }
};

/// The value-function program in normalized coordinates u = z / c, where c
/// are the box half-widths (v shares the half-widths of y):
///   target phi(c u), free p over (x, y) of degree 2k, multipliers
///   h_j(x, v) for every j and 1 - u_{y_i}^2 for every y coordinate.
/// The x-box is deliberately left out.
std::pair<SosIdentityProgram, SdpProblem> build_jm_program(const MpecProblem& problem, int k);

ValueFunctionApprox compute_Jk(const MpecProblem& problem, int k,
                               const SolverOptions& options = {});

struct GridCheck {
  double value = 0.0;      // max violation (lower_bound_check) or L1 estimate
  Eigen::VectorXd worst;   // point of the max violation
  int evaluated = 0;
  int skipped = 0;         // grid points where B(x) was sampled empty
};

/// max over a tensor grid on Omega of J_k - J_oracle.
GridCheck lower_bound_check(const Polynomial& jk, const MpecProblem& problem,
                            int grid_points_per_dim = 41, const OracleConfig& config = {});

/// Trapezoidal estimate of the normalized integral of |J_k - J_oracle| on Omega.
GridCheck l1_distance_estimate(const Polynomial& jk, const MpecProblem& problem,
                               int grid_points_per_dim = 41, const OracleConfig& config = {});

/// Coefficient table in graded-lex order:
///   {"k":..,"variables":[..],"rho":..,"terms":[{"exponents":[..],"coefficient":..}, ..]}
std::string jk_table_json(const ValueFunctionApprox& approx, int indent = 2);

/// Inverse of the "terms" part of jk_table_json.
Polynomial jk_from_table_json(const std::string& text);

}  // namespace mpecsos
