#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mpecsos {

// Standard-form conic program over a product of cones K:
//
//   primal:  minimize <C, X>  s.t.  <A_i, X> = b_i,  X in K
//   dual:    maximize b'y     s.t.  C - sum_i y_i A_i = S in K*
//
// K is a product of PSD blocks, nonnegative orthants and free (unrestricted)
// blocks; K* carries {0} on free blocks.

enum class BlockKind { PSD, Nonnegative, Free };

struct BlockSpec {
  BlockKind kind;
  int size;
};

/// One coefficient.  For PSD blocks (row, col) with row <= col stands for the
/// symmetric pair; for vector blocks row == col is the component index.
/// Repeated entries accumulate.
struct SdpEntry {
  int block;
  int row;
  int col;
  double value;
};

class SdpError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SdpProblem {
  std::vector<BlockSpec> blocks;
  std::vector<SdpEntry> objective;
  std::vector<std::vector<SdpEntry>> constraints;
  Eigen::VectorXd rhs;

  int num_constraints() const { return static_cast<int>(constraints.size()); }

  /// Throws SdpError on inconsistent dimensions, entries outside a block,
  /// lower-triangle PSD entries, off-diagonal vector entries, or an empty
  /// constraint.
  void validate() const;
};

/// Block-structured point: PSD blocks are n x n, vector blocks are n x 1.
using BlockVector = std::vector<Eigen::MatrixXd>;

enum class SdpStatus {
  Optimal,
  PrimalInfeasible,
  DualInfeasible,
  NumericalTrouble,
  IterationLimit,
};

std::string to_string(SdpStatus status);

struct SolverOptions {
  double gap_tol = 1e-8;
  double feas_tol = 1e-8;
  int max_iterations = 200;
  double step_fraction = 0.98;

  void validate() const;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::NumericalTrouble;
  /// Optimal X, or for DualInfeasible the primal ray normalized to <C, X> = -1.
  BlockVector primal;
  /// Optimal y, or for PrimalInfeasible the dual ray normalized to b'y = 1.
  Eigen::VectorXd dual;
  /// Dual slack S = C - A'y (for infeasibility rays: -A'y).
  BlockVector slack;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  /// Residual of the attached infeasibility certificate (0 when none).
  double certificate_residual = 0.0;
  int iterations = 0;
  /// Complementarity measure mu per iteration, in the solver's scaling.
  std::vector<double> mu_history;
};

struct Residuals {
  double primal;
  double dual;
  double gap;
};

/// Scale-normalized residuals of a candidate (X, y):
///   primal = (||A(X) - b|| + dist(X, K)) / (1 + ||b||)
///   dual   = dist(C - A'y, K*) / (1 + ||C||)
///   gap    = |<C, X> - b'y| / (1 + |<C, X>| + |b'y|)
Residuals residuals(const SdpProblem& problem, const BlockVector& primal,
                    const Eigen::VectorXd& dual);

/// For a primal-infeasibility ray y (b'y > 0): dist(-A'y, K*) / b'y.
double dual_ray_residual(const SdpProblem& problem, const Eigen::VectorXd& ray);

/// For a dual-infeasibility ray X (<C, X> < 0): (||A(X)|| + dist(X, K)) / -<C, X>.
double primal_ray_residual(const SdpProblem& problem, const BlockVector& ray);

/// Homogeneous self-dual interior-point method with HKM directions and
/// Mehrotra predictor-corrector.  Deterministic for identical input.
SdpSolution solve(const SdpProblem& problem, const SolverOptions& options = {});

// Evaluation helpers on the original (unscaled) data.
Eigen::VectorXd apply_constraints(const SdpProblem& problem, const BlockVector& x);
BlockVector apply_adjoint(const SdpProblem& problem, const Eigen::VectorXd& y);
double objective_value(const SdpProblem& problem, const BlockVector& x);
BlockVector zero_point(const SdpProblem& problem);

/// Sparse text dump, one coefficient per line:
///   `<constraint> <block> <row> <col> <value>`
/// preceded by header lines `blocks <kind>:<size> ...` and `rhs <b_1> ... <b_m>`.
/// Constraint index 0 is the objective; constraints are numbered from 1.
/// Indices are 1-based.
void write_sparse(std::ostream& out, const SdpProblem& problem);
SdpProblem read_sparse(std::istream& in);

}  // namespace mpecsos
