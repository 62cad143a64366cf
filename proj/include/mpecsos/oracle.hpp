#pragma once

#include <optional>
#include <stdexcept>

#include <Eigen/Core>

#include "mpecsos/problem.hpp"

namespace mpecsos {

class OracleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Grid resolutions; 0 selects the default for the problem's dimensions.
struct OracleConfig {
  int inner_grid = 0;  // points per v dimension (2001 for m = 1, 201 for m = 2)
  int outer_grid = 0;  // points per (x, y) dimension (401 for two dimensions)
  int refinement_rounds = 2;

  void validate() const;
};

inline constexpr int kMaxOracleDims = 4;

struct InnerMinimum {
  double value;
  Eigen::VectorXd v;
};

/// J(x, y) = min { phi(x, y, v) : h_j(x, v) >= 0 } by grid search over the
/// y-box with nested 10x refinement; nullopt when no sample of B(x) is found.
std::optional<InnerMinimum> eval_J(const MpecProblem& problem, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& y, const OracleConfig& config = {});

/// Reusable evaluator: caches the substituted polynomials.
class ValueFunctionOracle {
 public:
  explicit ValueFunctionOracle(const MpecProblem& problem, const OracleConfig& config = {});
  std::optional<InnerMinimum> operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
  /// J(x, y) >= threshold; stops at the first sample below it.
  bool at_least(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double threshold) const;
  const MpecProblem& problem() const { return problem_; }

 private:
  std::optional<InnerMinimum> search(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                     double stop_below) const;

  const MpecProblem& problem_;
  OracleConfig config_;
  int inner_grid_;
  std::vector<Polynomial> h_v_;  // h_j(x, v) over (x, y, v)
};

struct ReferenceSolution {
  double value;
  Eigen::VectorXd point;  // (x, y)
};

/// Grid search for min f over {g >= -eps, h >= -eps, J >= -eps} within the
/// box, refined around the few best grid points; nullopt when no grid point qualifies.
std::optional<ReferenceSolution> solve_P_eps_reference(const MpecProblem& problem, double eps,
                                                       const OracleConfig& config = {});

}  // namespace mpecsos
