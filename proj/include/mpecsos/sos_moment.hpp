#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mpecsos/box_measure.hpp"
#include "mpecsos/polynomial.hpp"
#include "mpecsos/sdp.hpp"

namespace mpecsos {

class RelaxationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Weighted SOS term sigma * h with deg sigma <= sigma_degree (even).
struct Multiplier {
  Polynomial generator;
  int sigma_degree = 0;
};

/// Largest admissible multipliers for an identity of degree `degree`:
/// sigma_degree = 2 floor((degree - deg h) / 2).  Throws if deg h > degree.
std::vector<Multiplier> max_degree_multipliers(const std::vector<Polynomial>& generators,
                                               int degree);

/// Coefficient-matching encoding of
///
///   maximize  sum_alpha w_alpha p_alpha
///   s.t.      target - p = sigma_0 + sum_j sigma_j h_j,   sigma_j SOS,
///
/// with p free over a subset of the variables.  SDP layout: one PSD Gram
/// block per sigma (sigma_0 first), then one free block holding p; one
/// equality row per monomial of degree <= `degree`; the SDP minimizes
/// -sum w p, so its optimal value is -rho.
struct SosIdentityProgram {
  std::vector<std::string> variables;
  Polynomial target;
  std::vector<std::string> free_variables;
  MonomialBasis free_basis;
  std::vector<int> free_to_row;          // row index of each free monomial
  Eigen::VectorXd objective_weights;      // one per free monomial
  int degree = 0;                         // rows cover N^n_degree
  MonomialBasis row_basis;
  std::vector<Multiplier> multipliers;    // multipliers[0] is sigma_0 (h = 1)
  std::vector<MonomialBasis> gram_bases;  // parallel to multipliers
  int free_block = 0;
};

/// Throws RelaxationError on degree bound violations or inconsistent data.
std::pair<SosIdentityProgram, SdpProblem> build_sos_identity(
    const Polynomial& target, const std::vector<std::string>& free_variables, int free_degree,
    const std::vector<Multiplier>& multipliers, int degree,
    const Eigen::VectorXd& objective_weights);

/// Convenience overload: weights from a moment vector over the free variables.
std::pair<SosIdentityProgram, SdpProblem> build_sos_identity(
    const Polynomial& target, const std::vector<std::string>& free_variables,
    const std::vector<Multiplier>& multipliers, int degree, const MomentVector& gamma);

struct SosIdentitySolution {
  SdpSolution sdp;
  double rho = 0.0;                   // sum_alpha w_alpha p_alpha
  Polynomial p;                       // over free_variables
  std::vector<Eigen::MatrixXd> grams;  // parallel to multipliers
  double identity_residual = 0.0;      // max-abs coefficient of the identity defect
};

SosIdentitySolution solve_sos_identity(const SosIdentityProgram& program, const SdpProblem& sdp,
                                       const SolverOptions& options = {});

/// Max-abs coefficient of target - p - sum_j (b_j' G_j b_j) h_j.
double sos_identity_residual(const SosIdentityProgram& program, const Polynomial& p,
                             const std::vector<Eigen::MatrixXd>& grams);

/// Order-t moment relaxation of min f over {h >= 0 for h in generators},
/// encoded as its SOS dual (max lambda s.t. f - lambda is in the truncated
/// quadratic module).  Pseudo-moments are read off the SDP duals.
struct MomentRelaxation {
  Polynomial objective;
  std::vector<Polynomial> generators;
  int order = 0;
  MonomialBasis moment_basis;  // N^n_{2t}
  int flatness_offset = 1;     // max(1, max ceil(deg h / 2))
  SosIdentityProgram program;
};

std::pair<MomentRelaxation, SdpProblem> build_moment_relaxation(
    const Polynomial& f, const std::vector<Polynomial>& generators, int order);

struct FlatnessResult {
  bool flat = false;
  std::vector<int> ranks;  // rank of M_s for s = 0..t
  double tolerance = 1e-6;
};

inline constexpr double kRankTolerance = 1e-6;

/// Numerical rank of `m`: singular values strictly above tol * sigma_max.
int numerical_rank(const Eigen::MatrixXd& m, double tol = kRankTolerance);

/// Moment matrix M_s(y) built from moments indexed by `basis`.
Eigen::MatrixXd moment_matrix(const Eigen::VectorXd& moments, const MonomialBasis& basis, int s);

/// rank M_t(y) == rank M_{t-v}(y).
FlatnessResult check_flatness(const Eigen::VectorXd& moments, const MomentRelaxation& relaxation);

class ExtractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Atoms of a flat moment sequence.  Throws ExtractionError when the basis is
/// ill-conditioned, rebuilt moments miss by more than 1e-5, or an atom
/// violates a generator by more than 1e-6.
std::vector<Eigen::VectorXd> extract_atoms(const Eigen::VectorXd& moments,
                                           const MomentRelaxation& relaxation);

struct MomentSolution {
  SdpSolution sdp;
  Eigen::VectorXd moments;  // y_alpha over moment_basis, y_0 = 1
  double bound = 0.0;       // NaN unless the SDP is Optimal
  FlatnessResult flatness;
  bool flat = false;        // flat and extraction succeeded
  std::vector<Eigen::VectorXd> atoms;
};

MomentSolution solve_moment_relaxation(const MomentRelaxation& relaxation, const SdpProblem& sdp,
                                       const SolverOptions& options = {});

enum class FeasibilityStatus { Nonempty, EmptyCertified, Unknown };

std::string to_string(FeasibilityStatus status);

struct FeasibilityResult {
  FeasibilityStatus status = FeasibilityStatus::Unknown;
  std::optional<Eigen::VectorXd> witness;
  /// For EmptyCertified: residual of -1 = sigma_0 + sum sigma_j h_j.
  double certificate_residual = 0.0;
  SdpStatus sdp_status = SdpStatus::NumericalTrouble;
  int order = 0;
};

/// Decides {h >= 0 for h in generators} at relaxation order t.  A second
/// solve minimizing the squared distance to a fixed point is attempted when
/// the first moment sequence is not flat.
FeasibilityResult certify_feasibility(const std::vector<Polynomial>& generators, int order,
                                      const SolverOptions& options = {});

}  // namespace mpecsos
