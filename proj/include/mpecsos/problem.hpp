#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mpecsos/polynomial.hpp"

namespace mpecsos {

class ProblemError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Box Omega = prod_i [-c_i, c_i] over (x, y), with c_i = sqrt(M_i).
struct OmegaBox {
  Eigen::VectorXd halfwidth;

  int dimension() const { return static_cast<int>(halfwidth.size()); }
  double bound(int i) const { return halfwidth[i] * halfwidth[i]; }
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& z, double slack = 0.0) const;
};

/// min f(x, y)  s.t.  g_i(x, y) >= 0,  h_j(x, y) >= 0,
///                    phi(x, y, v) >= 0 for all v in B(x) = {v : h_j(x, v) >= 0}.
struct MpecProblem {
  std::string name;
  std::vector<std::string> x_vars;
  std::vector<std::string> y_vars;
  std::vector<std::string> v_vars;  // mirrors y_vars

  Polynomial objective;                  // over (x, y)
  std::vector<Polynomial> constraints_g;  // over (x, y)
  std::vector<Polynomial> constraints_h;  // over (x, y)
  Polynomial phi;                        // over (x, y, v)
  OmegaBox box;                          // coordinates ordered x then y

  int n() const { return static_cast<int>(x_vars.size()); }
  int m() const { return static_cast<int>(y_vars.size()); }
  std::vector<std::string> xy_vars() const;
  std::vector<std::string> xyv_vars() const;

  /// h_j(x, v) over (x, y, v).
  Polynomial h_in_v(std::size_t j) const;
  /// Smallest admissible relaxation order of the value-function program.
  int k_min() const;
};

struct DegreeSummary {
  int objective = 0;
  std::vector<int> g;
  std::vector<int> h;
  int phi = 0;
  int k_min = 0;
};

DegreeSummary degrees(const MpecProblem& problem);

/// Parses an instance document (JSON):
///   { "name": ..., "variables": {"x": [...], "y": [...], "v": [...]},
///     "objective": "...", "A": ["..."], "B": ["..."], "phi": "...",
///     "M": number | {"<var>": number, ...} }
/// "variables.v" is optional.  Throws ProblemError.
MpecProblem load_problem(std::string_view document);
MpecProblem load_problem_file(const std::string& path);

/// Names of the built-in instances.
std::vector<std::string> bundled_instance_names();
/// Document text of a built-in instance; throws ProblemError if unknown.
std::string bundled_instance(std::string_view name);
/// Resolves a bundled name or a file path.
MpecProblem resolve_problem(const std::string& name_or_path);

struct AssumptionReport {
  int b_samples = 0;            // sampled points of B(x) inspected
  int b_outside_box = 0;        // of which outside the y-box
  int x_samples = 0;            // x grid points in Proj_x Omega
  int x_with_empty_bx = 0;      // of which B(x) was sampled empty
  bool b_in_omega = true;
  bool bx_nonempty = true;
  DegreeSummary degrees;
  std::vector<std::string> warnings;
  std::string archimedean_note;
};

/// Sampled, not proven: B(x) within the box for x in Proj_x Omega, and
/// B(x) nonempty on an x grid.  Never throws on a loaded problem.
AssumptionReport validate_assumptions(const MpecProblem& problem, int sample_count = 4000);

}  // namespace mpecsos
