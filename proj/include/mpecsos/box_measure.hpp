#pragma once

#include <Eigen/Core>

#include "mpecsos/polynomial.hpp"

namespace mpecsos {

/// Moments gamma_alpha of the uniform probability measure on a symmetric box,
/// one value per element of `basis`.
struct MomentVector {
  MonomialBasis basis;
  Eigen::VectorXd values;

  /// Integral of p against the measure; p must live on basis.num_vars()
  /// variables and have degree <= basis.max_degree().
  double integrate(const Polynomial& p) const;
};

/// Uniform moment on [-c, c]^n with the same half-width c in every coordinate:
/// prod_i c^a_i / (a_i + 1), and exactly 0 as soon as one a_i is odd.
double box_moment(const ExponentVector& alpha, double halfwidth);

/// Same with one half-width per coordinate.
double box_moment(const ExponentVector& alpha, const Eigen::VectorXd& halfwidths);

MomentVector moment_vector(int num_vars, int degree, double halfwidth);
MomentVector moment_vector(int degree, const Eigen::VectorXd& halfwidths);

}  // namespace mpecsos
