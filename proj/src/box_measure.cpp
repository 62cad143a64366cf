#include "mpecsos/box_measure.hpp"

#include <stdexcept>

namespace mpecsos {

namespace {

// int_{-c}^{c} t^a dt / (2c)
double uniform_moment_1d(int a, double c) {
  if (a % 2 != 0) return 0.0;
  double power = 1.0;
  for (int i = 0; i < a; ++i) power *= c;
  return power / static_cast<double>(a + 1);
}

}  // namespace

double box_moment(const ExponentVector& alpha, double halfwidth) {
  return box_moment(alpha, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(alpha.size()),
                                                     halfwidth));
}

double box_moment(const ExponentVector& alpha, const Eigen::VectorXd& halfwidths) {
  if (static_cast<std::size_t>(halfwidths.size()) != alpha.size()) {
    throw std::invalid_argument("box_moment: half-width count mismatch");
  }
  if ((halfwidths.array() <= 0.0).any()) {
    throw std::invalid_argument("box_moment: half-widths must be positive");
  }
  double value = 1.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (alpha[i] % 2 != 0) return 0.0;
    value *= uniform_moment_1d(alpha[i], halfwidths[static_cast<Eigen::Index>(i)]);
  }
  return value;
}

MomentVector moment_vector(int num_vars, int degree, double halfwidth) {
  return moment_vector(degree, Eigen::VectorXd::Constant(num_vars, halfwidth));
}

MomentVector moment_vector(int degree, const Eigen::VectorXd& halfwidths) {
  if (degree < 0) throw std::invalid_argument("moment_vector: negative degree");
  MomentVector out{MonomialBasis(static_cast<int>(halfwidths.size()), degree), {}};
  out.values.resize(static_cast<Eigen::Index>(out.basis.size()));
  for (std::size_t i = 0; i < out.basis.size(); ++i) {
    out.values[static_cast<Eigen::Index>(i)] = box_moment(out.basis[i], halfwidths);
  }
  return out;
}

double MomentVector::integrate(const Polynomial& p) const {
  if (p.num_vars() != static_cast<std::size_t>(basis.num_vars())) {
    throw std::invalid_argument("MomentVector::integrate: variable count mismatch");
  }
  double sum = 0.0;
  for (const auto& [alpha, c] : p.terms()) {
    const long i = basis.index_of(alpha);
    if (i < 0) throw std::invalid_argument("MomentVector::integrate: degree too high");
    sum += c * values[i];
  }
  return sum;
}

}  // namespace mpecsos
