#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace mpecsos {

/// Exponent multi-index alpha over an ordered variable list.
class ExponentVector {
 public:
  ExponentVector() = default;
  explicit ExponentVector(std::size_t num_vars) : exponents_(num_vars, 0) {}
  explicit ExponentVector(std::vector<int> exponents);

  std::size_t size() const { return exponents_.size(); }
  int operator[](std::size_t i) const { return exponents_[i]; }
  int total_degree() const { return degree_; }
  const std::vector<int>& exponents() const { return exponents_; }

  ExponentVector operator+(const ExponentVector& other) const;
  bool operator==(const ExponentVector& other) const {
    return exponents_ == other.exponents_;
  }

  static ExponentVector unit(std::size_t num_vars, std::size_t index);

 private:
  std::vector<int> exponents_;
  int degree_ = 0;
};

/// Graded lexicographic order: total degree first, then the exponent of the
/// first variable descending, then the second, and so on.  For (x, y) this
/// yields 1, x, y, x^2, xy, y^2, ...
struct GradedLexLess {
  bool operator()(const ExponentVector& a, const ExponentVector& b) const;
};

struct ExponentVectorHash {
  std::size_t operator()(const ExponentVector& a) const;
};

class PolynomialError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Syntax errors carry the byte offset into the parsed text.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t position);
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Coefficients with magnitude below this are dropped after arithmetic.
inline constexpr double kCoefficientCleanup = 1e-14;

/// Sparse multivariate polynomial with real coefficients over a fixed ordered
/// list of named variables.  Terms are kept in graded-lex order and never
/// hold a zero coefficient.
class Polynomial {
 public:
  using TermMap = std::map<ExponentVector, double, GradedLexLess>;

  Polynomial() = default;
  explicit Polynomial(std::vector<std::string> variables);
  Polynomial(std::vector<std::string> variables, TermMap terms);

  static Polynomial constant(std::vector<std::string> variables, double value);
  static Polynomial variable(std::vector<std::string> variables,
                             std::string_view name);

  const std::vector<std::string>& variables() const { return variables_; }
  std::size_t num_vars() const { return variables_.size(); }
  const TermMap& terms() const { return terms_; }
  std::size_t num_terms() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }
  /// Degree of the zero polynomial is 0.
  int degree() const;
  double coefficient(const ExponentVector& alpha) const;

  /// Index of a variable name, or -1.
  int variable_index(std::string_view name) const;

 private:
  std::vector<std::string> variables_;
  TermMap terms_;
};

Polynomial operator+(const Polynomial& p, const Polynomial& q);
Polynomial operator-(const Polynomial& p, const Polynomial& q);
Polynomial operator-(const Polynomial& p);
Polynomial operator*(const Polynomial& p, const Polynomial& q);
Polynomial operator*(double s, const Polynomial& p);
Polynomial operator+(const Polynomial& p, double c);
Polynomial operator-(const Polynomial& p, double c);
Polynomial pow(const Polynomial& p, int exponent);

bool operator==(const Polynomial& p, const Polynomial& q);

/// Largest coefficient difference, requiring identical variable lists.
double max_abs_difference(const Polynomial& p, const Polynomial& q);

double evaluate(const Polynomial& p, const Eigen::Ref<const Eigen::VectorXd>& point);

/// Re-expresses p over a different variable list.  Every variable of p that
/// occurs in a term must be present in `variables`.
Polynomial embed(const Polynomial& p, const std::vector<std::string>& variables);

/// Replaces the mapped variables by polynomials that all share one ambient
/// variable list; unmapped variables of p must also belong to that list.
/// An empty mapping returns p unchanged.
Polynomial substitute(const Polynomial& p,
                      const std::map<std::string, Polynomial>& mapping);

/// Fixes the listed variables at numeric values; the result lives on the
/// remaining variables (in their original order).
Polynomial partial_evaluate(const Polynomial& p,
                            const std::vector<std::string>& fixed,
                            const Eigen::Ref<const Eigen::VectorXd>& values);

/// q(u) = p(factors .* u), same variable names.
Polynomial scale_variables(const Polynomial& p, const Eigen::Ref<const Eigen::VectorXd>& factors);

/// Expands an expression over `variables`.  Grammar: decimal literals,
/// identifiers, + - * ^ with nonnegative integer exponents, parentheses,
/// and division by constant subexpressions.
Polynomial parse_polynomial(std::string_view text,
                            const std::vector<std::string>& variables);

/// Canonical rendering in graded-lex term order; parse_polynomial inverts it.
std::string to_string(const Polynomial& p);

/// All exponents of total degree <= max_degree in graded-lex order.
class MonomialBasis {
 public:
  MonomialBasis() = default;
  MonomialBasis(int num_vars, int max_degree);

  int num_vars() const { return num_vars_; }
  int max_degree() const { return max_degree_; }
  std::size_t size() const { return monomials_.size(); }
  const ExponentVector& operator[](std::size_t i) const { return monomials_[i]; }
  const std::vector<ExponentVector>& monomials() const { return monomials_; }

  /// Position of alpha, or -1 when |alpha| > max_degree.
  long index_of(const ExponentVector& alpha) const;
  /// Number of basis elements of degree <= d (a prefix of the ordering).
  std::size_t prefix_size(int d) const;

 private:
  int num_vars_ = 0;
  int max_degree_ = 0;
  std::vector<ExponentVector> monomials_;
  std::unordered_map<ExponentVector, std::size_t, ExponentVectorHash> index_;
};

MonomialBasis monomial_basis(int num_vars, int max_degree);

/// C(n + d, d) computed exactly in 64-bit.
std::size_t binomial(int n, int k);

inline int ceil_half(int degree) { return (degree + 1) / 2; }

}  // namespace mpecsos
