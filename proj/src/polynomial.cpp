#include "mpecsos/polynomial.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace mpecsos {

namespace {

constexpr int kMaxExponent = 256;

double int_power(double base, int exponent) {
  double result = 1.0;
  for (int i = 0; i < exponent; ++i) result *= base;
  return result;
}

void add_term(Polynomial::TermMap& terms, const ExponentVector& alpha, double c) {
  auto [it, inserted] = terms.try_emplace(alpha, c);
  if (!inserted) it->second += c;
}

Polynomial::TermMap cleaned(Polynomial::TermMap terms) {
  std::erase_if(terms, [](const auto& kv) {
    return std::abs(kv.second) < kCoefficientCleanup;
  });
  return terms;
}

void require_same_variables(const Polynomial& p, const Polynomial& q) {
  if (p.variables() != q.variables()) {
    throw PolynomialError("polynomials are defined over different variable lists");
  }
}

}  // namespace

ExponentVector::ExponentVector(std::vector<int> exponents)
    : exponents_(std::move(exponents)) {
  for (int e : exponents_) {
    if (e < 0) throw PolynomialError("negative exponent");
  }
  degree_ = std::accumulate(exponents_.begin(), exponents_.end(), 0);
}

ExponentVector ExponentVector::operator+(const ExponentVector& other) const {
  if (size() != other.size()) {
    throw PolynomialError("exponent vectors of different length");
  }
  std::vector<int> sum(exponents_);
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += other.exponents_[i];
  return ExponentVector(std::move(sum));
}

ExponentVector ExponentVector::unit(std::size_t num_vars, std::size_t index) {
  std::vector<int> e(num_vars, 0);
  e.at(index) = 1;
  return ExponentVector(std::move(e));
}

bool GradedLexLess::operator()(const ExponentVector& a,
                               const ExponentVector& b) const {
  if (a.total_degree() != b.total_degree()) {
    return a.total_degree() < b.total_degree();
  }
  // Larger leading exponent comes first within a degree.
  return std::lexicographical_compare(a.exponents().begin(), a.exponents().end(),
                                      b.exponents().begin(), b.exponents().end(),
                                      std::greater<int>());
}

std::size_t ExponentVectorHash::operator()(const ExponentVector& a) const {
  std::size_t h = 1469598103934665603ull;
  for (int e : a.exponents()) {
    h ^= static_cast<std::size_t>(e) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return h;
}

ParseError::ParseError(const std::string& message, std::size_t position)
    : std::runtime_error(message + " at position " + std::to_string(position)),
      position_(position) {}

// ---------------------------------------------------------------------------
// Polynomial

Polynomial::Polynomial(std::vector<std::string> variables)
    : variables_(std::move(variables)) {}

Polynomial::Polynomial(std::vector<std::string> variables, TermMap terms)
    : variables_(std::move(variables)), terms_(cleaned(std::move(terms))) {
  for (const auto& [alpha, c] : terms_) {
    if (alpha.size() != variables_.size()) {
      throw PolynomialError("exponent vector length does not match variable count");
    }
    if (!std::isfinite(c)) throw PolynomialError("non-finite coefficient");
  }
}

Polynomial Polynomial::constant(std::vector<std::string> variables, double value) {
  TermMap terms;
  terms.emplace(ExponentVector(variables.size()), value);
  return Polynomial(std::move(variables), std::move(terms));
}

Polynomial Polynomial::variable(std::vector<std::string> variables,
                                std::string_view name) {
  auto it = std::find(variables.begin(), variables.end(), name);
  if (it == variables.end()) {
    throw PolynomialError("unknown variable '" + std::string(name) + "'");
  }
  const auto index = static_cast<std::size_t>(it - variables.begin());
  TermMap terms;
  terms.emplace(ExponentVector::unit(variables.size(), index), 1.0);
  return Polynomial(std::move(variables), std::move(terms));
}

int Polynomial::degree() const {
  return terms_.empty() ? 0 : terms_.rbegin()->first.total_degree();
}

double Polynomial::coefficient(const ExponentVector& alpha) const {
  auto it = terms_.find(alpha);
  return it == terms_.end() ? 0.0 : it->second;
}

int Polynomial::variable_index(std::string_view name) const {
  auto it = std::find(variables_.begin(), variables_.end(), name);
  return it == variables_.end() ? -1 : static_cast<int>(it - variables_.begin());
}

Polynomial operator+(const Polynomial& p, const Polynomial& q) {
  require_same_variables(p, q);
  Polynomial::TermMap terms = p.terms();
  for (const auto& [alpha, c] : q.terms()) add_term(terms, alpha, c);
  return Polynomial(p.variables(), std::move(terms));
}

Polynomial operator-(const Polynomial& p) { return -1.0 * p; }

Polynomial operator-(const Polynomial& p, const Polynomial& q) {
  require_same_variables(p, q);
  Polynomial::TermMap terms = p.terms();
  for (const auto& [alpha, c] : q.terms()) add_term(terms, alpha, -c);
  return Polynomial(p.variables(), std::move(terms));
}

Polynomial operator*(const Polynomial& p, const Polynomial& q) {
  require_same_variables(p, q);
  Polynomial::TermMap terms;
  for (const auto& [a, ca] : p.terms()) {
    for (const auto& [b, cb] : q.terms()) add_term(terms, a + b, ca * cb);
  }
  return Polynomial(p.variables(), std::move(terms));
}

Polynomial operator*(double s, const Polynomial& p) {
  Polynomial::TermMap terms;
  for (const auto& [alpha, c] : p.terms()) terms.emplace(alpha, s * c);
  return Polynomial(p.variables(), std::move(terms));
}

Polynomial operator+(const Polynomial& p, double c) {
  return p + Polynomial::constant(p.variables(), c);
}

Polynomial operator-(const Polynomial& p, double c) {
  return p + Polynomial::constant(p.variables(), -c);
}

Polynomial pow(const Polynomial& p, int exponent) {
  if (exponent < 0) throw PolynomialError("negative power");
  Polynomial result = Polynomial::constant(p.variables(), 1.0);
  Polynomial base = p;
  while (exponent > 0) {
    if (exponent & 1) result = result * base;
    exponent >>= 1;
    if (exponent > 0) base = base * base;
  }
  return result;
}

bool operator==(const Polynomial& p, const Polynomial& q) {
  return p.variables() == q.variables() && p.terms() == q.terms();
}

double max_abs_difference(const Polynomial& p, const Polynomial& q) {
  const Polynomial d = p - q;
  double m = 0.0;
  for (const auto& [alpha, c] : d.terms()) m = std::max(m, std::abs(c));
  return m;
}

double evaluate(const Polynomial& p, const Eigen::Ref<const Eigen::VectorXd>& point) {
  if (static_cast<std::size_t>(point.size()) != p.num_vars()) {
    throw PolynomialError("evaluation point has " + std::to_string(point.size()) +
                          " coordinates, polynomial has " +
                          std::to_string(p.num_vars()) + " variables");
  }
  double sum = 0.0;
  for (const auto& [alpha, c] : p.terms()) {
    double term = c;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      if (alpha[i] != 0) term *= int_power(point[static_cast<Eigen::Index>(i)], alpha[i]);
    }
    sum += term;
  }
  return sum;
}

Polynomial embed(const Polynomial& p, const std::vector<std::string>& variables) {
  if (p.variables() == variables) return p;
  std::vector<int> target(p.num_vars(), -1);
  for (std::size_t i = 0; i < p.num_vars(); ++i) {
    auto it = std::find(variables.begin(), variables.end(), p.variables()[i]);
    if (it != variables.end()) target[i] = static_cast<int>(it - variables.begin());
  }
  Polynomial::TermMap terms;
  for (const auto& [alpha, c] : p.terms()) {
    std::vector<int> e(variables.size(), 0);
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      if (alpha[i] == 0) continue;
      if (target[i] < 0) {
        throw PolynomialError("variable '" + p.variables()[i] +
                              "' is missing from the target variable list");
      }
      e[static_cast<std::size_t>(target[i])] += alpha[i];
    }
    add_term(terms, ExponentVector(std::move(e)), c);
  }
  return Polynomial(variables, std::move(terms));
}

Polynomial substitute(const Polynomial& p,
                      const std::map<std::string, Polynomial>& mapping) {
  if (mapping.empty()) return p;
  const std::vector<std::string>& ambient = mapping.begin()->second.variables();
  for (const auto& [name, q] : mapping) {
    if (q.variables() != ambient) {
      throw PolynomialError("replacement polynomials use different variable lists");
    }
  }
  // Replacement for every variable of p: either the mapped polynomial or the
  // same-named ambient variable.
  std::vector<Polynomial> replacement;
  replacement.reserve(p.num_vars());
  std::vector<bool> used(p.num_vars(), false);
  for (const auto& [alpha, c] : p.terms()) {
    for (std::size_t i = 0; i < alpha.size(); ++i) used[i] = used[i] || alpha[i] > 0;
  }
  for (std::size_t i = 0; i < p.num_vars(); ++i) {
    const std::string& name = p.variables()[i];
    auto it = mapping.find(name);
    if (it != mapping.end()) {
      replacement.push_back(it->second);
    } else if (std::find(ambient.begin(), ambient.end(), name) != ambient.end()) {
      replacement.push_back(Polynomial::variable(ambient, name));
    } else if (!used[i]) {
      replacement.push_back(Polynomial(ambient));
    } else {
      throw PolynomialError("variable '" + name +
                            "' is neither mapped nor part of the ambient variables");
    }
  }
  std::vector<std::vector<Polynomial>> powers(p.num_vars());
  auto power_of = [&](std::size_t i, int e) -> const Polynomial& {
    auto& cache = powers[i];
    if (cache.empty()) cache.push_back(Polynomial::constant(ambient, 1.0));
    while (static_cast<int>(cache.size()) <= e) cache.push_back(cache.back() * replacement[i]);
    return cache[static_cast<std::size_t>(e)];
  };
  Polynomial result(ambient);
  for (const auto& [alpha, c] : p.terms()) {
    Polynomial term = Polynomial::constant(ambient, c);
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      if (alpha[i] > 0) term = term * power_of(i, alpha[i]);
    }
    result = result + term;
  }
  return result;
}

Polynomial partial_evaluate(const Polynomial& p, const std::vector<std::string>& fixed,
                            const Eigen::Ref<const Eigen::VectorXd>& values) {
  if (static_cast<std::size_t>(values.size()) != fixed.size()) {
    throw PolynomialError("partial_evaluate: value count mismatch");
  }
  std::vector<int> fixed_slot(p.num_vars(), -1);
  for (std::size_t j = 0; j < fixed.size(); ++j) {
    const int i = p.variable_index(fixed[j]);
    if (i < 0) throw PolynomialError("unknown variable '" + fixed[j] + "'");
    fixed_slot[static_cast<std::size_t>(i)] = static_cast<int>(j);
  }
  std::vector<std::string> remaining;
  for (std::size_t i = 0; i < p.num_vars(); ++i) {
    if (fixed_slot[i] < 0) remaining.push_back(p.variables()[i]);
  }
  Polynomial::TermMap terms;
  for (const auto& [alpha, c] : p.terms()) {
    double coeff = c;
    std::vector<int> e;
    e.reserve(remaining.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      if (fixed_slot[i] >= 0) {
        coeff *= int_power(values[fixed_slot[i]], alpha[i]);
      } else {
        e.push_back(alpha[i]);
      }
    }
    add_term(terms, ExponentVector(std::move(e)), coeff);
  }
  return Polynomial(std::move(remaining), std::move(terms));
}

Polynomial scale_variables(const Polynomial& p, const Eigen::Ref<const Eigen::VectorXd>& factors) {
  if (static_cast<std::size_t>(factors.size()) != p.num_vars()) {
    throw PolynomialError("scale_variables: factor count mismatch");
  }
  Polynomial::TermMap terms;
  for (const auto& [alpha, c] : p.terms()) {
    double coeff = c;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      coeff *= int_power(factors[static_cast<Eigen::Index>(i)], alpha[i]);
    }
    add_term(terms, alpha, coeff);
  }
  return Polynomial(p.variables(), std::move(terms));
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& variables)
      : text_(text), variables_(variables) {}

  Polynomial parse() {
    Polynomial p = expression();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(message, pos_);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Polynomial expression() {
    Polynomial p = term();
    while (true) {
      if (accept('+')) {
        p = p + term();
      } else if (accept('-')) {
        p = p - term();
      } else {
        return p;
      }
    }
  }

  Polynomial term() {
    Polynomial p = unary();
    while (true) {
      if (accept('*')) {
        p = p * unary();
      } else if (accept('/')) {
        const std::size_t at = pos_;
        Polynomial d = unary();
        if (d.degree() > 0) {
          pos_ = at;
          fail("division by a non-constant expression");
        }
        const double value = d.coefficient(ExponentVector(variables_.size()));
        if (value == 0.0) {
          pos_ = at;
          fail("division by zero");
        }
        p = (1.0 / value) * p;
      } else {
        return p;
      }
    }
  }

  Polynomial unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  Polynomial power() {
    Polynomial base = primary();
    if (accept('^')) {
      skip_space();
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_) fail("expected a nonnegative integer exponent");
      int exponent = 0;
      auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, exponent);
      if (ec != std::errc() || exponent > kMaxExponent) {
        pos_ = start;
        fail("exponent overflow");
      }
      if (base.degree() * static_cast<long>(exponent) > kMaxExponent) {
        pos_ = start;
        fail("exponent overflow");
      }
      return pow(base, exponent);
    }
    return base;
  }

  Polynomial primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Polynomial p = expression();
      if (!accept(')')) fail("expected ')'");
      return p;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  Polynomial number() {
    const std::size_t start = pos_;
    auto digit_at = [&](std::size_t i) {
      return i < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i]));
    };
    while (digit_at(pos_)) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (digit_at(pos_)) ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t q = pos_ + 1;
      if (q < text_.size() && (text_[q] == '+' || text_[q] == '-')) ++q;
      if (digit_at(q)) {
        pos_ = q;
        while (digit_at(pos_)) ++pos_;
      }
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (ec != std::errc() || ptr != text_.data() + pos_) {
      pos_ = start;
      fail("malformed number");
    }
    return Polynomial::constant(variables_, value);
  }

  Polynomial identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view name = text_.substr(start, pos_ - start);
    if (std::find(variables_.begin(), variables_.end(), name) == variables_.end()) {
      pos_ = start;
      fail("unknown identifier '" + std::string(name) + "'");
    }
    return Polynomial::variable(variables_, name);
  }

  std::string_view text_;
  const std::vector<std::string>& variables_;
  std::size_t pos_ = 0;
};

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

Polynomial parse_polynomial(std::string_view text,
                            const std::vector<std::string>& variables) {
  return Parser(text, variables).parse();
}

std::string to_string(const Polynomial& p) {
  if (p.is_zero()) return "0";
  std::ostringstream out;
  bool first = true;
  for (const auto& [alpha, c] : p.terms()) {
    const double magnitude = std::abs(c);
    if (first) {
      if (c < 0) out << "-";
    } else {
      out << (c < 0 ? " - " : " + ");
    }
    first = false;
    std::string monomial;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      if (alpha[i] == 0) continue;
      if (!monomial.empty()) monomial += "*";
      monomial += p.variables()[i];
      if (alpha[i] > 1) monomial += "^" + std::to_string(alpha[i]);
    }
    if (monomial.empty()) {
      out << format_double(magnitude);
    } else if (magnitude == 1.0) {
      out << monomial;
    } else {
      out << format_double(magnitude) << "*" << monomial;
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Monomial bases

std::size_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::size_t result = 1;
  for (int i = 1; i <= k; ++i) {
    result = result * static_cast<std::size_t>(n - k + i) / static_cast<std::size_t>(i);
  }
  return result;
}

namespace {

void compositions(int num_vars, int degree, std::vector<int>& prefix,
                  std::vector<ExponentVector>& out) {
  const int remaining_vars = num_vars - static_cast<int>(prefix.size());
  if (remaining_vars == 1) {
    prefix.push_back(degree);
    out.emplace_back(prefix);
    prefix.pop_back();
    return;
  }
  for (int e = degree; e >= 0; --e) {
    prefix.push_back(e);
    compositions(num_vars, degree - e, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

MonomialBasis::MonomialBasis(int num_vars, int max_degree)
    : num_vars_(num_vars), max_degree_(max_degree) {
  if (num_vars < 0 || max_degree < 0) {
    throw PolynomialError("monomial basis needs nonnegative arguments");
  }
  monomials_.reserve(binomial(num_vars + max_degree, max_degree));
  if (num_vars == 0) {
    monomials_.emplace_back(0);
  } else {
    std::vector<int> prefix;
    for (int d = 0; d <= max_degree; ++d) compositions(num_vars, d, prefix, monomials_);
  }
  for (std::size_t i = 0; i < monomials_.size(); ++i) index_.emplace(monomials_[i], i);
}

long MonomialBasis::index_of(const ExponentVector& alpha) const {
  auto it = index_.find(alpha);
  return it == index_.end() ? -1 : static_cast<long>(it->second);
}

std::size_t MonomialBasis::prefix_size(int d) const {
  if (d < 0) return 0;
  return binomial(num_vars_ + std::min(d, max_degree_), std::min(d, max_degree_));
}

MonomialBasis monomial_basis(int num_vars, int max_degree) {
  return MonomialBasis(num_vars, max_degree);
}

}  // namespace mpecsos
