#include "mpecsos/sos_moment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

namespace mpecsos {

std::vector<Multiplier> max_degree_multipliers(const std::vector<Polynomial>& generators,
                                               int degree) {
  std::vector<Multiplier> out;
  for (const auto& h : generators) {
    const int room = degree - h.degree();
    if (room < 0) {
      throw RelaxationError("generator of degree " + std::to_string(h.degree()) +
                            " exceeds identity degree " + std::to_string(degree));
    }
    out.push_back({h, 2 * (room / 2)});
  }
  return out;
}

namespace {

std::vector<int> variable_positions(const std::vector<std::string>& sub,
                                    const std::vector<std::string>& ambient) {
  std::vector<int> pos;
  for (const auto& name : sub) {
    const auto it = std::find(ambient.begin(), ambient.end(), name);
    if (it == ambient.end()) {
      throw RelaxationError("free variable '" + name + "' is not an ambient variable");
    }
    pos.push_back(static_cast<int>(it - ambient.begin()));
  }
  return pos;
}

ExponentVector lift(const ExponentVector& a, const std::vector<int>& pos, std::size_t n) {
  std::vector<int> e(n, 0);
  for (std::size_t i = 0; i < pos.size(); ++i) e[static_cast<std::size_t>(pos[i])] = a[i];
  return ExponentVector(std::move(e));
}

}  // namespace

std::pair<SosIdentityProgram, SdpProblem> build_sos_identity(
    const Polynomial& target, const std::vector<std::string>& free_variables, int free_degree,
    const std::vector<Multiplier>& multipliers, int degree,
    const Eigen::VectorXd& objective_weights) {
  if (degree < 0 || degree % 2 != 0) throw RelaxationError("identity degree must be even and >= 0");
  if (free_degree < 0 || free_degree > degree) {
    throw RelaxationError("free polynomial degree must lie in [0, identity degree]");
  }
  if (target.degree() > degree) {
    throw RelaxationError("target degree " + std::to_string(target.degree()) +
                          " exceeds identity degree " + std::to_string(degree));
  }

  SosIdentityProgram prog;
  prog.variables = target.variables();
  prog.target = target;
  prog.free_variables = free_variables;
  prog.degree = degree;
  const int n = static_cast<int>(prog.variables.size());
  prog.row_basis = MonomialBasis(n, degree);
  const auto pos = variable_positions(free_variables, prog.variables);
  prog.free_basis = MonomialBasis(static_cast<int>(free_variables.size()), free_degree);
  if (objective_weights.size() != static_cast<Eigen::Index>(prog.free_basis.size())) {
    throw RelaxationError("objective weights do not match the free basis");
  }
  prog.objective_weights = objective_weights;

  prog.multipliers.push_back({Polynomial::constant(prog.variables, 1.0), degree});
  for (const auto& mult : multipliers) {
    if (mult.generator.variables() != prog.variables) {
      throw RelaxationError("multiplier generator lives on different variables");
    }
    if (mult.sigma_degree < 0 || mult.sigma_degree % 2 != 0) {
      throw RelaxationError("multiplier degree must be even and >= 0");
    }
    if (mult.sigma_degree + mult.generator.degree() > degree) {
      throw RelaxationError("deg(sigma h) = " +
                            std::to_string(mult.sigma_degree + mult.generator.degree()) +
                            " exceeds identity degree " + std::to_string(degree));
    }
    prog.multipliers.push_back(mult);
  }

  SdpProblem sdp;
  const std::size_t rows = prog.row_basis.size();
  sdp.constraints.resize(rows);
  sdp.rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows));
  for (const auto& [alpha, c] : target.terms()) {
    sdp.rhs[prog.row_basis.index_of(alpha)] = c;
  }

  for (std::size_t j = 0; j < prog.multipliers.size(); ++j) {
    const auto& mult = prog.multipliers[j];
    prog.gram_bases.emplace_back(n, mult.sigma_degree / 2);
    const MonomialBasis& gb = prog.gram_bases.back();
    const int block = static_cast<int>(j);
    sdp.blocks.push_back({BlockKind::PSD, static_cast<int>(gb.size())});
    for (std::size_t a = 0; a < gb.size(); ++a) {
      for (std::size_t b = a; b < gb.size(); ++b) {
        const ExponentVector ab = gb[a] + gb[b];
        for (const auto& [gamma, hc] : mult.generator.terms()) {
          const long row = prog.row_basis.index_of(ab + gamma);
          if (row < 0) throw RelaxationError("Gram product leaves the row basis");
          sdp.constraints[static_cast<std::size_t>(row)].push_back(
              {block, static_cast<int>(a), static_cast<int>(b), hc});
        }
      }
    }
  }

  prog.free_block = static_cast<int>(sdp.blocks.size());
  sdp.blocks.push_back({BlockKind::Free, static_cast<int>(prog.free_basis.size())});
  for (std::size_t i = 0; i < prog.free_basis.size(); ++i) {
    const long row = prog.row_basis.index_of(lift(prog.free_basis[i], pos, prog.variables.size()));
    prog.free_to_row.push_back(static_cast<int>(row));
    const int k = static_cast<int>(i);
    sdp.constraints[static_cast<std::size_t>(row)].push_back({prog.free_block, k, k, 1.0});
    if (objective_weights[k] != 0.0) {
      sdp.objective.push_back({prog.free_block, k, k, -objective_weights[k]});
    }
  }
  return {std::move(prog), std::move(sdp)};
}

std::pair<SosIdentityProgram, SdpProblem> build_sos_identity(
    const Polynomial& target, const std::vector<std::string>& free_variables,
    const std::vector<Multiplier>& multipliers, int degree, const MomentVector& gamma) {
  if (gamma.basis.num_vars() != static_cast<int>(free_variables.size())) {
    throw RelaxationError("moment vector dimension differs from the free variables");
  }
  return build_sos_identity(target, free_variables, gamma.basis.max_degree(), multipliers, degree,
                            gamma.values);
}

double sos_identity_residual(const SosIdentityProgram& program, const Polynomial& p,
                             const std::vector<Eigen::MatrixXd>& grams) {
  if (grams.size() != program.multipliers.size()) {
    throw RelaxationError("Gram matrix count differs from multiplier count");
  }
  const auto pos = variable_positions(p.variables(), program.variables);
  Polynomial::TermMap lifted;
  for (const auto& [a, c] : p.terms()) lifted[lift(a, pos, program.variables.size())] = c;
  Polynomial defect = program.target - Polynomial(program.variables, lifted);
  for (std::size_t j = 0; j < grams.size(); ++j) {
    const MonomialBasis& gb = program.gram_bases[j];
    Polynomial::TermMap sigma;
    for (std::size_t a = 0; a < gb.size(); ++a) {
      for (std::size_t b = 0; b < gb.size(); ++b) {
        sigma[gb[a] + gb[b]] += grams[j](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      }
    }
    defect = defect - Polynomial(program.variables, sigma) * program.multipliers[j].generator;
  }
  double worst = 0.0;
  for (const auto& [a, c] : defect.terms()) worst = std::max(worst, std::abs(c));
  return worst;
}

SosIdentitySolution solve_sos_identity(const SosIdentityProgram& program, const SdpProblem& sdp,
                                       const SolverOptions& options) {
  SosIdentitySolution out;
  out.sdp = solve(sdp, options);
  out.p = Polynomial(program.free_variables);
  if (out.sdp.status != SdpStatus::Optimal) {
    out.rho = std::numeric_limits<double>::quiet_NaN();
    out.identity_residual = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const Eigen::MatrixXd& pv = out.sdp.primal[static_cast<std::size_t>(program.free_block)];
  Polynomial::TermMap terms;
  for (std::size_t i = 0; i < program.free_basis.size(); ++i) {
    terms[program.free_basis[i]] = pv(static_cast<Eigen::Index>(i), 0);
  }
  out.p = Polynomial(program.free_variables, terms);
  out.rho = program.objective_weights.dot(pv.col(0));
  out.grams.assign(out.sdp.primal.begin(), out.sdp.primal.begin() + program.free_block);
  out.identity_residual = sos_identity_residual(program, out.p, out.grams);
  return out;
}

std::pair<MomentRelaxation, SdpProblem> build_moment_relaxation(
    const Polynomial& f, const std::vector<Polynomial>& generators, int order) {
  int need = ceil_half(f.degree());
  int offset = 1;
  for (const auto& h : generators) {
    if (h.variables() != f.variables()) {
      throw RelaxationError("generators and objective use different variables");
    }
    need = std::max(need, ceil_half(h.degree()));
    offset = std::max(offset, ceil_half(h.degree()));
  }
  if (order < std::max(need, 1)) {
    throw RelaxationError("relaxation order " + std::to_string(order) + " below the minimum " +
                          std::to_string(std::max(need, 1)));
  }
  MomentRelaxation rel;
  rel.objective = f;
  rel.generators = generators;
  rel.order = order;
  rel.flatness_offset = offset;
  rel.moment_basis = MonomialBasis(static_cast<int>(f.num_vars()), 2 * order);

  std::vector<Multiplier> mults;
  for (const auto& h : generators) mults.push_back({h, 2 * (order - ceil_half(h.degree()))});
  auto [prog, sdp] = build_sos_identity(f, {}, 0, mults, 2 * order, Eigen::VectorXd::Ones(1));
  rel.program = std::move(prog);
  return {std::move(rel), std::move(sdp)};
}

int numerical_rank(const Eigen::MatrixXd& m, double tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  const double smax = s[0];
  if (!(smax > 0.0)) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > tol * smax) ++r;
  }
  return r;
}

Eigen::MatrixXd moment_matrix(const Eigen::VectorXd& moments, const MonomialBasis& basis, int s) {
  if (2 * s > basis.max_degree()) throw RelaxationError("moment matrix order exceeds the basis");
  if (moments.size() != static_cast<Eigen::Index>(basis.size())) {
    throw RelaxationError("moment vector length differs from its basis");
  }
  const std::size_t k = basis.prefix_size(s);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a; b < k; ++b) {
      const double v = moments[basis.index_of(basis[a] + basis[b])];
      m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
      m(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
    }
  }
  return m;
}

FlatnessResult check_flatness(const Eigen::VectorXd& moments, const MomentRelaxation& relaxation) {
  FlatnessResult res;
  res.tolerance = kRankTolerance;
  const int t = relaxation.order;
  for (int s = 0; s <= t; ++s) {
    res.ranks.push_back(numerical_rank(moment_matrix(moments, relaxation.moment_basis, s),
                                       res.tolerance));
  }
  const int lower = t - relaxation.flatness_offset;
  res.flat = lower >= 0 && res.ranks[static_cast<std::size_t>(t)] ==
                               res.ranks[static_cast<std::size_t>(lower)];
  return res;
}

std::vector<Eigen::VectorXd> extract_atoms(const Eigen::VectorXd& moments,
                                           const MomentRelaxation& relaxation) {
  const MonomialBasis& basis = relaxation.moment_basis;
  const int t = relaxation.order;
  const int nv = basis.num_vars();
  const Eigen::MatrixXd mt = moment_matrix(moments, basis, t);
  const int r = numerical_rank(mt);
  if (r == 0) throw ExtractionError("moment matrix is numerically zero");

  // M_t = V V' from the leading eigenpairs.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(mt);
  const Eigen::Index nrow = mt.rows();
  Eigen::MatrixXd v(nrow, r);
  for (int i = 0; i < r; ++i) {
    const Eigen::Index col = nrow - 1 - i;
    v.col(i) = eig.eigenvectors().col(col) * std::sqrt(std::max(eig.eigenvalues()[col], 0.0));
  }

  // Pivot rows in basis order (column echelon form of V').
  std::vector<int> pivots;
  Eigen::MatrixXd ortho(r, 0);
  const double scale = v.rowwise().norm().maxCoeff();
  for (Eigen::Index a = 0; a < nrow && static_cast<int>(pivots.size()) < r; ++a) {
    Eigen::VectorXd w = v.row(a).transpose();
    if (ortho.cols() > 0) w -= ortho * (ortho.transpose() * w);
    if (w.norm() > 1e-5 * scale) {
      pivots.push_back(static_cast<int>(a));
      ortho.conservativeResize(Eigen::NoChange, ortho.cols() + 1);
      ortho.col(ortho.cols() - 1) = w.normalized();
    }
  }
  if (static_cast<int>(pivots.size()) < r) throw ExtractionError("could not find a monomial basis");

  Eigen::MatrixXd vp(r, r);
  for (int i = 0; i < r; ++i) vp.row(i) = v.row(pivots[static_cast<std::size_t>(i)]);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(vp);
  if (lu.rank() < r) throw ExtractionError("singular pivot block");
  // W = V vp^{-1}, so that W(pivots) = I.
  const Eigen::MatrixXd w = lu.solve(v.transpose()).transpose();

  std::vector<Eigen::MatrixXd> mult(static_cast<std::size_t>(nv), Eigen::MatrixXd(r, r));
  for (int i = 0; i < nv; ++i) {
    for (int q = 0; q < r; ++q) {
      const ExponentVector shifted =
          basis[static_cast<std::size_t>(pivots[static_cast<std::size_t>(q)])] +
          ExponentVector::unit(static_cast<std::size_t>(nv), static_cast<std::size_t>(i));
      const long row = basis.index_of(shifted);
      if (row < 0 || row >= nrow) throw ExtractionError("shifted monomial outside the basis");
      mult[static_cast<std::size_t>(i)].row(q) = w.row(row);
    }
  }

  // Generic combination, fixed seed.
  std::mt19937 rng(20240601u);
  std::uniform_real_distribution<double> coef(0.5, 1.5);
  Eigen::MatrixXd combo = Eigen::MatrixXd::Zero(r, r);
  double total = 0.0;
  for (int i = 0; i < nv; ++i) {
    const double c = coef(rng);
    total += c;
    combo += c * mult[static_cast<std::size_t>(i)];
  }
  combo /= total;
  Eigen::RealSchur<Eigen::MatrixXd> schur(combo);
  if (schur.info() != Eigen::Success) throw ExtractionError("Schur decomposition failed");
  const Eigen::MatrixXd& q = schur.matrixU();

  std::vector<Eigen::VectorXd> atoms;
  for (int j = 0; j < r; ++j) {
    Eigen::VectorXd x(nv);
    for (int i = 0; i < nv; ++i) {
      x[i] = q.col(j).dot(mult[static_cast<std::size_t>(i)] * q.col(j));
    }
    atoms.push_back(x);
  }

  // Weights by least squares; the mixture must reproduce every moment.
  const Eigen::Index nm = moments.size();
  Eigen::MatrixXd evals(nm, r);
  for (Eigen::Index a = 0; a < nm; ++a) {
    const ExponentVector& alpha = basis[static_cast<std::size_t>(a)];
    for (int j = 0; j < r; ++j) {
      double val = 1.0;
      for (int i = 0; i < nv; ++i) val *= std::pow(atoms[static_cast<std::size_t>(j)][i], alpha[static_cast<std::size_t>(i)]);
      evals(a, j) = val;
    }
  }
  const Eigen::VectorXd weights = evals.colPivHouseholderQr().solve(moments);
  const double miss = (evals * weights - moments).cwiseAbs().maxCoeff();
  if (!(miss <= 1e-5)) {
    throw ExtractionError("atoms do not reproduce the moments (miss " + std::to_string(miss) + ")");
  }
  for (const auto& x : atoms) {
    for (const auto& h : relaxation.generators) {
      if (evaluate(h, x) < -1e-6) throw ExtractionError("extracted atom violates a generator");
    }
  }
  return atoms;
}

MomentSolution solve_moment_relaxation(const MomentRelaxation& relaxation, const SdpProblem& sdp,
                                       const SolverOptions& options) {
  MomentSolution out;
  out.sdp = solve(sdp, options);
  out.bound = std::numeric_limits<double>::quiet_NaN();
  if (out.sdp.status != SdpStatus::Optimal) return out;
  out.moments = -out.sdp.dual;
  out.bound = -out.sdp.primal_objective;
  out.flatness = check_flatness(out.moments, relaxation);
  if (out.flatness.flat) {
    try {
      out.atoms = extract_atoms(out.moments, relaxation);
      out.flat = true;
    } catch (const ExtractionError&) {
      out.flat = false;
    }
  }
  return out;
}

std::string to_string(FeasibilityStatus status) {
  switch (status) {
    case FeasibilityStatus::Nonempty: return "Nonempty";
    case FeasibilityStatus::EmptyCertified: return "EmptyCertified";
    case FeasibilityStatus::Unknown: return "Unknown";
  }
  return "Unknown";
}

FeasibilityResult certify_feasibility(const std::vector<Polynomial>& generators, int order,
                                      const SolverOptions& options) {
  if (generators.empty()) throw RelaxationError("feasibility test needs at least one generator");
  const auto& vars = generators.front().variables();
  FeasibilityResult res;
  res.order = order;

  const auto [rel, sdp] = build_moment_relaxation(Polynomial(vars), generators, order);
  const MomentSolution first = solve_moment_relaxation(rel, sdp, options);
  res.sdp_status = first.sdp.status;
  if (first.sdp.status == SdpStatus::DualInfeasible) {
    res.status = FeasibilityStatus::EmptyCertified;
    res.certificate_residual = first.sdp.certificate_residual;
    return res;
  }
  if (first.sdp.status != SdpStatus::Optimal) return res;
  if (first.flat) {
    res.status = FeasibilityStatus::Nonempty;
    res.witness = first.atoms.front();
    return res;
  }

  // Nearest point to a fixed generic center: unique, hence a flat optimum.
  Polynomial dist(vars);
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const double c = 0.1 * static_cast<double>(i + 1) + 0.0137;
    dist = dist + pow(Polynomial::variable(vars, vars[i]) - c, 2);
  }
  const auto [rel2, sdp2] = build_moment_relaxation(dist, generators, std::max(order, 1));
  const MomentSolution second = solve_moment_relaxation(rel2, sdp2, options);
  res.sdp_status = second.sdp.status;
  if (second.sdp.status == SdpStatus::Optimal && second.flat) {
    res.status = FeasibilityStatus::Nonempty;
    res.witness = second.atoms.front();
  }
  return res;
}

}  // namespace mpecsos
