#include "mpecsos/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace mpecsos {

std::string to_string(SdpStatus status) {
  switch (status) {
    case SdpStatus::Optimal: return "Optimal";
    case SdpStatus::PrimalInfeasible: return "PrimalInfeasible";
    case SdpStatus::DualInfeasible: return "DualInfeasible";
    case SdpStatus::NumericalTrouble: return "NumericalTrouble";
    case SdpStatus::IterationLimit: return "IterationLimit";
  }
  return "Unknown";
}

void SolverOptions::validate() const {
  if (!(gap_tol > 0.0) || !(feas_tol > 0.0)) {
    throw SdpError("solver tolerances must be positive");
  }
  if (max_iterations <= 0) throw SdpError("max_iterations must be positive");
  if (!(step_fraction > 0.0 && step_fraction < 1.0)) {
    throw SdpError("step_fraction must lie in (0, 1)");
  }
}

void SdpProblem::validate() const {
  if (constraints.empty()) throw SdpError("SDP has no constraints");
  if (rhs.size() != static_cast<Eigen::Index>(constraints.size())) {
    throw SdpError("rhs length differs from the constraint count");
  }
  for (const auto& block : blocks) {
    if (block.size <= 0) throw SdpError("block sizes must be positive");
  }
  auto check = [&](const SdpEntry& e) {
    if (e.block < 0 || e.block >= static_cast<int>(blocks.size())) {
      throw SdpError("entry refers to a missing block");
    }
    const BlockSpec& spec = blocks[static_cast<std::size_t>(e.block)];
    if (e.row < 0 || e.col < 0 || e.row >= spec.size || e.col >= spec.size) {
      throw SdpError("entry index outside its block");
    }
    if (spec.kind == BlockKind::PSD && e.row > e.col) {
      throw SdpError("PSD entries must be given in the upper triangle");
    }
    if (spec.kind != BlockKind::PSD && e.row != e.col) {
      throw SdpError("vector-block entries must have row == col");
    }
    if (!std::isfinite(e.value)) throw SdpError("non-finite coefficient");
  };
  for (const auto& e : objective) check(e);
  for (const auto& con : constraints) {
    if (con.empty()) throw SdpError("constraint touches no block");
    for (const auto& e : con) check(e);
  }
  if (!rhs.allFinite()) throw SdpError("non-finite right-hand side");
}

// ---------------------------------------------------------------------------
// Evaluation on original data

namespace {

double entry_weight(const SdpEntry& e) { return e.row == e.col ? 1.0 : 2.0; }

double block_inner(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.cwiseProduct(b).sum();
}

double dense_norm(const BlockVector& v) {
  double s = 0.0;
  for (const auto& b : v) s += b.squaredNorm();
  return std::sqrt(s);
}

double entries_norm(const std::vector<SdpEntry>& entries, const SdpProblem& problem) {
  BlockVector dense = zero_point(problem);
  for (const auto& e : entries) {
    auto& m = dense[static_cast<std::size_t>(e.block)];
    if (problem.blocks[static_cast<std::size_t>(e.block)].kind == BlockKind::PSD) {
      m(e.row, e.col) += e.value;
      if (e.row != e.col) m(e.col, e.row) += e.value;
    } else {
      m(e.row, 0) += e.value;
    }
  }
  return dense_norm(dense);
}

BlockVector dense_objective(const SdpProblem& problem) {
  BlockVector c = zero_point(problem);
  for (const auto& e : problem.objective) {
    auto& m = c[static_cast<std::size_t>(e.block)];
    if (problem.blocks[static_cast<std::size_t>(e.block)].kind == BlockKind::PSD) {
      m(e.row, e.col) += e.value;
      if (e.row != e.col) m(e.col, e.row) += e.value;
    } else {
      m(e.row, 0) += e.value;
    }
  }
  return c;
}

// Distance from v to the cone K (dual = false) or K* (dual = true).  PSD and
// nonnegative cones are self-dual; free blocks are R^n in K and {0} in K*.
double cone_distance(const SdpProblem& problem, const BlockVector& v, bool dual) {
  double s = 0.0;
  for (std::size_t b = 0; b < problem.blocks.size(); ++b) {
    const auto& m = v[b];
    switch (problem.blocks[b].kind) {
      case BlockKind::PSD: {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()),
                                                           Eigen::EigenvaluesOnly);
        s += eig.eigenvalues().cwiseMin(0.0).squaredNorm();
        break;
      }
      case BlockKind::Nonnegative:
        s += m.cwiseMin(0.0).squaredNorm();
        break;
      case BlockKind::Free:
        if (dual) s += m.squaredNorm();
        break;
    }
  }
  return std::sqrt(s);
}

void check_shape(const SdpProblem& problem, const BlockVector& x) {
  if (x.size() != problem.blocks.size()) throw SdpError("block count mismatch");
  for (std::size_t b = 0; b < x.size(); ++b) {
    const int n = problem.blocks[b].size;
    const int cols = problem.blocks[b].kind == BlockKind::PSD ? n : 1;
    if (x[b].rows() != n || x[b].cols() != cols) throw SdpError("block shape mismatch");
  }
}

}  // namespace

BlockVector zero_point(const SdpProblem& problem) {
  BlockVector x;
  x.reserve(problem.blocks.size());
  for (const auto& b : problem.blocks) {
    x.push_back(b.kind == BlockKind::PSD ? Eigen::MatrixXd::Zero(b.size, b.size)
                                         : Eigen::MatrixXd::Zero(b.size, 1));
  }
  return x;
}

Eigen::VectorXd apply_constraints(const SdpProblem& problem, const BlockVector& x) {
  check_shape(problem, x);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(problem.num_constraints());
  for (int i = 0; i < problem.num_constraints(); ++i) {
    double s = 0.0;
    for (const auto& e : problem.constraints[static_cast<std::size_t>(i)]) {
      const auto& m = x[static_cast<std::size_t>(e.block)];
      s += problem.blocks[static_cast<std::size_t>(e.block)].kind == BlockKind::PSD
               ? entry_weight(e) * e.value * m(e.row, e.col)
               : e.value * m(e.row, 0);
    }
    out[i] = s;
  }
  return out;
}

BlockVector apply_adjoint(const SdpProblem& problem, const Eigen::VectorXd& y) {
  if (y.size() != problem.num_constraints()) throw SdpError("dual vector length mismatch");
  BlockVector out = zero_point(problem);
  for (int i = 0; i < problem.num_constraints(); ++i) {
    if (y[i] == 0.0) continue;
    for (const auto& e : problem.constraints[static_cast<std::size_t>(i)]) {
      auto& m = out[static_cast<std::size_t>(e.block)];
      if (problem.blocks[static_cast<std::size_t>(e.block)].kind == BlockKind::PSD) {
        m(e.row, e.col) += y[i] * e.value;
        if (e.row != e.col) m(e.col, e.row) += y[i] * e.value;
      } else {
        m(e.row, 0) += y[i] * e.value;
      }
    }
  }
  return out;
}

double objective_value(const SdpProblem& problem, const BlockVector& x) {
  check_shape(problem, x);
  double s = 0.0;
  for (const auto& e : problem.objective) {
    const auto& m = x[static_cast<std::size_t>(e.block)];
    s += problem.blocks[static_cast<std::size_t>(e.block)].kind == BlockKind::PSD
             ? entry_weight(e) * e.value * m(e.row, e.col)
             : e.value * m(e.row, 0);
  }
  return s;
}

Residuals residuals(const SdpProblem& problem, const BlockVector& primal,
                    const Eigen::VectorXd& dual) {
  problem.validate();
  const Eigen::VectorXd ax = apply_constraints(problem, primal);
  const double bnorm = problem.rhs.norm();
  const double pres = ((ax - problem.rhs).norm() + cone_distance(problem, primal, false)) /
                      (1.0 + bnorm);
  BlockVector slack = dense_objective(problem);
  const BlockVector aty = apply_adjoint(problem, dual);
  for (std::size_t b = 0; b < slack.size(); ++b) slack[b] -= aty[b];
  const double cnorm = dense_norm(dense_objective(problem));
  const double dres = cone_distance(problem, slack, true) / (1.0 + cnorm);
  const double pobj = objective_value(problem, primal);
  const double dobj = problem.rhs.dot(dual);
  const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
  return {pres, dres, gap};
}

double dual_ray_residual(const SdpProblem& problem, const Eigen::VectorXd& ray) {
  const double by = problem.rhs.dot(ray);
  if (!(by > 0.0)) return std::numeric_limits<double>::infinity();
  BlockVector s = apply_adjoint(problem, ray);
  for (auto& b : s) b = -b;
  return cone_distance(problem, s, true) / by;
}

double primal_ray_residual(const SdpProblem& problem, const BlockVector& ray) {
  const double cx = objective_value(problem, ray);
  if (!(cx < 0.0)) return std::numeric_limits<double>::infinity();
  return (apply_constraints(problem, ray).norm() + cone_distance(problem, ray, false)) / -cx;
}

// ---------------------------------------------------------------------------
// Interior-point method

namespace {

struct Coeff {
  int row;
  int col;
  double value;
};

// Constraint data grouped by block, after row scaling.
struct BlockData {
  BlockKind kind;
  int n;
  std::vector<int> cons;                  // constraints touching this block
  std::vector<std::vector<Coeff>> coeffs;  // parallel to cons
  Eigen::MatrixXd c;                       // objective block (dense)
};

class HsdSolver {
 public:
  HsdSolver(const SdpProblem& problem, const SolverOptions& options)
      : problem_(problem), options_(options), m_(problem.num_constraints()) {
    setup();
  }

  SdpSolution run();

 private:
  struct Point {
    BlockVector x;
    BlockVector s;
    Eigen::VectorXd y;
    double tau = 1.0;
    double kappa = 1.0;
  };

  struct Direction {
    BlockVector dx;
    BlockVector ds;
    Eigen::VectorXd dy;
    double dtau = 0.0;
    double dkappa = 0.0;
  };

  void setup();
  Eigen::VectorXd apply_a(const BlockVector& x, bool cone_only) const;
  BlockVector apply_at(const Eigen::VectorXd& y) const;
  BlockVector h_operator(const BlockVector& z) const;
  bool factorize();
  void solve_reduced(const Eigen::VectorXd& u, const Eigen::VectorXd& w, Eigen::VectorXd& dy,
                     Eigen::VectorXd& dxf) const;
  void solve_reduced_once(const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                          Eigen::VectorXd& dy, Eigen::VectorXd& dxf) const;
  Direction newton(const Eigen::VectorXd& r1, const BlockVector& r2, double r3,
                   const BlockVector& r4, double r5) const;
  double max_step(const Point& p, const Direction& d) const;
  double cone_inner(const BlockVector& a, const BlockVector& b) const;
  Eigen::VectorXd free_part(const BlockVector& v) const;
  SdpSolution finish(SdpStatus status, const Point& p, int iterations) const;

  const SdpProblem& problem_;
  SolverOptions options_;
  int m_;
  int nu_ = 0;  // barrier parameter of the cone part
  int nfree_ = 0;
  std::vector<BlockData> blocks_;
  Eigen::VectorXd b_;
  Eigen::VectorXd row_scale_;
  double bnorm_orig_ = 0.0;
  double cnorm_ = 0.0;
  Eigen::MatrixXd a_free_;  // m x nfree

  // Per-iteration state used by the Newton solves.
  Point cur_;
  std::vector<Eigen::MatrixXd> sinv_;
  Eigen::MatrixXd schur_;
  Eigen::LDLT<Eigen::MatrixXd> schur_fact_;
  Eigen::MatrixXd schur_inv_free_;  // M^{-1} F
  Eigen::LDLT<Eigen::MatrixXd> free_fact_;
  BlockVector hc_;
  Eigen::VectorXd ahc_;
  Eigen::VectorXd dy2_;
  Eigen::VectorXd dxf2_;
  std::vector<double> mu_history_;
};

void HsdSolver::setup() {
  blocks_.resize(problem_.blocks.size());
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    blocks_[b].kind = problem_.blocks[b].kind;
    blocks_[b].n = problem_.blocks[b].size;
    const int n = blocks_[b].n;
    blocks_[b].c = blocks_[b].kind == BlockKind::PSD ? Eigen::MatrixXd::Zero(n, n)
                                                     : Eigen::MatrixXd::Zero(n, 1);
    if (blocks_[b].kind == BlockKind::PSD) nu_ += n;
    if (blocks_[b].kind == BlockKind::Nonnegative) nu_ += n;
    if (blocks_[b].kind == BlockKind::Free) nfree_ += n;
  }
  for (const auto& e : problem_.objective) {
    auto& c = blocks_[static_cast<std::size_t>(e.block)].c;
    if (blocks_[static_cast<std::size_t>(e.block)].kind == BlockKind::PSD) {
      c(e.row, e.col) += e.value;
      if (e.row != e.col) c(e.col, e.row) += e.value;
    } else {
      c(e.row, 0) += e.value;
    }
  }
  cnorm_ = 0.0;
  for (const auto& blk : blocks_) cnorm_ += blk.c.squaredNorm();
  cnorm_ = std::sqrt(cnorm_);

  // Row scaling to unit Frobenius norm.
  row_scale_.resize(m_);
  for (int i = 0; i < m_; ++i) {
    const double nrm = entries_norm(problem_.constraints[static_cast<std::size_t>(i)], problem_);
    row_scale_[i] = nrm > 0.0 ? nrm : 1.0;
  }
  b_ = problem_.rhs.cwiseQuotient(row_scale_);
  bnorm_orig_ = problem_.rhs.norm();

  // Group by block, merging duplicate coordinates.
  for (int i = 0; i < m_; ++i) {
    std::vector<std::vector<Coeff>> per_block(blocks_.size());
    for (const auto& e : problem_.constraints[static_cast<std::size_t>(i)]) {
      auto& list = per_block[static_cast<std::size_t>(e.block)];
      auto it = std::find_if(list.begin(), list.end(), [&](const Coeff& c) {
        return c.row == e.row && c.col == e.col;
      });
      const double v = e.value / row_scale_[i];
      if (it == list.end()) {
        list.push_back({e.row, e.col, v});
      } else {
        it->value += v;
      }
    }
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      std::erase_if(per_block[b], [](const Coeff& c) { return c.value == 0.0; });
      if (per_block[b].empty()) continue;
      blocks_[b].cons.push_back(i);
      blocks_[b].coeffs.push_back(std::move(per_block[b]));
    }
  }

  a_free_ = Eigen::MatrixXd::Zero(m_, nfree_);
  int offset = 0;
  for (const auto& blk : blocks_) {
    if (blk.kind != BlockKind::Free) continue;
    for (std::size_t t = 0; t < blk.cons.size(); ++t) {
      for (const auto& c : blk.coeffs[t]) a_free_(blk.cons[t], offset + c.row) += c.value;
    }
    offset += blk.n;
  }
}

Eigen::VectorXd HsdSolver::apply_a(const BlockVector& x, bool cone_only) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m_);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const auto& blk = blocks_[b];
    if (cone_only && blk.kind == BlockKind::Free) continue;
    const auto& xb = x[b];
    for (std::size_t t = 0; t < blk.cons.size(); ++t) {
      double s = 0.0;
      if (blk.kind == BlockKind::PSD) {
        for (const auto& c : blk.coeffs[t]) {
          s += (c.row == c.col ? 1.0 : 2.0) * c.value * xb(c.row, c.col);
        }
      } else {
        for (const auto& c : blk.coeffs[t]) s += c.value * xb(c.row, 0);
      }
      out[blk.cons[t]] += s;
    }
  }
  return out;
}

BlockVector HsdSolver::apply_at(const Eigen::VectorXd& y) const {
  BlockVector out;
  out.reserve(blocks_.size());
  for (const auto& blk : blocks_) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(blk.c.rows(), blk.c.cols());
    for (std::size_t t = 0; t < blk.cons.size(); ++t) {
      const double yi = y[blk.cons[t]];
      if (yi == 0.0) continue;
      for (const auto& c : blk.coeffs[t]) {
        if (blk.kind == BlockKind::PSD) {
          m(c.row, c.col) += yi * c.value;
          if (c.row != c.col) m(c.col, c.row) += yi * c.value;
        } else {
          m(c.row, 0) += yi * c.value;
        }
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

double HsdSolver::cone_inner(const BlockVector& a, const BlockVector& b) const {
  double s = 0.0;
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    if (blocks_[k].kind == BlockKind::Free) continue;
    s += block_inner(a[k], b[k]);
  }
  return s;
}

Eigen::VectorXd HsdSolver::free_part(const BlockVector& v) const {
  Eigen::VectorXd out(nfree_);
  int offset = 0;
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    if (blocks_[k].kind != BlockKind::Free) continue;
    out.segment(offset, blocks_[k].n) = v[k].col(0);
    offset += blocks_[k].n;
  }
  return out;
}

// H(Z) = sym(X Z S^{-1}) on PSD blocks, (x / s) z on orthants, 0 on free blocks.
BlockVector HsdSolver::h_operator(const BlockVector& z) const {
  BlockVector out;
  out.reserve(blocks_.size());
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const auto& blk = blocks_[k];
    switch (blk.kind) {
      case BlockKind::PSD: {
        const Eigen::MatrixXd g = cur_.x[k] * z[k] * sinv_[k];
        out.push_back(0.5 * (g + g.transpose()));
        break;
      }
      case BlockKind::Nonnegative:
        out.push_back(cur_.x[k].cwiseProduct(z[k]).cwiseQuotient(cur_.s[k]));
        break;
      case BlockKind::Free:
        out.push_back(Eigen::MatrixXd::Zero(blk.n, 1));
        break;
    }
  }
  return out;
}

bool HsdSolver::factorize() {
  schur_ = Eigen::MatrixXd::Zero(m_, m_);
  sinv_.assign(blocks_.size(), Eigen::MatrixXd());
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const auto& blk = blocks_[k];
    if (blk.kind == BlockKind::PSD) {
      Eigen::LLT<Eigen::MatrixXd> llt(cur_.s[k]);
      if (llt.info() != Eigen::Success) return false;
      Eigen::MatrixXd sinv = llt.solve(Eigen::MatrixXd::Identity(blk.n, blk.n));
      sinv_[k] = 0.5 * (sinv + sinv.transpose());
      const Eigen::MatrixXd& x = cur_.x[k];
      const Eigen::MatrixXd& si = sinv_[k];
      const std::size_t nc = blk.cons.size();
      // M_ij += tr(A_i X A_j S^{-1}).  For each j form G = X A_j S^{-1}
      // through the columns A_j touches, then contract with the sparse A_i.
      for (std::size_t tj = 0; tj < nc; ++tj) {
        const auto& aj = blk.coeffs[tj];
        std::vector<int> touched;
        for (const auto& c : aj) {
          touched.push_back(c.row);
          touched.push_back(c.col);
        }
        std::sort(touched.begin(), touched.end());
        touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
        const Eigen::Index nk = static_cast<Eigen::Index>(touched.size());
        // A_j restricted to touched rows (nk x n) so that X A_j = X(:,K) A_j(K,:).
        Eigen::MatrixXd ak = Eigen::MatrixXd::Zero(nk, blk.n);
        auto pos = [&](int r) {
          return static_cast<Eigen::Index>(
              std::lower_bound(touched.begin(), touched.end(), r) - touched.begin());
        };
        for (const auto& c : aj) {
          ak(pos(c.row), c.col) += c.value;
          if (c.row != c.col) ak(pos(c.col), c.row) += c.value;
        }
        Eigen::MatrixXd xk(blk.n, nk);
        for (Eigen::Index q = 0; q < nk; ++q) xk.col(q) = x.col(touched[static_cast<std::size_t>(q)]);
        const Eigen::MatrixXd g = xk * (ak * si);
        for (std::size_t ti = tj; ti < nc; ++ti) {
          double s = 0.0;
          for (const auto& c : blk.coeffs[ti]) {
            s += c.row == c.col ? c.value * g(c.col, c.row)
                                : c.value * (g(c.col, c.row) + g(c.row, c.col));
          }
          schur_(blk.cons[ti], blk.cons[tj]) += s;
        }
      }
    } else if (blk.kind == BlockKind::Nonnegative) {
      const Eigen::VectorXd d = cur_.x[k].col(0).cwiseQuotient(cur_.s[k].col(0));
      Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(blk.cons.size()), blk.n);
      for (std::size_t t = 0; t < blk.cons.size(); ++t) {
        for (const auto& c : blk.coeffs[t]) a(static_cast<Eigen::Index>(t), c.row) += c.value;
      }
      const Eigen::MatrixXd local = a * d.asDiagonal() * a.transpose();
      for (std::size_t ti = 0; ti < blk.cons.size(); ++ti) {
        for (std::size_t tj = 0; tj <= ti; ++tj) {
          schur_(blk.cons[ti], blk.cons[tj]) +=
              local(static_cast<Eigen::Index>(ti), static_cast<Eigen::Index>(tj));
        }
      }
    }
  }
  schur_ = schur_.selfadjointView<Eigen::Lower>();
  if (!schur_.allFinite()) return false;

  // Tiny diagonal shift keeps rank-deficient systems factorizable.
  const double shift = 1e-14 * std::max(1.0, schur_.diagonal().cwiseAbs().maxCoeff());
  Eigen::MatrixXd regularized = schur_;
  regularized.diagonal().array() += shift;
  schur_fact_.compute(regularized);
  if (schur_fact_.info() != Eigen::Success) return false;
  if (nfree_ > 0) {
    schur_inv_free_ = schur_fact_.solve(a_free_);
    Eigen::MatrixXd t = a_free_.transpose() * schur_inv_free_;
    t = 0.5 * (t + t.transpose());
    t.diagonal().array() += 1e-14 * std::max(1.0, t.diagonal().cwiseAbs().maxCoeff());
    free_fact_.compute(t);
    if (free_fact_.info() != Eigen::Success) return false;
  }
  return true;
}

void HsdSolver::solve_reduced_once(const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                                   Eigen::VectorXd& dy, Eigen::VectorXd& dxf) const {
  const Eigen::VectorXd minv_u = schur_fact_.solve(u);
  if (nfree_ == 0) {
    dy = minv_u;
    dxf.resize(0);
    return;
  }
  dxf = free_fact_.solve(a_free_.transpose() * minv_u - w);
  dy = minv_u - schur_inv_free_ * dxf;
}

// [M  F; F' 0] [dy; dxf] = [u; w] with two rounds of iterative refinement.
void HsdSolver::solve_reduced(const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                              Eigen::VectorXd& dy, Eigen::VectorXd& dxf) const {
  solve_reduced_once(u, w, dy, dxf);
  for (int round = 0; round < 2; ++round) {
    Eigen::VectorXd ru = u - schur_ * dy;
    Eigen::VectorXd rw = w;
    if (nfree_ > 0) {
      ru -= a_free_ * dxf;
      rw -= a_free_.transpose() * dy;
    }
    Eigen::VectorXd cy, cf;
    solve_reduced_once(ru, rw, cy, cf);
    dy += cy;
    if (nfree_ > 0) dxf += cf;
  }
}

// Linearized HSD system:
//   A dx - b dtau                 = r1
//   -A' dy - ds + c dtau          = r2   (ds = 0 on free blocks)
//   b' dy - c' dx - dkappa        = r3
//   dx + H(ds)                    = r4   (cone blocks)
//   kappa dtau + tau dkappa       = r5
HsdSolver::Direction HsdSolver::newton(const Eigen::VectorXd& r1, const BlockVector& r2,
                                       double r3, const BlockVector& r4, double r5) const {
  const double tau = cur_.tau;
  const double kappa = cur_.kappa;

  BlockVector r4h = h_operator(r2);
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    if (blocks_[k].kind == BlockKind::Free) continue;
    r4h[k] += r4[k];
  }
  const Eigen::VectorXd u = r1 - apply_a(r4h, true);
  const Eigen::VectorXd w = -free_part(r2);
  Eigen::VectorXd dy1, dxf1;
  solve_reduced(u, w, dy1, dxf1);

  Eigen::VectorXd cfree(nfree_);
  {
    int offset = 0;
    for (const auto& blk : blocks_) {
      if (blk.kind != BlockKind::Free) continue;
      cfree.segment(offset, blk.n) = blk.c.col(0);
      offset += blk.n;
    }
  }
  BlockVector cvec;
  for (const auto& blk : blocks_) cvec.push_back(blk.c);

  const Eigen::VectorXd bmahc = b_ - ahc_;
  const double num = r3 + cone_inner(cvec, r4h) + r5 / tau - bmahc.dot(dy1) +
                     (nfree_ > 0 ? cfree.dot(dxf1) : 0.0);
  const double den = bmahc.dot(dy2_) - (nfree_ > 0 ? cfree.dot(dxf2_) : 0.0) +
                     cone_inner(cvec, hc_) + kappa / tau;
  Direction d;
  d.dtau = num / den;
  d.dy = dy1 + d.dtau * dy2_;
  const Eigen::VectorXd dxf = nfree_ > 0 ? Eigen::VectorXd(dxf1 + d.dtau * dxf2_)
                                         : Eigen::VectorXd();
  d.dkappa = (r5 - kappa * d.dtau) / tau;

  const BlockVector aty = apply_at(d.dy);
  d.ds.resize(blocks_.size());
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    if (blocks_[k].kind == BlockKind::Free) {
      d.ds[k] = Eigen::MatrixXd::Zero(blocks_[k].n, 1);
    } else {
      d.ds[k] = -aty[k] + d.dtau * blocks_[k].c - r2[k];
    }
  }
  const BlockVector hds = h_operator(d.ds);
  d.dx.resize(blocks_.size());
  int offset = 0;
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    if (blocks_[k].kind == BlockKind::Free) {
      d.dx[k] = dxf.segment(offset, blocks_[k].n);
      offset += blocks_[k].n;
    } else {
      d.dx[k] = r4[k] - hds[k];
      if (blocks_[k].kind == BlockKind::PSD) d.dx[k] = 0.5 * (d.dx[k] + d.dx[k].transpose());
    }
  }
  return d;
}

double HsdSolver::max_step(const Point& p, const Direction& d) const {
  double alpha = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const auto& blk = blocks_[k];
    if (blk.kind == BlockKind::Free) continue;
    for (int side = 0; side < 2; ++side) {
      const Eigen::MatrixXd& v = side == 0 ? p.x[k] : p.s[k];
      const Eigen::MatrixXd& dv = side == 0 ? d.dx[k] : d.ds[k];
      if (blk.kind == BlockKind::PSD) {
        Eigen::LLT<Eigen::MatrixXd> llt(v);
        if (llt.info() != Eigen::Success) return 0.0;
        const Eigen::MatrixXd l = llt.matrixL();
        Eigen::MatrixXd z = l.triangularView<Eigen::Lower>().solve(dv);
        z = l.triangularView<Eigen::Lower>().solve(z.transpose()).transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (z + z.transpose()),
                                                           Eigen::EigenvaluesOnly);
        const double lmin = eig.eigenvalues().minCoeff();
        if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
      } else {
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
          if (dv(i, 0) < 0.0) alpha = std::min(alpha, -v(i, 0) / dv(i, 0));
        }
      }
    }
  }
  if (d.dtau < 0.0) alpha = std::min(alpha, -p.tau / d.dtau);
  if (d.dkappa < 0.0) alpha = std::min(alpha, -p.kappa / d.dkappa);
  return alpha;
}

SdpSolution HsdSolver::finish(SdpStatus status, const Point& p, int iterations) const {
  SdpSolution sol;
  sol.status = status;
  sol.iterations = iterations;
  sol.mu_history = mu_history_;
  const Eigen::VectorXd y_orig = p.y.cwiseQuotient(row_scale_);
  switch (status) {
    case SdpStatus::PrimalInfeasible: {
      const double by = problem_.rhs.dot(y_orig);
      sol.dual = y_orig / by;
      sol.primal = zero_point(problem_);
      sol.slack = apply_adjoint(problem_, sol.dual);
      for (auto& b : sol.slack) b = -b;
      sol.certificate_residual = dual_ray_residual(problem_, sol.dual);
      sol.dual_objective = 1.0;
      break;
    }
    case SdpStatus::DualInfeasible: {
      BlockVector x = p.x;
      double cx = 0.0;
      for (std::size_t k = 0; k < blocks_.size(); ++k) cx += block_inner(blocks_[k].c, x[k]);
      for (auto& b : x) b /= -cx;
      sol.primal = x;
      sol.dual = Eigen::VectorXd::Zero(m_);
      sol.slack = zero_point(problem_);
      sol.certificate_residual = primal_ray_residual(problem_, sol.primal);
      sol.primal_objective = -1.0;
      break;
    }
    default: {
      sol.primal = p.x;
      for (auto& b : sol.primal) b /= p.tau;
      sol.dual = y_orig / p.tau;
      sol.slack = p.s;
      for (std::size_t k = 0; k < blocks_.size(); ++k) {
        sol.slack[k] /= p.tau;
        if (blocks_[k].kind == BlockKind::Free) sol.slack[k].setZero();
      }
      const Residuals r = residuals(problem_, sol.primal, sol.dual);
      sol.primal_residual = r.primal;
      sol.dual_residual = r.dual;
      sol.gap = r.gap;
      sol.primal_objective = objective_value(problem_, sol.primal);
      sol.dual_objective = problem_.rhs.dot(sol.dual);
      break;
    }
  }
  return sol;
}

SdpSolution HsdSolver::run() {
  Point& p = cur_;
  p.x.clear();
  p.s.clear();
  for (const auto& blk : blocks_) {
    switch (blk.kind) {
      case BlockKind::PSD:
        p.x.push_back(Eigen::MatrixXd::Identity(blk.n, blk.n));
        p.s.push_back(Eigen::MatrixXd::Identity(blk.n, blk.n));
        break;
      case BlockKind::Nonnegative:
        p.x.push_back(Eigen::MatrixXd::Ones(blk.n, 1));
        p.s.push_back(Eigen::MatrixXd::Ones(blk.n, 1));
        break;
      case BlockKind::Free:
        p.x.push_back(Eigen::MatrixXd::Zero(blk.n, 1));
        p.s.push_back(Eigen::MatrixXd::Zero(blk.n, 1));
        break;
    }
  }
  p.y = Eigen::VectorXd::Zero(m_);
  p.tau = 1.0;
  p.kappa = 1.0;

  BlockVector cvec;
  for (const auto& blk : blocks_) cvec.push_back(blk.c);

  Point best = p;
  double best_merit = std::numeric_limits<double>::infinity();

  for (int iter = 0;; ++iter) {
    // Residuals of the homogeneous system.
    const Eigen::VectorXd ax = apply_a(p.x, false);
    const Eigen::VectorXd rp = ax - b_ * p.tau;
    const BlockVector aty = apply_at(p.y);
    BlockVector rd(blocks_.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      rd[k] = blocks_[k].c * p.tau - aty[k] - p.s[k];
    }
    double cx = 0.0;
    for (std::size_t k = 0; k < blocks_.size(); ++k) cx += block_inner(blocks_[k].c, p.x[k]);
    const double by = b_.dot(p.y);
    const double rg = p.kappa + cx - by;
    const double mu = (cone_inner(p.x, p.s) + p.tau * p.kappa) / (nu_ + 1);
    mu_history_.push_back(mu);

    // Convergence tests in original units.
    const double pres = (rp.cwiseProduct(row_scale_)).norm() / p.tau / (1.0 + bnorm_orig_);
    const double dres = dense_norm(rd) / p.tau / (1.0 + cnorm_);
    const double pobj = cx / p.tau;
    const double dobj = by / p.tau;
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    if (pres <= options_.feas_tol && dres <= options_.feas_tol && gap <= options_.gap_tol) {
      return finish(SdpStatus::Optimal, p, iter);
    }
    if (by > 0.0) {
      BlockVector ray = aty;
      for (std::size_t k = 0; k < blocks_.size(); ++k) {
        if (blocks_[k].kind != BlockKind::Free) ray[k] += p.s[k];
      }
      if (dense_norm(ray) / by <= options_.feas_tol) {
        SdpSolution sol = finish(SdpStatus::PrimalInfeasible, p, iter);
        if (sol.certificate_residual <= options_.feas_tol) return sol;
      }
    }
    if (cx < 0.0) {
      const double axn = (ax.cwiseProduct(row_scale_)).norm();
      if (axn / -cx <= options_.feas_tol) {
        SdpSolution sol = finish(SdpStatus::DualInfeasible, p, iter);
        if (sol.certificate_residual <= options_.feas_tol) return sol;
      }
    }
    const double merit = std::max({pres, dres, gap});
    if (merit < best_merit) {
      best_merit = merit;
      best = p;
    }
    if (iter >= options_.max_iterations) {
      cur_ = best;
      return finish(SdpStatus::IterationLimit, best, iter);
    }

    if (!factorize()) return finish(SdpStatus::NumericalTrouble, best, iter);
    hc_ = h_operator(cvec);
    ahc_ = apply_a(hc_, true);
    {
      Eigen::VectorXd cfree(nfree_);
      int offset = 0;
      for (const auto& blk : blocks_) {
        if (blk.kind != BlockKind::Free) continue;
        cfree.segment(offset, blk.n) = blk.c.col(0);
        offset += blk.n;
      }
      solve_reduced(ahc_ + b_, cfree, dy2_, dxf2_);
    }

    // Predictor (affine scaling).
    BlockVector r2(blocks_.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k) r2[k] = -rd[k];
    BlockVector r4_aff(blocks_.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k) r4_aff[k] = -p.x[k];
    const Direction aff = newton(-rp, r2, rg, r4_aff, -p.tau * p.kappa);
    const double alpha_aff = std::min(1.0, max_step(p, aff));
    if (!std::isfinite(aff.dtau)) return finish(SdpStatus::NumericalTrouble, best, iter);

    const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3), 1e-6, 1.0);
    const double eta = 1.0 - sigma;

    // Corrector with centering and second-order term.
    BlockVector r4(blocks_.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      const auto& blk = blocks_[k];
      switch (blk.kind) {
        case BlockKind::PSD: {
          const Eigen::MatrixXd corr = aff.dx[k] * aff.ds[k] * sinv_[k];
          r4[k] = sigma * mu * sinv_[k] - p.x[k] - 0.5 * (corr + corr.transpose());
          break;
        }
        case BlockKind::Nonnegative:
          r4[k] = ((sigma * mu - p.x[k].array() * p.s[k].array() -
                    aff.dx[k].array() * aff.ds[k].array()) /
                   p.s[k].array())
                      .matrix();
          break;
        case BlockKind::Free:
          r4[k] = Eigen::MatrixXd::Zero(blk.n, 1);
          break;
      }
    }
    for (std::size_t k = 0; k < blocks_.size(); ++k) r2[k] = -eta * rd[k];
    const Direction dir = newton(-eta * rp, r2, eta * rg, r4,
                                 sigma * mu - p.tau * p.kappa - aff.dtau * aff.dkappa);
    if (!std::isfinite(dir.dtau)) return finish(SdpStatus::NumericalTrouble, best, iter);
    const double alpha = std::min(1.0, options_.step_fraction * max_step(p, dir));
    if (!(alpha > 1e-12)) return finish(SdpStatus::NumericalTrouble, best, iter);

    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      p.x[k] += alpha * dir.dx[k];
      p.s[k] += alpha * dir.ds[k];
      if (blocks_[k].kind == BlockKind::PSD) {
        p.x[k] = 0.5 * (p.x[k] + p.x[k].transpose());
        p.s[k] = 0.5 * (p.s[k] + p.s[k].transpose());
      }
    }
    p.y += alpha * dir.dy;
    p.tau += alpha * dir.dtau;
    p.kappa += alpha * dir.dkappa;

    // Keep the homogeneous iterate bounded.
    const double scale = std::max(p.tau, p.kappa);
    if (scale > 1e8) {
      for (auto& b : p.x) b /= scale;
      for (auto& b : p.s) b /= scale;
      p.y /= scale;
      p.tau /= scale;
      p.kappa /= scale;
    }
  }
}

}  // namespace

SdpSolution solve(const SdpProblem& problem, const SolverOptions& options) {
  problem.validate();
  options.validate();
  HsdSolver solver(problem, options);
  return solver.run();
}

// ---------------------------------------------------------------------------
// Sparse text format

namespace {

const char* kind_name(BlockKind kind) {
  switch (kind) {
    case BlockKind::PSD: return "psd";
    case BlockKind::Nonnegative: return "nonneg";
    case BlockKind::Free: return "free";
  }
  return "?";
}

}  // namespace

void write_sparse(std::ostream& out, const SdpProblem& problem) {
  out.precision(17);
  out << "blocks";
  for (const auto& b : problem.blocks) out << ' ' << kind_name(b.kind) << ':' << b.size;
  out << "\nrhs";
  for (Eigen::Index i = 0; i < problem.rhs.size(); ++i) out << ' ' << problem.rhs[i];
  out << '\n';
  for (const auto& e : problem.objective) {
    out << 0 << ' ' << e.block + 1 << ' ' << e.row + 1 << ' ' << e.col + 1 << ' ' << e.value
        << '\n';
  }
  for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
    for (const auto& e : problem.constraints[i]) {
      out << i + 1 << ' ' << e.block + 1 << ' ' << e.row + 1 << ' ' << e.col + 1 << ' '
          << e.value << '\n';
    }
  }
}

SdpProblem read_sparse(std::istream& in) {
  SdpProblem problem;
  std::string line;
  std::vector<double> rhs;
  bool have_blocks = false;
  bool have_rhs = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head == "blocks") {
      std::string tok;
      while (ls >> tok) {
        const auto colon = tok.find(':');
        if (colon == std::string::npos) throw SdpError("malformed block token '" + tok + "'");
        const std::string kind = tok.substr(0, colon);
        const int size = std::stoi(tok.substr(colon + 1));
        BlockKind k;
        if (kind == "psd") {
          k = BlockKind::PSD;
        } else if (kind == "nonneg") {
          k = BlockKind::Nonnegative;
        } else if (kind == "free") {
          k = BlockKind::Free;
        } else {
          throw SdpError("unknown block kind '" + kind + "'");
        }
        problem.blocks.push_back({k, size});
      }
      have_blocks = true;
    } else if (head == "rhs") {
      double v;
      while (ls >> v) rhs.push_back(v);
      problem.constraints.resize(rhs.size());
      have_rhs = true;
    } else {
      if (!have_blocks || !have_rhs) throw SdpError("sparse SDP: header lines missing");
      const int con = std::stoi(head);
      int block, row, col;
      double value;
      if (!(ls >> block >> row >> col >> value)) throw SdpError("malformed entry line");
      const SdpEntry e{block - 1, row - 1, col - 1, value};
      if (con == 0) {
        problem.objective.push_back(e);
      } else {
        if (con < 1 || con > static_cast<int>(problem.constraints.size())) {
          throw SdpError("constraint index out of range");
        }
        problem.constraints[static_cast<std::size_t>(con - 1)].push_back(e);
      }
    }
  }
  problem.rhs = Eigen::Map<const Eigen::VectorXd>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  problem.validate();
  return problem;
}

}  // namespace mpecsos
