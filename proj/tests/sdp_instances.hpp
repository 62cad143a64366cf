#pragma once

// Seeded SDP generators with known answers, shared by unit and acceptance tests.

#include <random>

#include <Eigen/QR>

#include "mpecsos/sdp.hpp"

namespace mpecsos::testing_support {

struct PlantedSdp {
  SdpProblem problem;
  double optimal_value = 0.0;
};

inline Eigen::MatrixXd random_orthogonal(std::mt19937& rng, int n) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

inline std::vector<SdpEntry> dense_symmetric(std::mt19937& rng, const std::vector<BlockSpec>& blocks,
                                             double density) {
  std::normal_distribution<double> g;
  std::bernoulli_distribution keep(density);
  std::vector<SdpEntry> out;
  for (int b = 0; b < static_cast<int>(blocks.size()); ++b) {
    const auto& spec = blocks[static_cast<std::size_t>(b)];
    for (int r = 0; r < spec.size; ++r) {
      if (spec.kind == BlockKind::PSD) {
        for (int c = r; c < spec.size; ++c) {
          if (keep(rng)) out.push_back({b, r, c, g(rng)});
        }
      } else if (keep(rng)) {
        out.push_back({b, r, r, g(rng)});
      }
    }
  }
  if (out.empty()) out.push_back({0, 0, 0, 1.0});
  return out;
}

// Strictly complementary primal-dual pair (X*, y*, S*): on every PSD block
// X* and S* share eigenvectors with disjoint supports; C and b are chosen so
// that the pair is optimal.
inline PlantedSdp planted_instance(unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> nblocks(1, 3);
  std::uniform_int_distribution<int> psd_size(1, 30);
  std::uniform_int_distribution<int> vec_size(1, 10);
  std::uniform_int_distribution<int> kind(0, 5);
  std::uniform_real_distribution<double> eig(0.2, 3.0);
  std::normal_distribution<double> g;

  PlantedSdp inst;
  SdpProblem& p = inst.problem;
  int nfree = 0;
  int total = 0;
  const int nb = nblocks(rng);
  for (int b = 0; b < nb; ++b) {
    const int k = b == 0 ? 0 : kind(rng);
    if (k <= 3) {
      p.blocks.push_back({BlockKind::PSD, psd_size(rng)});
    } else if (k == 4) {
      p.blocks.push_back({BlockKind::Nonnegative, vec_size(rng)});
    } else {
      p.blocks.push_back({BlockKind::Free, vec_size(rng) / 2 + 1});
      nfree += p.blocks.back().size;
    }
    total += p.blocks.back().size;
  }

  BlockVector xs, ss;
  for (const auto& spec : p.blocks) {
    const int n = spec.size;
    if (spec.kind == BlockKind::PSD) {
      const Eigen::MatrixXd q = random_orthogonal(rng, n);
      std::uniform_int_distribution<int> split(0, n);
      const int r = split(rng);
      Eigen::VectorXd lx = Eigen::VectorXd::Zero(n), ls = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < n; ++i) (i < r ? lx[i] : ls[i]) = eig(rng);
      xs.push_back(q * lx.asDiagonal() * q.transpose());
      ss.push_back(q * ls.asDiagonal() * q.transpose());
    } else if (spec.kind == BlockKind::Nonnegative) {
      Eigen::VectorXd x = Eigen::VectorXd::Zero(n), s = Eigen::VectorXd::Zero(n);
      std::bernoulli_distribution side(0.5);
      for (int i = 0; i < n; ++i) (side(rng) ? x[i] : s[i]) = eig(rng);
      xs.push_back(x);
      ss.push_back(s);
    } else {
      Eigen::VectorXd x(n);
      for (int i = 0; i < n; ++i) x[i] = g(rng);
      xs.push_back(x);
      ss.push_back(Eigen::VectorXd::Zero(n));
    }
  }

  std::uniform_int_distribution<int> mdist(nfree + 1, std::max(nfree + 2, std::min(40, total + 5)));
  const int m = mdist(rng);
  p.constraints.resize(static_cast<std::size_t>(m));
  for (auto& con : p.constraints) con = dense_symmetric(rng, p.blocks, 0.5);
  Eigen::VectorXd y(m);
  for (int i = 0; i < m; ++i) y[i] = g(rng);

  p.rhs = apply_constraints(p, xs);
  const BlockVector aty = apply_adjoint(p, y);
  for (int b = 0; b < static_cast<int>(p.blocks.size()); ++b) {
    const Eigen::MatrixXd c = ss[static_cast<std::size_t>(b)] + aty[static_cast<std::size_t>(b)];
    const int n = p.blocks[static_cast<std::size_t>(b)].size;
    for (int r = 0; r < n; ++r) {
      if (p.blocks[static_cast<std::size_t>(b)].kind == BlockKind::PSD) {
        for (int col = r; col < n; ++col) p.objective.push_back({b, r, col, c(r, col)});
      } else {
        p.objective.push_back({b, r, r, c(r, 0)});
      }
    }
  }
  inst.optimal_value = objective_value(p, xs);
  return inst;
}

// Infeasible by construction: a ray y with b'y = 1 and -A'y positive definite.
inline SdpProblem infeasible_instance(unsigned seed) {
  std::mt19937 rng(1000 + seed);
  std::uniform_int_distribution<int> size(2, 12);
  std::uniform_int_distribution<int> mdist(2, 10);
  std::normal_distribution<double> g;
  SdpProblem p;
  const int n = size(rng);
  p.blocks = {{BlockKind::PSD, n}, {BlockKind::Nonnegative, 3}};
  const int m = mdist(rng);
  p.constraints.resize(static_cast<std::size_t>(m));
  for (int i = 0; i + 1 < m; ++i) p.constraints[static_cast<std::size_t>(i)] = dense_symmetric(rng, p.blocks, 0.7);
  Eigen::VectorXd y(m);
  for (int i = 0; i < m; ++i) y[i] = g(rng);
  if (std::abs(y[m - 1]) < 0.5) y[m - 1] = 1.0;

  // Target slack S = -A'y, strictly inside the cone.
  Eigen::MatrixXd w(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) w(i, j) = g(rng);
  const Eigen::MatrixXd s_psd = w * w.transpose() + Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd s_lp = Eigen::VectorXd::Constant(3, 1.0);

  p.rhs = Eigen::VectorXd::Zero(m);
  p.constraints[static_cast<std::size_t>(m - 1)] = {{0, 0, 0, 1.0}};
  const BlockVector partial = apply_adjoint(p, [&] {
    Eigen::VectorXd yy = y;
    yy[m - 1] = 0.0;
    return yy;
  }());
  const Eigen::MatrixXd last_psd = (-s_psd - partial[0]) / y[m - 1];
  const Eigen::VectorXd last_lp = (-s_lp - partial[1].col(0)) / y[m - 1];
  auto& last = p.constraints[static_cast<std::size_t>(m - 1)];
  last.clear();
  for (int r = 0; r < n; ++r)
    for (int c = r; c < n; ++c) last.push_back({0, r, c, last_psd(r, c)});
  for (int r = 0; r < 3; ++r) last.push_back({1, r, r, last_lp[r]});

  std::uniform_real_distribution<double> bdist(-1.0, 1.0);
  for (int i = 0; i + 1 < m; ++i) p.rhs[i] = bdist(rng);
  // Make b'y = 1.
  p.rhs[m - 1] = (1.0 - p.rhs.head(m - 1).dot(y.head(m - 1))) / y[m - 1];
  for (int r = 0; r < n; ++r) p.objective.push_back({0, r, r, 1.0});
  return p;
}

}  // namespace mpecsos::testing_support
