#include "mpecsos/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mpecsos {

void OracleConfig::validate() const {
  if ((inner_grid != 0 && inner_grid < 3) || (outer_grid != 0 && outer_grid < 3)) {
    throw OracleError("oracle grids need at least 3 points per dimension");
  }
  if (refinement_rounds < 0) throw OracleError("refinement_rounds must be >= 0");
}

namespace {

constexpr double kRoundoff = 1e-12;
constexpr int kRefinePoints = 21;  // per dimension; shrinks the cell 10x
constexpr std::size_t kSeeds = 3;
constexpr int kProbePoints = 41;   // refinement starts; guards against ties in f

int default_inner(int m) { return m == 1 ? 2001 : m == 2 ? 201 : 41; }
int default_outer(int d) { return d <= 2 ? 401 : d == 3 ? 61 : 25; }

void check_dims(const MpecProblem& p) {
  if (p.n() + p.m() > kMaxOracleDims) {
    throw OracleError("oracle limited to n + m <= " + std::to_string(kMaxOracleDims) + " (got " +
                      std::to_string(p.n() + p.m()) + ")");
  }
}

// Visits the nodes of a tensor grid over [lo, hi] in lexicographic index order
// until fn returns false.
template <class Fn>
void visit_grid(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, int count, Fn&& fn) {
  const Eigen::Index d = lo.size();
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  Eigen::VectorXd z(d);
  while (true) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const int k = idx[static_cast<std::size_t>(i)];
      // exact endpoints
      z[i] = k == count - 1 ? hi[i] : lo[i] + (hi[i] - lo[i]) * k / (count - 1);
    }
    if (!fn(z)) return;
    Eigen::Index i = d - 1;
    for (; i >= 0; --i) {
      if (++idx[static_cast<std::size_t>(i)] < count) break;
      idx[static_cast<std::size_t>(i)] = 0;
    }
    if (i < 0) return;
  }
}

}  // namespace

ValueFunctionOracle::ValueFunctionOracle(const MpecProblem& problem, const OracleConfig& config)
    : problem_(problem), config_(config) {
  config_.validate();
  check_dims(problem);
  inner_grid_ = config_.inner_grid > 0 ? config_.inner_grid : default_inner(problem.m());
  for (std::size_t j = 0; j < problem.constraints_h.size(); ++j) h_v_.push_back(problem.h_in_v(j));
}

std::optional<InnerMinimum> ValueFunctionOracle::operator()(const Eigen::VectorXd& x,
                                                           const Eigen::VectorXd& y) const {
  return search(x, y, -std::numeric_limits<double>::infinity());
}

bool ValueFunctionOracle::at_least(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                   double threshold) const {
  const auto j = search(x, y, threshold);
  return j.has_value() && j->value >= threshold;
}

std::optional<InnerMinimum> ValueFunctionOracle::search(const Eigen::VectorXd& x,
                                                        const Eigen::VectorXd& y,
                                                        double stop_below) const {
  const int n = problem_.n();
  const int m = problem_.m();
  if (x.size() != n || y.size() != m) throw OracleError("oracle point dimension mismatch");
  Eigen::VectorXd xy(n + m);
  xy << x, y;
  const auto fixed = problem_.xy_vars();
  const Polynomial phi = partial_evaluate(problem_.phi, fixed, xy);
  std::vector<Polynomial> hs;
  for (const auto& h : h_v_) hs.push_back(partial_evaluate(h, fixed, xy));

  const Eigen::VectorXd wy = problem_.box.halfwidth.tail(m);
  bool found = false;
  InnerMinimum best{0.0, Eigen::VectorXd::Zero(m)};
  auto consider = [&](const Eigen::VectorXd& v) {
    for (const auto& h : hs) {
      if (evaluate(h, v) < -kRoundoff) return true;
    }
    const double val = evaluate(phi, v);
    if (!found || val < best.value) {
      found = true;
      best.value = val;
      best.v = v;
    }
    return best.value >= stop_below;
  };
  if (std::isfinite(stop_below) && inner_grid_ > kProbePoints) {
    // cheap probe for an early rejection
    visit_grid(-wy, wy, kProbePoints, consider);
    if (found && best.value < stop_below) return best;
  }
  visit_grid(-wy, wy, inner_grid_, consider);
  if (!found) return std::nullopt;
  if (best.value < stop_below) return best;

  Eigen::VectorXd step = 2.0 * wy / (inner_grid_ - 1);
  for (int round = 0; round < config_.refinement_rounds; ++round) {
    const Eigen::VectorXd lo = (best.v - step).cwiseMax(-wy);
    const Eigen::VectorXd hi = (best.v + step).cwiseMin(wy);
    visit_grid(lo, hi, kRefinePoints, consider);
    if (best.value < stop_below) break;
    step /= 10.0;
  }
  return best;
}

std::optional<InnerMinimum> eval_J(const MpecProblem& problem, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& y, const OracleConfig& config) {
  return ValueFunctionOracle(problem, config)(x, y);
}

std::optional<ReferenceSolution> solve_P_eps_reference(const MpecProblem& problem, double eps,
                                                       const OracleConfig& config) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw OracleError("eps must be finite and >= 0");
  config.validate();
  check_dims(problem);
  const ValueFunctionOracle oracle(problem, config);
  const int n = problem.n();
  const int m = problem.m();
  const int d = n + m;
  const int grid = config.outer_grid > 0 ? config.outer_grid : default_outer(d);
  const Eigen::VectorXd w = problem.box.halfwidth;

  // Smallest explicit-constraint value; feasible when >= -eps.
  auto explicit_slack = [&](const Eigen::VectorXd& z) {
    double s = std::numeric_limits<double>::infinity();
    for (const auto& g : problem.constraints_g) s = std::min(s, evaluate(g, z));
    for (const auto& h : problem.constraints_h) s = std::min(s, evaluate(h, z));
    return s;
  };
  auto equilibrium_ok = [&](const Eigen::VectorXd& z) {
    return oracle.at_least(z.head(n), z.tail(m), -eps - kRoundoff);
  };
  struct Candidate {
    double f;
    double slack;
    Eigen::VectorXd z;
  };
  // Cheapest-first scan; ties in f go to the larger explicit slack.  Returns
  // up to `limit` passing candidates.
  auto passing = [&](std::vector<Candidate>& cands, std::size_t limit) {
    std::vector<std::size_t> order(cands.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       if (cands[a].f != cands[b].f) return cands[a].f < cands[b].f;
                       return cands[a].slack > cands[b].slack;
                     });
    std::vector<ReferenceSolution> out;
    for (std::size_t i : order) {
      if (out.size() == limit) break;
      if (equilibrium_ok(cands[i].z)) out.push_back({cands[i].f, cands[i].z});
    }
    return out;
  };

  std::vector<Candidate> cands;
  visit_grid(-w, w, grid, [&](const Eigen::VectorXd& z) {
    const double slack = explicit_slack(z);
    if (slack >= -eps - kRoundoff) cands.push_back({evaluate(problem.objective, z), slack, z});
    return true;
  });
  std::vector<ReferenceSolution> seeds = passing(cands, kSeeds);
  if (seeds.empty()) return std::nullopt;

  std::optional<ReferenceSolution> best;
  for (ReferenceSolution seed : seeds) {
    Eigen::VectorXd step = 2.0 * w / (grid - 1);
    for (int round = 0; round < config.refinement_rounds; ++round) {
      cands.clear();
      const Eigen::VectorXd lo = (seed.point - step).cwiseMax(-w);
      const Eigen::VectorXd hi = (seed.point + step).cwiseMin(w);
      visit_grid(lo, hi, kRefinePoints, [&](const Eigen::VectorXd& z) {
        const double slack = explicit_slack(z);
        if (slack < -eps - kRoundoff) return true;
        const double f = evaluate(problem.objective, z);
        if (f < seed.value) cands.push_back({f, slack, z});
        return true;
      });
      const auto better = passing(cands, 1);
      if (!better.empty()) seed = better.front();
      step /= 10.0;
    }
    if (!best || seed.value < best->value) best = seed;
  }
  return best;
}

}  // namespace mpecsos
