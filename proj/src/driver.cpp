#include "mpecsos/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/QR>

namespace mpecsos {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int base_order(const Polynomial& f, const std::vector<Polynomial>& gens) {
  int t = std::max(1, ceil_half(f.degree()));
  for (const auto& g : gens) t = std::max(t, ceil_half(g.degree()));
  return t;
}

}  // namespace

AlgoConfig AlgoConfig::resolved(const MpecProblem& problem) const {
  AlgoConfig c = *this;
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw DriverError("epsilon must be > 0");
  if (c.k_start == 0) c.k_start = problem.k_min();
  if (c.k_start < problem.k_min()) {
    throw DriverError("k_start = " + std::to_string(c.k_start) + " is below the admissible minimum " +
                      std::to_string(problem.k_min()));
  }
  if (c.k_max < c.k_start) throw DriverError("k_max must be >= k_start");
  if (c.order_extra < 0) throw DriverError("order_extra must be >= 0");
  if (!(c.stop_tol >= 0.0)) throw DriverError("stop_tol must be >= 0");
  if (c.stall_iterations < 1) throw DriverError("stall_iterations must be >= 1");
  for (std::size_t i = 0; i < c.epsilon_ladder.size(); ++i) {
    const double e = c.epsilon_ladder[i];
    if (!(e > 0.0) || !std::isfinite(e)) throw DriverError("ladder epsilons must be > 0");
    if (i > 0 && !(e < c.epsilon_ladder[i - 1])) {
      throw DriverError("epsilon ladder must be strictly decreasing");
    }
  }
  c.solver.validate();
  return c;
}

std::string to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::Converged: return "Converged";
    case TerminationReason::KMax: return "KMax";
    case TerminationReason::AllEmpty: return "AllEmpty";
  }
  return "KMax";
}

bool AlgorithmTrace::any_successful() const {
  return std::any_of(records.begin(), records.end(),
                     [](const IterationRecord& r) { return r.successful(); });
}

std::vector<Polynomial> sk_generators(const MpecProblem& problem, const Polynomial& jk,
                                      double epsilon) {
  const Eigen::VectorXd& c = problem.box.halfwidth;
  const auto vars = problem.xy_vars();
  std::vector<Polynomial> gens;
  for (const auto& g : problem.constraints_g) gens.push_back(scale_variables(g, c) + epsilon);
  for (const auto& h : problem.constraints_h) gens.push_back(scale_variables(h, c) + epsilon);
  gens.push_back(scale_variables(jk, c) + epsilon);
  for (const auto& v : vars) {
    gens.push_back(Polynomial::constant(vars, 1.0) - pow(Polynomial::variable(vars, v), 2));
  }
  return gens;
}

AlgorithmTrace run_algorithm1(const MpecProblem& problem, const AlgoConfig& config,
                              JkCache* cache) {
  const auto start = std::chrono::steady_clock::now();
  AlgorithmTrace trace;
  trace.config = config.resolved(problem);
  const AlgoConfig& cfg = trace.config;
  trace.final_value = kNaN;

  JkCache local;
  JkCache& jk_cache = cache ? *cache : local;
  const Eigen::VectorXd& c = problem.box.halfwidth;
  const Polynomial f = scale_variables(problem.objective, c);

  std::optional<double> v_best;
  int stalls = 0;
  bool all_empty = true;
  for (int k = cfg.k_start; k <= cfg.k_max; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    IterationRecord rec;
    rec.k = k;
    rec.v_eps_k = v_best;

    // Step 1
    auto it = jk_cache.find(k);
    if (it == jk_cache.end()) it = jk_cache.emplace(k, compute_Jk(problem, k, cfg.solver)).first;
    rec.jk = it->second;
    if (!rec.jk.ok()) {
      rec.solver_failure = true;
      rec.note = "value-function program: " + to_string(rec.jk.status);
      all_empty = false;
      rec.seconds = seconds_since(t0);
      trace.records.push_back(std::move(rec));
      continue;
    }

    // Step 2
    const std::vector<Polynomial> gens = sk_generators(problem, rec.jk.jk, cfg.epsilon);
    const int t_base = base_order(f, gens);
    const FeasibilityResult feas = certify_feasibility(gens, t_base, cfg.solver);
    rec.sk_status = feas.status;
    rec.sk_sdp_status = feas.sdp_status;
    if (feas.status == FeasibilityStatus::EmptyCertified) {
      rec.note = "S_k empty";
      rec.seconds = seconds_since(t0);
      trace.records.push_back(std::move(rec));
      continue;
    }

    // Step 3
    for (int t = t_base; t <= t_base + cfg.order_extra; ++t) {
      const auto [rel, sdp] = build_moment_relaxation(f, gens, t);
      const MomentSolution sol = solve_moment_relaxation(rel, sdp, cfg.solver);
      if (sol.sdp.status == SdpStatus::DualInfeasible) {
        // unbounded SOS side: a Positivstellensatz certificate that S_k is empty
        rec.sk_status = FeasibilityStatus::EmptyCertified;
        rec.sk_sdp_status = sol.sdp.status;
        rec.solver_failure = false;
        rec.order = t;
        rec.note = "S_k empty (certificate at relaxation order " + std::to_string(t) + ")";
        break;
      }
      if (sol.sdp.status != SdpStatus::Optimal) {
        rec.solver_failure = true;
        rec.note = "relaxation order " + std::to_string(t) + ": " + to_string(sol.sdp.status);
        break;
      }
      rec.solver_failure = false;
      rec.note.clear();
      rec.order = t;
      rec.bound = sol.bound;
      if (sol.flat) {
        rec.flat = true;
        rec.val = sol.bound;
        for (const auto& u : sol.atoms) rec.points.push_back(c.cwiseProduct(u));
        break;
      }
    }
    if (rec.sk_status != FeasibilityStatus::EmptyCertified) {
      all_empty = false;
      if (!rec.flat && !rec.solver_failure) rec.note = "no flat extension up to the order cap";
    }

    // Step 4
    if (rec.val) {
      const double v_new = v_best ? std::min(*v_best, *rec.val) : *rec.val;
      if (v_best) {
        stalls = *v_best - v_new < cfg.stop_tol ? stalls + 1 : 0;
      }
      if (!v_best || *rec.val < *v_best) trace.final_points = rec.points;
      v_best = v_new;
      rec.v_eps_k = v_best;
    }
    rec.seconds = seconds_since(t0);
    trace.records.push_back(std::move(rec));
    if (stalls >= cfg.stall_iterations) {
      trace.termination = TerminationReason::Converged;
      break;
    }
  }
  if (trace.termination != TerminationReason::Converged) {
    trace.termination = all_empty ? TerminationReason::AllEmpty : TerminationReason::KMax;
  }
  if (v_best) trace.final_value = *v_best;
  trace.seconds = seconds_since(start);
  return trace;
}

std::vector<AlgorithmTrace> run_epsilon_ladder(const MpecProblem& problem,
                                               const AlgoConfig& config) {
  const AlgoConfig cfg = config.resolved(problem);
  if (cfg.epsilon_ladder.empty()) throw DriverError("epsilon ladder is empty");
  JkCache cache;
  std::vector<AlgorithmTrace> out;
  for (double eps : cfg.epsilon_ladder) {
    AlgoConfig run = cfg;
    run.epsilon = eps;
    out.push_back(run_algorithm1(problem, run, &cache));
  }
  return out;
}

double pk_eps_violation(const MpecProblem& problem, const Polynomial& jk, double epsilon,
                        const Eigen::VectorXd& z) {
  double worst = -std::numeric_limits<double>::infinity();
  auto below = [&](double value) { worst = std::max(worst, -(value + epsilon)); };
  for (const auto& g : problem.constraints_g) below(evaluate(g, z));
  for (const auto& h : problem.constraints_h) below(evaluate(h, z));
  below(evaluate(jk, z));
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    worst = std::max(worst, std::abs(z[i]) - problem.box.halfwidth[i]);
  }
  return worst;
}

bool check_upper_bound(const AlgorithmTrace& trace, double f_star, double epsilon) {
  if (!trace.any_successful()) throw DriverError("trace has no successful iteration");
  return trace.final_value < f_star + epsilon + 1e-6;
}

EpsScalingFit fit_eps_scaling(const std::vector<std::pair<double, double>>& samples,
                              double f_star) {
  if (samples.size() < 3) throw DriverError("need at least 3 (eps, value) samples");
  EpsScalingFit fit;
  fit.samples = samples;
  std::vector<double> lx, ly;
  for (const auto& [eps, val] : samples) {
    if (!(eps > 0.0) || !std::isfinite(eps) || !std::isfinite(val)) {
      throw DriverError("samples need finite eps > 0 and finite values");
    }
    if (val > f_star + 1e-9) {
      throw DriverError("sample value exceeds the reference optimum");
    }
    const double gap = f_star - val;
    if (gap > 1e-9) {
      lx.push_back(std::log(eps));
      ly.push_back(std::log(gap));
    }
  }
  fit.used = static_cast<int>(lx.size());
  if (lx.empty()) return fit;  // c = 0 branch
  if (lx.size() < 3) throw DriverError("fewer than 3 samples lie below the reference optimum");

  Eigen::MatrixXd a(static_cast<Eigen::Index>(lx.size()), 2);
  Eigen::VectorXd b(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = lx[static_cast<std::size_t>(i)];
    b[i] = ly[static_cast<std::size_t>(i)];
  }
  const Eigen::Vector2d coef = a.colPivHouseholderQr().solve(b);
  fit.c = -std::exp(coef[0]);
  fit.q = coef[1];
  fit.q_defined = true;
  fit.residual = (a * coef - b).squaredNorm();
  return fit;
}

}  // namespace mpecsos
