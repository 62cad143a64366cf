#include "mpecsos/oracle.hpp"

#include <random>

#include <gtest/gtest.h>
#include <json.hpp>

namespace mpecsos {
namespace {

Eigen::VectorXd vec(double a) { return Eigen::VectorXd::Constant(1, a); }

TEST(Oracle, P1ClosedFormBranch) {
  // x in [2/3, 1]: J = -x y^2 / 2 + y^3 / 3 + min_v (x v^2 / 2 - v^3 / 3)
  const MpecProblem p = resolve_problem("p1_mpec");
  const auto j = eval_J(p, vec(0.8), vec(0.5));
  ASSERT_TRUE(j.has_value());
  EXPECT_NEAR(j->value, -0.8 * 0.25 / 2.0 + 0.125 / 3.0, 1e-4);
}

TEST(Oracle, P2InnerProblemAtZero) {
  const MpecProblem p = resolve_problem("p2_bilevel");
  const auto j = eval_J(p, vec(0.0), vec(0.0));
  ASSERT_TRUE(j.has_value());
  EXPECT_NEAR(j->value, -1.0 / 3.0, 1e-4);
  EXPECT_NEAR(j->v[0], 2.0, 1e-6);
}

TEST(Oracle, P3ClosedForm) {
  const MpecProblem p = resolve_problem("p3_sip");
  const auto j = eval_J(p, vec(0.5), vec(1.0));
  ASSERT_TRUE(j.has_value());
  EXPECT_NEAR(j->value, 1.0 - 0.25 - 0.0625, 1e-4);
}

TEST(Oracle, EmptyLowerLevelIsReported) {
  auto doc = nlohmann::json::parse(bundled_instance("p1_mpec"));
  doc["B"] = {"x - 0.5", "1 - y^2"};
  const MpecProblem p = load_problem(doc.dump());
  EXPECT_FALSE(eval_J(p, vec(0.0), vec(0.0)).has_value());
  EXPECT_TRUE(eval_J(p, vec(0.75), vec(0.0)).has_value());
}

TEST(Oracle, RejectsLargeProblems) {
  auto doc = nlohmann::json::parse(bundled_instance("p1_mpec"));
  doc["variables"] = {{"x", {"x", "x2", "x3", "x4"}}, {"y", {"y"}}};
  const MpecProblem p = load_problem(doc.dump());
  EXPECT_THROW(ValueFunctionOracle{p}, OracleError);
  EXPECT_THROW(solve_P_eps_reference(p, 0.0), OracleError);
}

TEST(Oracle, ConfigValidation) {
  const MpecProblem p = resolve_problem("p1_mpec");
  OracleConfig c;
  c.inner_grid = 2;
  EXPECT_THROW(eval_J(p, vec(0.0), vec(0.0), c), OracleError);
  EXPECT_THROW(solve_P_eps_reference(p, -1e-3), OracleError);
}

TEST(OracleReference, P1) {
  const auto r = solve_P_eps_reference(resolve_problem("p1_mpec"), 0.0);
  ASSERT_TRUE(r.has_value());
  EXPECT_NEAR(r->value, 1.0, 5e-3);
  EXPECT_NEAR(r->point[0], 0.0, 5e-3);
  EXPECT_NEAR(r->point[1], 1.0, 5e-3);
}

TEST(OracleReference, P2) {
  const auto r = solve_P_eps_reference(resolve_problem("p2_bilevel"), 0.0);
  ASSERT_TRUE(r.has_value());
  EXPECT_NEAR(r->value, 2.0, 5e-3);
  EXPECT_NEAR(r->point[0], 0.0, 5e-3);
  EXPECT_NEAR(r->point[1], 2.0, 5e-3);
}

TEST(OracleReference, P3) {
  const auto r = solve_P_eps_reference(resolve_problem("p3_sip"), 0.0);
  ASSERT_TRUE(r.has_value());
  EXPECT_NEAR(r->value, 0.0, 5e-3);
  EXPECT_NEAR(r->point[0], 0.0, 5e-3);
  EXPECT_NEAR(r->point[1], 0.0, 5e-3);
}

TEST(OracleReference, TiesInObjectiveStillRefine) {
  // f = y ignores x; the perturbed optimum sits at (0, -eps)
  const auto r = solve_P_eps_reference(resolve_problem("p3_sip"), 1e-4);
  ASSERT_TRUE(r.has_value());
  EXPECT_NEAR(r->value, -1e-4, 1e-9);
}

TEST(OracleProperty, ValueNonIncreasingInEps) {
  for (const auto& name : bundled_instance_names()) {
    const MpecProblem p = resolve_problem(name);
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {0.0, 1e-4, 1e-3, 1e-2, 1e-1}) {
      const auto r = solve_P_eps_reference(p, eps);
      ASSERT_TRUE(r.has_value()) << name << " eps " << eps;
      EXPECT_LE(r->value, prev + 1e-9) << name << " eps " << eps;
      prev = r->value;
    }
  }
}

TEST(OracleProperty, MinimizationSoundness) {
  std::mt19937 rng(7);
  for (const auto& name : bundled_instance_names()) {
    const MpecProblem p = resolve_problem(name);
    const ValueFunctionOracle oracle(p);
    const double wx = p.box.halfwidth[0];
    const double wy = p.box.halfwidth[1];
    std::uniform_real_distribution<double> ux(-wx, wx), uy(-wy, wy);
    for (int trial = 0; trial < 20; ++trial) {
      const double x = ux(rng);
      const double y = uy(rng);
      const auto j = oracle(vec(x), vec(y));
      ASSERT_TRUE(j.has_value());
      for (int s = 0; s < 50; ++s) {
        const Eigen::Vector3d xyv(x, y, uy(rng));
        bool feasible = true;
        for (std::size_t h = 0; h < p.constraints_h.size(); ++h) {
          feasible = feasible && evaluate(p.h_in_v(h), xyv) >= 0.0;
        }
        if (feasible) EXPECT_LE(j->value, evaluate(p.phi, xyv) + 1e-9) << name;
      }
    }
  }
}

TEST(OracleProperty, ResolutionStability) {
  for (const auto& name : bundled_instance_names()) {
    const MpecProblem p = resolve_problem(name);
    OracleConfig fine;
    fine.inner_grid = 4001;
    const ValueFunctionOracle coarse_oracle(p), fine_oracle(p, fine);
    for (double x : {-0.9, -0.3, 0.0, 0.4, 1.0}) {
      for (double t : {-1.0, -0.5, 0.2, 0.7}) {
        const double y = t * p.box.halfwidth[1];
        const auto a = coarse_oracle(vec(x), vec(y));
        const auto b = fine_oracle(vec(x), vec(y));
        ASSERT_TRUE(a && b);
        EXPECT_NEAR(a->value, b->value, 1e-3) << name << " at " << x << ", " << y;
      }
    }
  }
}

TEST(OracleProperty, AtLeastAgreesWithValue) {
  const MpecProblem p = resolve_problem("p1_mpec");
  const ValueFunctionOracle oracle(p);
  for (double x : {-0.5, 0.1, 0.8}) {
    for (double y : {-0.6, 0.3, 1.0}) {
      const double j = oracle(vec(x), vec(y))->value;
      EXPECT_TRUE(oracle.at_least(vec(x), vec(y), j - 1e-9));
      EXPECT_FALSE(oracle.at_least(vec(x), vec(y), j + 1e-6));
    }
  }
}

}  // namespace
}  // namespace mpecsos
