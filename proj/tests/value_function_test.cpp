#include "mpecsos/value_function.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

namespace mpecsos {
namespace {

MpecProblem v_independent_problem() {
  auto doc = nlohmann::json::parse(bundled_instance("p1_mpec"));
  doc["phi"] = "y";
  return load_problem(doc.dump());
}

// Simpson's rule (odd count) for the mean of J over the (x, y) box.
double simpson_weight(int i, int count) {
  if (i == 0 || i == count - 1) return 1.0;
  return i % 2 == 1 ? 4.0 : 2.0;
}

double integral_of_J(const MpecProblem& p, int count) {
  const ValueFunctionOracle oracle(p);
  const Eigen::VectorXd w = p.box.halfwidth;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < count; ++i) {
    for (int j = 0; j < count; ++j) {
      const double x = -w[0] + 2.0 * w[0] * i / (count - 1);
      const double y = -w[1] + 2.0 * w[1] * j / (count - 1);
      const double wt = simpson_weight(i, count) * simpson_weight(j, count);
      num += wt * oracle(Eigen::VectorXd::Constant(1, x), Eigen::VectorXd::Constant(1, y))->value;
      den += wt;
    }
  }
  return num / den;
}

TEST(JmProgram, P1Structure) {
  const MpecProblem p = resolve_problem("p1_mpec");
  const auto [prog, sdp] = build_jm_program(p, 3);
  EXPECT_EQ(prog.free_basis.size(), 28u);
  // sigma_0, h_1(x, v), h_2(x, v), y-box
  ASSERT_EQ(prog.multipliers.size(), 4u);
  EXPECT_EQ(prog.multipliers[0].sigma_degree, 6);
  for (std::size_t j = 1; j < 4; ++j) EXPECT_EQ(prog.multipliers[j].sigma_degree, 4);
  EXPECT_EQ(prog.degree, 6);
}

TEST(JmProgram, OrderBelowThreshold) {
  const MpecProblem p = resolve_problem("p1_mpec");
  EXPECT_EQ(p.k_min(), 2);
  EXPECT_THROW(build_jm_program(p, 1), ValueFunctionError);
  EXPECT_THROW(compute_Jk(p, 1), ValueFunctionError);
}

TEST(Jk, VIndependentTargetIsExact) {
  const MpecProblem p = v_independent_problem();
  const ValueFunctionApprox a = compute_Jk(p, 1);
  ASSERT_TRUE(a.ok());
  const Polynomial y = Polynomial::variable(p.xy_vars(), "y");
  EXPECT_LE(max_abs_difference(a.jk, y), 1e-4);
  EXPECT_LE(lower_bound_check(a.jk, p).value, 1e-6);
  EXPECT_LE(l1_distance_estimate(a.jk, p).value, 1e-5);
}

TEST(Jk, P3RecoversExactValueFunction) {
  const MpecProblem p = resolve_problem("p3_sip");
  const ValueFunctionApprox a = compute_Jk(p, 2);
  ASSERT_TRUE(a.ok());
  const Polynomial exact = parse_polynomial("y - x^2 - x^4", p.xy_vars());
  EXPECT_LE(max_abs_difference(a.jk, exact), 1e-4);
  EXPECT_LE(l1_distance_estimate(a.jk, p).value, 0.01);
  EXPECT_LE(a.jk.degree(), 4);
}

TEST(Jk, RhoMatchesIntegralOfJk) {
  const MpecProblem p = resolve_problem("p1_mpec");
  const ValueFunctionApprox a = compute_Jk(p, 3);
  ASSERT_TRUE(a.ok());
  const MomentVector gamma = moment_vector(2, 6, 1.0);
  EXPECT_NEAR(gamma.integrate(a.jk), a.rho, 1e-6);
  EXPECT_LE(a.identity_residual, 1e-6);
  EXPECT_LE(a.jk.degree(), 6);
}

TEST(Jk, LowerBoundAndNegativeControl) {
  const MpecProblem p = resolve_problem("p1_mpec");
  const ValueFunctionApprox a = compute_Jk(p, 3);
  ASSERT_TRUE(a.ok());
  const GridCheck good = lower_bound_check(a.jk, p, 41);
  EXPECT_LE(good.value, 1e-6);
  EXPECT_EQ(good.evaluated, 41 * 41);
  EXPECT_EQ(good.skipped, 0);
  const Polynomial shifted = a.jk + Polynomial::constant(p.xy_vars(), 0.1);
  EXPECT_NEAR(lower_bound_check(shifted, p, 41).value, 0.1 + good.value, 1e-9);
  EXPECT_GT(lower_bound_check(shifted, p, 41).value, 0.09);
}

TEST(Jk, L1ImprovesWithOrder) {
  const MpecProblem p = resolve_problem("p1_mpec");
  const double d2 = l1_distance_estimate(compute_Jk(p, 2).jk, p).value;
  const double d3 = l1_distance_estimate(compute_Jk(p, 3).jk, p).value;
  EXPECT_LE(d3, d2 + 1e-3);
}

TEST(JkProperty, BundledInstances) {
  for (const auto& name : bundled_instance_names()) {
    const MpecProblem p = resolve_problem(name);
    const double integral_j = integral_of_J(p, 41);
    double prev = -std::numeric_limits<double>::infinity();
    for (int k = p.k_min(); k <= 4; ++k) {
      const ValueFunctionApprox a = compute_Jk(p, k);
      ASSERT_TRUE(a.ok()) << name << " k " << k;
      EXPECT_LE(lower_bound_check(a.jk, p, 41).value, 1e-6) << name << " k " << k;
      EXPECT_GE(a.rho, prev - 1e-7) << name << " k " << k;
      EXPECT_LE(a.rho, integral_j + 1e-3) << name << " k " << k;
      prev = a.rho;
    }
  }
}

TEST(JkTable, RoundTrip) {
  const MpecProblem p = resolve_problem("p3_sip");
  const ValueFunctionApprox a = compute_Jk(p, 2);
  const std::string text = jk_table_json(a);
  const auto doc = nlohmann::json::parse(text);
  EXPECT_EQ(doc.at("k"), 2);
  EXPECT_EQ(doc.at("variables"), nlohmann::json({"x", "y"}));
  EXPECT_EQ(max_abs_difference(jk_from_table_json(text), a.jk), 0.0);
  EXPECT_THROW(jk_from_table_json("{\"variables\": [\"x\"], \"terms\": [{\"exponents\": [1, 2], "
                                  "\"coefficient\": 1}]}"),
               ValueFunctionError);
  EXPECT_THROW(jk_from_table_json("[]"), ValueFunctionError);
}

}  // namespace
}  // namespace mpecsos
