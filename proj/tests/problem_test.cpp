#include "mpecsos/problem.hpp"

#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

namespace mpecsos {
namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json p1_doc() { return nlohmann::json::parse(bundled_instance("p1_mpec")); }

TEST(Problem, LoadsP1) {
  const MpecProblem p = resolve_problem("p1_mpec");
  EXPECT_EQ(p.name, "p1_mpec");
  EXPECT_EQ(p.n(), 1);
  EXPECT_EQ(p.m(), 1);
  EXPECT_EQ(p.constraints_g.size(), 1u);
  EXPECT_EQ(p.constraints_h.size(), 2u);
  EXPECT_EQ(p.box.halfwidth, Eigen::Vector2d(1.0, 1.0));
  EXPECT_EQ(p.k_min(), 2);
  // phi vanishes on v = y
  const Eigen::Vector3d z(0.3, -0.7, -0.7);
  EXPECT_NEAR(evaluate(p.phi, z), 0.0, 1e-15);
  // h_2(x, v) = 1 - v^2
  EXPECT_NEAR(evaluate(p.h_in_v(1), Eigen::Vector3d(0.3, 0.9, 0.5)), 0.75, 1e-15);
}

TEST(Problem, PerCoordinateBound) {
  const MpecProblem p = resolve_problem("p3_sip");
  EXPECT_EQ(p.box.halfwidth, Eigen::Vector2d(1.0, 2.0));
  EXPECT_DOUBLE_EQ(p.box.bound(1), 4.0);
  EXPECT_TRUE(p.box.contains(Eigen::Vector2d(-1.0, 2.0)));
  EXPECT_FALSE(p.box.contains(Eigen::Vector2d(0.0, 2.1)));
  EXPECT_EQ(degrees(p).phi, 4);
  EXPECT_EQ(p.k_min(), 2);
}

TEST(Problem, BundledMatchesDataFiles) {
  for (const auto& name : bundled_instance_names()) {
    const std::string path = std::string(MPECSOS_DATA_DIR) + "/instances/" + name + ".json";
    EXPECT_EQ(nlohmann::json::parse(read_file(path)), nlohmann::json::parse(bundled_instance(name)))
        << name;
    EXPECT_EQ(load_problem_file(path).name, name);
  }
  EXPECT_THROW(bundled_instance("p9"), ProblemError);
}

TEST(Problem, RejectsMalformedDocuments) {
  EXPECT_THROW(load_problem("{not json"), ProblemError);

  auto doc = p1_doc();
  doc["M"] = 0;
  EXPECT_THROW(load_problem(doc.dump()), ProblemError);

  doc = p1_doc();
  doc.erase("phi");
  EXPECT_THROW(load_problem(doc.dump()), ProblemError);

  doc = p1_doc();
  doc["phi"] = "w*v";  // w undeclared
  EXPECT_THROW(load_problem(doc.dump()), ProblemError);

  doc = p1_doc();
  doc["objective"] = "x + v";  // objective may not use v
  EXPECT_THROW(load_problem(doc.dump()), ProblemError);

  doc = p1_doc();
  doc["A"] = {"x +* y"};
  EXPECT_THROW(load_problem(doc.dump()), ProblemError);

  doc = p1_doc();
  doc["variables"]["y"] = {"x"};
  EXPECT_THROW(load_problem(doc.dump()), ProblemError);

  EXPECT_THROW(load_problem_file("/nonexistent/instance.json"), ProblemError);
}

TEST(Problem, DefaultSlackVariable) {
  auto doc = p1_doc();
  doc["variables"].erase("v");
  const MpecProblem p = load_problem(doc.dump());
  EXPECT_EQ(p.v_vars, std::vector<std::string>{"v"});
}

TEST(Assumptions, BundledInstancesPass) {
  for (const auto& name : bundled_instance_names()) {
    const AssumptionReport r = validate_assumptions(resolve_problem(name));
    EXPECT_TRUE(r.b_in_omega) << name;
    EXPECT_TRUE(r.bx_nonempty) << name;
    EXPECT_TRUE(r.warnings.empty()) << name;
    EXPECT_GT(r.b_samples, 0) << name;
  }
}

TEST(Assumptions, EmptyLowerLevelIsReported) {
  auto doc = p1_doc();
  doc["B"] = {"-1 - y^2"};
  const AssumptionReport r = validate_assumptions(load_problem(doc.dump()));
  EXPECT_FALSE(r.bx_nonempty);
  EXPECT_EQ(r.x_with_empty_bx, r.x_samples);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Assumptions, LowerLevelOutsideBox) {
  auto doc = p1_doc();
  doc["B"] = {"1-x^2", "4-y^2"};  // B reaches |y| = 2 but M = 1
  const AssumptionReport r = validate_assumptions(load_problem(doc.dump()));
  EXPECT_FALSE(r.b_in_omega);
  EXPECT_GT(r.b_outside_box, 0);
  EXPECT_FALSE(r.warnings.empty());
}

}  // namespace
}  // namespace mpecsos
