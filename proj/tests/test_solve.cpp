#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "lipcert/error.hpp"
#include "lipcert/sdp_problem.hpp"
#include "lipcert/solve.hpp"
#include "support.hpp"

using namespace lipcert;
using namespace lipcert::testing;
using Eigen::MatrixXd;

namespace {

// min t  s.t.  [[t I, B], [B^T, I]] >= 0, optimum sigma_max(B)^2
SdpProblem norm_problem(const MatrixXd& b) {
  SdpProblem p;
  const VariableRef t = p.add_variable("t", VariableKind::kScalar, 1);
  p.objective.emplace_back(t.offset, 1.0);
  const int m = static_cast<int>(b.rows()), n = static_cast<int>(b.cols());
  BlockBuilder blk("norm", m + n);
  blk.add_scaled_identity(0, m, t);
  blk.add_constant(0, m, b);
  blk.add_constant(m, m, MatrixXd::Identity(n, n));
  p.blocks.push_back(blk.build());
  return p;
}

double sigma_max(const MatrixXd& m) { return Eigen::JacobiSVD<MatrixXd>(m).singularValues()(0); }

}  // namespace

TEST(Sdp, BlockBuilderEvaluatesAffineMap) {
  SdpProblem p;
  const VariableRef s = p.add_variable("S", VariableKind::kSymmetric, 2);
  const VariableRef d = p.add_variable("D", VariableKind::kDiagonal, 2);
  EXPECT_EQ(s.num_coords(), 3);
  EXPECT_EQ(d.offset, 3);
  Eigen::VectorXd y(5);
  y << 1, 2, 3, 4, 5;
  MatrixXd sv(2, 2);
  sv << 1, 2, 2, 3;
  EXPECT_TRUE(variable_value(s, y).isApprox(sv));
  EXPECT_TRUE(variable_value(d, y).isApprox(Eigen::Vector2d(4, 5).asDiagonal().toDenseMatrix()));

  MatrixXd l(2, 2);
  l << 1, 1, 0, 2;
  BlockBuilder b("x", 4);
  b.add_term(0, 0, s, l, l, 1.0);
  b.add_term(0, 2, d, l, MatrixXd::Identity(2, 2), -1.0);
  b.add_constant(2, 2, MatrixXd::Identity(2, 2));
  MatrixXd expected = MatrixXd::Zero(4, 4);
  expected.block(0, 0, 2, 2) = l.transpose() * sv * l;
  const MatrixXd dv = variable_value(d, y);
  expected.block(0, 2, 2, 2) = -l.transpose() * dv;
  expected.block(2, 0, 2, 2) = -dv * l;
  expected.block(2, 2, 2, 2) = MatrixXd::Identity(2, 2);
  EXPECT_TRUE(evaluate_block(b.build(), y).isApprox(expected));
}

TEST(Sdp, SerializationIsCanonical) {
  const MatrixXd b = MatrixXd::Identity(2, 2);
  EXPECT_EQ(serialize(norm_problem(b)), serialize(norm_problem(b)));
  EXPECT_EQ(fingerprint(norm_problem(b)), fingerprint(norm_problem(b)));
  EXPECT_NE(fingerprint(norm_problem(b)), fingerprint(norm_problem(2 * b)));
}

TEST(Solve, TwoByTwoClosedForm) {
  SdpProblem p;
  const VariableRef t = p.add_variable("t", VariableKind::kScalar, 1);
  p.objective.emplace_back(t.offset, 1.0);
  BlockBuilder b("b", 2);
  b.add_scaled_identity(0, 1, t);
  MatrixXd c(2, 2);
  c << 0, 1, 1, 1;
  b.add_constant(0, 0, c);
  p.blocks.push_back(b.build());
  const Solution s = solve_sdp(p);
  ASSERT_TRUE(s.ok()) << s.message;
  EXPECT_NEAR(s.objective, 1.0, 1e-6);
}

TEST(Solve, SpectralNormProblems) {
  std::mt19937_64 gen(11);
  for (int k = 0; k < 8; ++k) {
    const MatrixXd b = random_matrix(gen, 2 + k % 4, 1 + k % 3);
    const Solution s = solve_sdp(norm_problem(b));
    ASSERT_TRUE(s.ok()) << s.message;
    const double expected = sigma_max(b) * sigma_max(b);
    EXPECT_NEAR(s.objective, expected, 1e-6 * std::max(1.0, expected));
    EXPECT_NEAR(s.assignments.at("t")(0, 0), s.objective, 1e-12);
  }
}

TEST(Solve, DetectsInfeasibility) {
  SdpProblem p;
  const VariableRef t = p.add_variable("t", VariableKind::kScalar, 1);
  p.objective.emplace_back(t.offset, 1.0);
  BlockBuilder b("b", 2);
  b.add_scaled_identity(0, 1, t);
  b.add_constant(1, 1, -MatrixXd::Identity(1, 1));
  p.blocks.push_back(b.build());
  const Solution s = solve_sdp(p);
  EXPECT_EQ(s.status, SolveStatus::kInfeasible);
  EXPECT_FALSE(s.ok());
}

TEST(Solve, FloorsAreRespected) {
  SdpProblem p;
  const VariableRef t = p.add_variable("t", VariableKind::kScalar, 1);
  const VariableRef l = p.add_variable("L", VariableKind::kDiagonal, 3, 0.25);
  p.objective.emplace_back(t.offset, 1.0);
  for (int i = 0; i < 3; ++i) p.objective.emplace_back(l.coord(i, i), 1.0);
  BlockBuilder b("b", 1);
  b.add_scaled_identity(0, 1, t);
  p.blocks.push_back(b.build());
  const Solution s = solve_sdp(p);
  ASSERT_TRUE(s.ok()) << s.message;
  EXPECT_NEAR(s.objective, 0.75, 1e-6);
  EXPECT_GE(s.assignments.at("L").diagonal().minCoeff(), 0.25 - 1e-9);
}

TEST(Solve, BisectionBackendAgreesWithIpm) {
  std::mt19937_64 gen(12);
  SolverSettings bis;
  bis.backend = Backend::kBisection;
  for (int k = 0; k < 4; ++k) {
    const MatrixXd b = random_matrix(gen, 3, 2);
    const Solution a = solve_sdp(norm_problem(b));
    const Solution c = solve_sdp(norm_problem(b), bis);
    ASSERT_TRUE(a.ok() && c.ok()) << c.message;
    EXPECT_EQ(c.backend, "bisection");
    EXPECT_NEAR(std::sqrt(c.objective), std::sqrt(a.objective), 1e-5);
  }
}

TEST(Solve, BackendFromEnvironment) {
  ::setenv("LIPCERT_BACKEND", "bisection", 1);
  EXPECT_EQ(backend_from_env(), Backend::kBisection);
  ::setenv("LIPCERT_BACKEND", "nonsense", 1);
  EXPECT_THROW(backend_from_env(), Error);
  ::unsetenv("LIPCERT_BACKEND");
  EXPECT_EQ(backend_from_env(), Backend::kIpm);
}

TEST(Bisection, FindsThreshold) {
  const auto r = bisect_feasibility([](double g) { return g >= 4.0; }, 0.0, 10.0, 1e-6);
  EXPECT_NEAR(r.value, 4.0, 1e-4);
  EXPECT_GE(r.value, 4.0);
  EXPECT_FALSE(r.clamped_at_lo);
}

TEST(Bisection, DegenerateAndClampedBrackets) {
  EXPECT_DOUBLE_EQ(bisect_feasibility([](double) { return true; }, 3.0, 3.0, 1e-6).value, 3.0);
  const auto r = bisect_feasibility([](double g) { return g >= 4.0; }, 5.0, 10.0, 1e-6);
  EXPECT_TRUE(r.clamped_at_lo);
  EXPECT_NEAR(r.value, 5.0, 1e-5);
}

TEST(Bisection, InvalidBrackets) {
  try {
    bisect_feasibility([](double g) { return g >= 4.0; }, 0.0, 3.0, 1e-6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBracketInvalid);
  }
  EXPECT_THROW(bisect_feasibility([](double) { return true; }, 2.0, 1.0, 1e-6), Error);
}

TEST(Bisection, MonotoneProperty) {
  // the returned value never undercuts the true threshold by more than tol
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 9.0);
  for (int k = 0; k < 50; ++k) {
    const double th = u(gen);
    const auto r = bisect_feasibility([th](double g) { return g >= th; }, 0.0, 10.0, 1e-7);
    EXPECT_GE(r.value, th);
    EXPECT_LE(r.value - th, 1e-6);
  }
}
