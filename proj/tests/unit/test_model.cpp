#include <gtest/gtest.h>

#include "netmpc/channels.hpp"
#include "netmpc/model.hpp"
#include "netmpc/presets.hpp"
#include "unit/test_util.hpp"

namespace netmpc {
namespace {

using testing::expect_matrix_near;
using testing::random_matrix;
using testing::random_model;

SystemModel scalar_model(double a, double b) {
  SystemModel M;
  M.A = MatrixXd::Constant(1, 1, a);
  M.B = MatrixXd::Constant(1, 1, b);
  M.C = MatrixXd::Identity(1, 1);
  M.Sigma_w = M.Sigma_v = M.Sigma_x0 = M.Q = M.Q_N = M.R = MatrixXd::Identity(1, 1);
  M.N = 2;
  M.N_r = 1;
  return M;
}

TEST(Model, FourDimPresetPassesAllChecks) {
  const ValidationReport r = validate_model(four_dim_config().model);
  EXPECT_TRUE(r.ok()) << r.summary();
}

TEST(Model, UnstableScalarFailsEigenvalueLocation) {
  const ValidationReport r = validate_model(scalar_model(2.0, 1.0));
  EXPECT_FALSE(r.ok());
  EXPECT_FALSE(r.passed("eigenvalues_in_unit_disk"));
}

TEST(Model, JordanBlockFailsSemisimplicity) {
  SystemModel M = scalar_model(1.0, 1.0);
  M.A = MatrixXd(2, 2);
  M.A << 1, 1, 0, 1;
  M.B = MatrixXd(2, 1);
  M.B << 0, 1;
  M.C = MatrixXd::Identity(2, 2);
  M.Sigma_w = M.Sigma_v = M.Sigma_x0 = M.Q = M.Q_N = MatrixXd::Identity(2, 2);
  const ValidationReport r = validate_model(M);
  EXPECT_FALSE(r.passed("unit_circle_semisimple"));
}

TEST(Model, DimensionMismatchThrows) {
  SystemModel M = scalar_model(0.5, 1.0);
  M.B = MatrixXd::Ones(2, 1);
  EXPECT_THROW(validate_model(M), InvalidArgument);
}

TEST(Model, DecomposeFourDim) {
  const SimConfig cfg = four_dim_config();
  const Decomposition dec = decompose(cfg.model, cfg.orthogonal_dim);
  EXPECT_EQ(dec.d_o(), 3);
  EXPECT_EQ(dec.d_s(), 1);
  EXPECT_EQ(dec.kappa, 3);
  expect_matrix_near(dec.basis, MatrixXd::Identity(4, 4), 0.0);
}

TEST(Model, DecomposeOrthogonalAndStable) {
  SystemModel M = scalar_model(0.5, 1.0);
  M.A = 0.5 * MatrixXd::Identity(2, 2);
  M.B = MatrixXd::Identity(2, 2);
  M.C = MatrixXd::Identity(2, 2);
  M.Sigma_w = M.Sigma_v = M.Sigma_x0 = M.Q = M.Q_N = M.R = MatrixXd::Identity(2, 2);
  const Decomposition stable = decompose(M);
  EXPECT_EQ(stable.d_o(), 0);
  EXPECT_EQ(stable.d_s(), 2);
  EXPECT_EQ(stable.kappa, 0);

  const SimConfig three = three_dim_config(true);
  const Decomposition orth = decompose(three.model);
  EXPECT_EQ(orth.d_o(), 3);
  EXPECT_EQ(orth.d_s(), 0);
  EXPECT_EQ(orth.kappa, 3);
}

TEST(Model, DecomposeRecomposesRandomMixedSpectrum) {
  RngStream rng(11, 0);
  for (int trial = 0; trial < 20; ++trial) {
    // Rotation block plus stable block, hidden behind a random similarity.
    const double th = 0.3 + rng.uniform();
    MatrixXd blk = MatrixXd::Zero(4, 4);
    blk(0, 0) = std::cos(th);
    blk(0, 1) = -std::sin(th);
    blk(1, 0) = std::sin(th);
    blk(1, 1) = std::cos(th);
    blk(2, 2) = 0.5;
    blk(3, 3) = -0.3;
    const MatrixXd T = random_matrix(rng, 4, 4) + 3.0 * MatrixXd::Identity(4, 4);
    SystemModel M;
    M.A = T * blk * T.inverse();
    M.B = random_matrix(rng, 4, 2);
    M.C = MatrixXd::Identity(4, 4);
    M.Sigma_w = M.Sigma_v = M.Sigma_x0 = M.Q = M.Q_N = MatrixXd::Identity(4, 4);
    M.R = MatrixXd::Identity(2, 2);
    const Decomposition dec = decompose(M);
    ASSERT_EQ(dec.d_o(), 2);
    const MatrixXd back = dec.basis * block_diag(dec.A_o, dec.A_s) * dec.basis_inv;
    expect_matrix_near(back, M.A, 1e-8);
    expect_matrix_near(dec.A_o.transpose() * dec.A_o, MatrixXd::Identity(2, 2), 1e-8);
  }
}

TEST(Model, ReachabilityMatrixExamples) {
  const SimConfig cfg = four_dim_config();
  const Decomposition dec = decompose(cfg.model, cfg.orthogonal_dim);
  MatrixXd R3(3, 3);
  R3 << 1, 1, 1, 0, -1, 0, -1, 0, 1;
  expect_matrix_near(reachability_matrix(dec.A_o, dec.B_o, 3), R3, 1e-12);

  MatrixXd A(2, 2), B(2, 1);
  A << 0, 1, 0, 0;
  B << 0, 1;
  expect_matrix_near(reachability_matrix(A, B, 1), B, 0.0);
  expect_matrix_near(reachability_matrix(A, B, 2), MatrixXd::Identity(2, 2), 0.0);
}

TEST(Model, ReachabilityIndexExamples) {
  EXPECT_EQ(reachability_index(MatrixXd::Identity(1, 1), MatrixXd::Ones(1, 1)), 1);
  const SimConfig three = three_dim_config(true);
  EXPECT_EQ(reachability_index(three.model.A, three.model.B), 3);
}

TEST(Model, StackScalarExample) {
  const StackedMatrices S = stack(scalar_model(1.0, 1.0));
  MatrixXd B(3, 2);
  B << 0, 0, 1, 0, 1, 1;
  expect_matrix_near(S.calB, B, 0.0);
  MatrixXd alpha(2, 2);
  alpha << 3, 1, 1, 2;
  expect_matrix_near(S.alpha, alpha, 1e-14);
  expect_matrix_near(S.calA.topRows(1), MatrixXd::Identity(1, 1), 0.0);
}

TEST(Model, StackedDynamicsMatchStepSimulation) {
  const properties::Outcome r = properties::stacked_dynamics_suite(100, 2024);
  EXPECT_TRUE(r.passed) << r.detail;
}

}  // namespace
}  // namespace netmpc
