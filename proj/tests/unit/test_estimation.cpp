#include <gtest/gtest.h>

#include <cmath>
#include <optional>

#include "netmpc/channels.hpp"
#include "netmpc/error.hpp"
#include "netmpc/estimation.hpp"
#include "netmpc/filtering.hpp"
#include "support/properties.hpp"

namespace netmpc {
namespace {

SystemModel scalar(double a, double b) {
  SystemModel M;
  M.A = MatrixXd::Constant(1, 1, a);
  M.B = MatrixXd::Constant(1, 1, b);
  M.C = MatrixXd::Identity(1, 1);
  M.Sigma_w = MatrixXd::Constant(1, 1, 0.8);
  M.Sigma_v = MatrixXd::Constant(1, 1, 1.3);
  M.Sigma_x0 = MatrixXd::Constant(1, 1, 2.0);
  M.Q = M.Q_N = M.R = MatrixXd::Identity(1, 1);
  return M;
}

VectorXd vec1(double v) { return VectorXd::Constant(1, v); }

TEST(Estimation, ReceivedPacketOverridesHistory) {
  const SystemModel M = scalar(0.9, 1.0);
  EstimatorState st = estimator_init(M);
  st.x_tilde = vec1(100.0);
  const SensorPacket pkt{vec1(2.5), vec1(3.0)};
  const EstimatorState next = remote_update(st, 1, pkt, vec1(4.0), M);
  EXPECT_EQ(next.x_tilde(0), 2.5);
  EXPECT_EQ(next.received_innovation(0), 0.5);
}

TEST(Estimation, DropHoldsOrPropagates) {
  SystemModel M = scalar(1.0, 0.0);
  EstimatorState st = estimator_init(M);
  st.x_tilde = vec1(1.7);
  EXPECT_EQ(remote_update(st, 0, std::nullopt, vec1(3.0), M).x_tilde(0), 1.7);

  M = scalar(2.0, 1.0);
  st.x_tilde = vec1(1.0);
  const EstimatorState next = remote_update(st, 0, std::nullopt, vec1(3.0), M);
  EXPECT_EQ(next.x_tilde(0), 5.0);
  EXPECT_EQ(next.received_innovation(0), 0.0);
}

TEST(Estimation, PacketContractEnforced) {
  const SystemModel M = scalar(0.9, 1.0);
  const EstimatorState st = estimator_init(M);
  const SensorPacket pkt{vec1(0.0), vec1(0.0)};
  EXPECT_THROW(remote_update(st, 0, pkt, vec1(0.0), M), InvalidArgument);
  EXPECT_THROW(remote_update(st, 1, std::nullopt, vec1(0.0), M), InvalidArgument);
}

TEST(Estimation, ErrorDiagIsMaxOfPathMean) {
  EXPECT_EQ(estimation_error_diag({{0, 0, 0}, {0, 0, 0}}), 0.0);
  EXPECT_DOUBLE_EQ(estimation_error_diag({{1, 4, 0}, {3, 0, 0}}), 2.0);
}

TEST(Estimation, MatchesGaussianConditioningForEveryPattern) {
  const properties::Outcome r = properties::estimator_conditioning_check();
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Estimation, EstimatorNoiseIsZeroMean) {
  const properties::Outcome r = properties::estimator_noise_check(100000, 99);
  EXPECT_TRUE(r.passed) << r.detail;
}

}  // namespace
}  // namespace netmpc
