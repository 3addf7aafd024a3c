#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "netmpc/presets.hpp"
#include "netmpc/simulation.hpp"
#include "unit/test_util.hpp"

namespace netmpc {
namespace {

std::shared_ptr<const OfflineMoments> moments_for(const SimConfig& cfg, long samples = 2000) {
  return std::make_shared<const OfflineMoments>(
      estimate_moments(cfg.model, cfg.sensor, cfg.control, cfg.sat, samples, 1));
}

SimConfig short_config(PolicyVariant v, int T, int paths) {
  SimConfig cfg = four_dim_config();
  cfg.variant = v;
  cfg.T = T;
  cfg.paths = paths;
  return cfg;
}

TEST(Simulation, NoiselessPlantStaysAtRest) {
  SimConfig cfg = short_config(PolicyVariant::full, 30, 1);
  cfg.sensor = cfg.control = ChannelSpec::bernoulli(1.0);
  cfg.model.Sigma_w.setZero();
  cfg.model.Sigma_x0.setZero();
  // Measurement noise must stay positive definite; make it negligible.
  cfg.model.Sigma_v = 1e-12 * MatrixXd::Identity(4, 4);
  cfg.stability.enabled = false;
  const SimSetup setup = prepare(cfg, moments_for(cfg));
  const PathResult r = run_path(setup, 0);
  EXPECT_LE(*std::max_element(r.x_norm_sq.begin(), r.x_norm_sq.end()), 1e-10);
  EXPECT_LE(*std::max_element(r.u_norm_sq.begin(), r.u_norm_sq.end()), 1e-10);
}

TEST(Simulation, VanishingInputMatchesOpenLoop) {
  SimConfig cfg = short_config(PolicyVariant::full, 30, 1);
  cfg.model.u_max = 1e-9;
  cfg.stability = default_stability(cfg.model, decompose(cfg.model, cfg.orthogonal_dim));
  cfg.keep_traces = true;
  const SimSetup setup = prepare(cfg, moments_for(cfg));
  const PathResult r = run_path(setup, 0);

  const SystemModel& M = cfg.model;
  RngStream r_x0(cfg.seed, stream_id(0, StreamRole::initial_state));
  RngStream r_w(cfg.seed, stream_id(0, StreamRole::process_noise));
  VectorXd x = r_x0.gaussian(psd_sqrt(M.Sigma_x0));
  const MatrixXd Lw = psd_sqrt(M.Sigma_w);
  for (int t = 0; t <= cfg.T; ++t) {
    ASSERT_LE((r.x[t] - x).cwiseAbs().maxCoeff(), 1e-6) << "t = " << t;
    x = M.A * x + r_w.gaussian(Lw);
  }
}

TEST(Simulation, PathsAreDeterministicAndThreadIndependent) {
  SimConfig cfg = short_config(PolicyVariant::diagonal, 12, 3);
  const auto mo = moments_for(cfg);
  const SimSetup setup = prepare(cfg, mo);
  const PathResult a = run_path(setup, 1), b = run_path(setup, 1);
  EXPECT_EQ(a.x_norm_sq, b.x_norm_sq);
  EXPECT_EQ(a.u_norm_sq, b.u_norm_sq);
  EXPECT_EQ(a.sensor_bits, b.sensor_bits);

  cfg.threads = 3;
  const SimSetup threaded = prepare(cfg, mo);
  const std::vector<PathResult> s = run_paths(setup), t = run_paths(threaded);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(s[i].x_norm_sq, t[i].x_norm_sq);
}

TEST(Simulation, SinglePathAggregate) {
  const SimConfig cfg = short_config(PolicyVariant::zero, 30, 1);
  const SimSetup setup = prepare(cfg, moments_for(cfg));
  const PathResult r = run_path(setup, 0);
  const AggregateStats a = run_monte_carlo(setup);
  EXPECT_EQ(a.paths, 1);
  EXPECT_EQ(a.empirical_msb, *std::max_element(r.x_norm_sq.begin(), r.x_norm_sq.end()));
  EXPECT_EQ(a.path_max_msb, a.empirical_msb);
  double su = 0.0;
  for (double u : r.u_norm_sq) su += u;
  EXPECT_DOUBLE_EQ(a.mae, su / cfg.T);
  EXPECT_EQ(a.solves, 10);
  EXPECT_EQ(static_cast<int>(r.x_norm_sq.size()), cfg.T + 1);
  EXPECT_EQ(static_cast<int>(r.u_norm_sq.size()), cfg.T);
}

TEST(Simulation, AggregateInvariants) {
  const SimConfig cfg = short_config(PolicyVariant::zero, 30, 40);
  const AggregateStats a = run_monte_carlo(prepare(cfg, moments_for(cfg)));
  for (double v : a.mean_sq_trace) EXPECT_GE(a.empirical_msb, v);
  EXPECT_GE(a.path_max_msb, a.empirical_msb);
  double pmax = 0.0;
  for (int i = 0; i < a.paths; ++i) pmax += a.path_x_sq.row(i).maxCoeff();
  EXPECT_NEAR(a.path_max_msb, pmax / a.paths, 1e-9 * pmax);
  EXPECT_GT(a.msb_se, 0.0);
  EXPECT_GT(a.path_max_msb_se, 0.0);
  EXPECT_EQ(paired_path_max_diff_se(a, a), 0.0);
  EXPECT_GT(a.mae_se, 0.0);
  EXPECT_TRUE(std::isfinite(a.mae));
}

TEST(Simulation, EstimationErrorFollowsSensorRate) {
  SimConfig cfg = short_config(PolicyVariant::zero, 60, 100);
  cfg.sensor = ChannelSpec::bernoulli(1.0);
  EXPECT_EQ(run_monte_carlo(prepare(cfg, moments_for(cfg))).est_error_diag, 0.0);
  cfg.sensor = ChannelSpec::bernoulli(0.5);
  const double low = run_monte_carlo(prepare(cfg, moments_for(cfg))).est_error_diag;
  cfg.sensor = ChannelSpec::bernoulli(0.9);
  const double high = run_monte_carlo(prepare(cfg, moments_for(cfg))).est_error_diag;
  EXPECT_GT(low, 0.0);
  EXPECT_GE(low, high);
}

TEST(Simulation, SingleCellSweepEqualsRun) {
  const SimConfig cfg = short_config(PolicyVariant::zero, 15, 4);
  const MomentsProvider mp = caching_moments_provider(2000, 1);
  const auto rows = sweep(cfg, SweepParam::u_max, {cfg.model.u_max},
                          {VariantSpec{PolicyVariant::zero, true}}, mp);
  ASSERT_EQ(rows.size(), 1u);
  const AggregateStats direct = run_monte_carlo(prepare(cfg, mp(cfg)));
  EXPECT_EQ(rows[0].stats.empirical_msb, direct.empirical_msb);
  EXPECT_EQ(rows[0].stats.mae, direct.mae);

  std::ostringstream os;
  write_sweep_csv(os, rows, false);
  const std::string csv = os.str();
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "param,value,variant,msb,mae,mean_solver_time,fallback_rate,msb_pathmax");
}

TEST(Simulation, VariantLabels) {
  EXPECT_EQ(VariantSpec::parse("full-nostab").label(), "full-nostab");
  EXPECT_FALSE(VariantSpec::parse("full-nostab").stability);
  EXPECT_EQ(VariantSpec::parse("diagonal").policy, PolicyVariant::diagonal);
  EXPECT_THROW(VariantSpec::parse("wide"), InvalidArgument);
  EXPECT_EQ(parse_sweep_param("p_gs"), SweepParam::p_gs);
  EXPECT_THROW(parse_sweep_param("q"), InvalidArgument);
  SimConfig cfg = four_dim_config();
  EXPECT_THROW(apply_param(cfg, SweepParam::p_gc, 0.5), InvalidArgument);
}

}  // namespace
}  // namespace netmpc
