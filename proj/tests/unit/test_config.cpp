#include <gtest/gtest.h>

#include <sstream>

#include "netmpc/config.hpp"
#include "netmpc/moments_io.hpp"
#include "netmpc/presets.hpp"
#include "unit/test_util.hpp"

namespace netmpc {
namespace {

const char* kMinimal = R"(# minimal experiment
[experiment]
name = tiny
[system]
A = 2x2 [1 0; 0 0.5]
B = 2x1 [1; 1]
C = eye(2)
sigma_w = 0.5*eye(2)
sigma_v = eye(2)
sigma_x0 = eye(2)
[cost]
Q = eye(2)
Q_N = eye(2)
R = 1x1 [1]
[horizon]
N = 2
N_r = 1
[control]
u_max = 3
[channels]
sensor = bernoulli
sensor_p = 0.9
control = gilbert_elliott
control_p_gb = 0.1
control_p_bg = 0.5
control_p_good = 0.95
control_p_bad = 0.2
[simulation]
T = 40
paths = 7
seed = 5
)";

ExperimentConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is, "test.cfg");
}

std::string parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const InvalidArgument& e) {
    return e.what();
  }
  return "";
}

TEST(Config, ParsesMinimalFile) {
  const ExperimentConfig c = parse(kMinimal);
  EXPECT_EQ(c.name, "tiny");
  EXPECT_EQ(c.sim.model.A(1, 1), 0.5);
  EXPECT_EQ(c.sim.model.Sigma_w, 0.5 * MatrixXd::Identity(2, 2));
  EXPECT_EQ(c.sim.model.N, 2);
  EXPECT_EQ(c.sim.sensor.p, 0.9);
  EXPECT_EQ(c.sim.control.kind, ChannelSpec::Kind::gilbert_elliott);
  EXPECT_EQ(c.sim.control.p_bad, 0.2);
  EXPECT_EQ(c.sim.T, 40);
  EXPECT_EQ(c.sim.paths, 7);
  EXPECT_EQ(c.sim.seed, 5u);
  EXPECT_FALSE(c.sim.stability.enabled);
}

TEST(Config, UnknownKeysAndSectionsRejected) {
  std::string text = kMinimal;
  text += "colour = blue\n";
  const std::string err = parse_error(text);
  EXPECT_NE(err.find("test.cfg:"), std::string::npos) << err;
  EXPECT_NE(err.find("[simulation] unknown key 'colour'"), std::string::npos) << err;
  EXPECT_NE(parse_error(std::string(kMinimal) + "[extras]\n").find("extras"), std::string::npos);
  EXPECT_NE(parse_error(std::string(kMinimal) + "paths = 3\n").find("paths"), std::string::npos);
}

TEST(Config, MalformedValuesRejected) {
  std::string text = kMinimal;
  text.replace(text.find("2x1 [1; 1]"), 10, "2x1 [1; 1; 1]");
  EXPECT_FALSE(parse_error(text).empty());
  text = kMinimal;
  text.replace(text.find("u_max = 3"), 9, "u_max = three");
  EXPECT_NE(parse_error(text).find("[control] u_max"), std::string::npos);
}

TEST(Config, StabilityAutoResolves) {
  std::string text = kMinimal;
  text.replace(text.find("N_r = 1"), 7, "N_r = 1\n[stability]\nenabled = true\nr = auto\nzeta = auto");
  ExperimentConfig c = parse(text);
  EXPECT_TRUE(c.r_auto);
  resolve_stability(c);
  EXPECT_NEAR(c.sim.stability.r, 10.0, 1e-12);
  EXPECT_GT(c.sim.stability.zeta, 0.0);
}

TEST(Config, EveryPresetRoundTrips) {
  for (const std::string& name : preset_names()) {
    const ExperimentConfig c = preset_config(name);
    std::ostringstream os;
    write_config(os, c);
    const ExperimentConfig back = parse(os.str());
    const auto h = [](const SimConfig& s) {
      return moments_hash(s.model, s.sensor, s.control, s.sat);
    };
    EXPECT_EQ(h(back.sim), h(c.sim)) << name;
    EXPECT_EQ(back.sim.model.A, c.sim.model.A) << name;
    EXPECT_EQ(back.sim.model.u_max, c.sim.model.u_max) << name;
    EXPECT_EQ(back.sim.variant, c.sim.variant) << name;
    EXPECT_EQ(back.sim.stability.enabled, c.sim.stability.enabled) << name;
    EXPECT_EQ(back.sim.orthogonal_dim, c.sim.orthogonal_dim) << name;
    std::ostringstream again;
    write_config(again, back);
    EXPECT_EQ(again.str(), os.str()) << name;
  }
}

TEST(Config, PresetsAndReferences) {
  EXPECT_THROW(find_preset("fig99"), InvalidArgument);
  const ReferenceFigure& f2 = reference_figure("fig2");
  EXPECT_EQ(f2.xs.size(), 5u);
  EXPECT_EQ(f2.curves.size(), 4u);
  EXPECT_EQ(reference_figure("fig12").xs.size(), 121u);
  EXPECT_THROW(reference_figure("fig1"), InvalidArgument);
}

}  // namespace
}  // namespace netmpc
