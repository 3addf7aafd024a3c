#include "netmpc/presets.hpp"

#include <cmath>
#include <map>

#include "netmpc/error.hpp"

namespace netmpc {

namespace {

MatrixXd eye(int n, double k = 1.0) { return k * MatrixXd::Identity(n, n); }

}  // namespace

SimConfig four_dim_config() {
  SimConfig cfg;
  SystemModel& m = cfg.model;
  m.A = MatrixXd::Zero(4, 4);
  m.A << 1, 0, 0, 0,
         0, 0, -1, 0,
         0, 1, 0, 0,
         0, 0, 0, 0.9;
  m.B = MatrixXd(4, 1);
  m.B << 1, 0, 1, 0;
  m.C = eye(4);
  m.Sigma_w = eye(4, 10.0);
  m.Sigma_v = eye(4, 10.0);
  m.Sigma_x0 = eye(4);
  m.Q = eye(4);
  m.Q_N = eye(4);
  m.R = eye(1);
  m.u_max = 5.0;
  m.N = 5;
  m.N_r = 3;
  cfg.orthogonal_dim = 3;
  cfg.sensor = ChannelSpec::bernoulli(0.8);
  cfg.control = ChannelSpec::bernoulli(0.8);
  cfg.sat = SaturatorSpec{SaturatorSpec::Kind::sigmoid, 1.0};
  cfg.variant = PolicyVariant::full;
  cfg.stability.enabled = true;
  const Decomposition dec = decompose(m, cfg.orthogonal_dim);
  const StabilityParams def = default_stability(m, dec);
  cfg.stability.r = def.r;
  cfg.stability.zeta = def.zeta;
  cfg.T = 120;
  cfg.paths = 1000;
  cfg.seed = 1;
  return cfg;
}

SimConfig gilbert_elliott_config() {
  SimConfig cfg = four_dim_config();
  cfg.sensor = ChannelSpec::gilbert_elliott(0.2, 0.9, 0.8, 0.0);
  cfg.control = ChannelSpec::gilbert_elliott(0.2, 0.9, 0.8, 0.0);
  return cfg;
}

SimConfig three_dim_config(bool stability) {
  SimConfig cfg;
  SystemModel& m = cfg.model;
  m.A = MatrixXd(3, 3);
  m.A << 0, -0.8, -0.6,
         0.8, -0.36, 0.48,
         0.6, 0.48, -0.64;
  m.B = MatrixXd(3, 1);
  m.B << 0.16, 0.12, 0.14;
  m.C = eye(3);
  m.Sigma_w = eye(3, 2.0);
  m.Sigma_v = eye(3, 10.0);
  m.Sigma_x0 = eye(3);
  m.Q = eye(3);
  m.Q_N = MatrixXd(3, 3);
  m.Q_N << 12, -0.1, -0.4,
           -0.1, 19, -0.2,
           -0.4, -0.2, 2;
  m.R = eye(1, 2.0);
  m.u_max = 15.0;
  m.N = 4;
  m.N_r = stability ? 3 : 1;
  cfg.orthogonal_dim = 3;
  cfg.sensor = ChannelSpec::bernoulli(0.8);
  cfg.control = ChannelSpec::bernoulli(0.8);
  cfg.sat = SaturatorSpec{SaturatorSpec::Kind::sigmoid, 1.0};
  cfg.variant = PolicyVariant::full;
  cfg.stability.enabled = stability;
  const Decomposition dec = decompose(m, cfg.orthogonal_dim);
  const StabilityParams def = default_stability(m, dec);
  cfg.stability.r = def.r;
  cfg.stability.zeta = def.zeta;
  cfg.T = 120;
  cfg.paths = 500;
  cfg.seed = 1;
  return cfg;
}

namespace {

std::vector<Preset> all_presets() {
  std::vector<Preset> out;
  const SimConfig four = four_dim_config();
  out.push_back({"four-dim", "4-state benchmark, Bernoulli channels p = 0.8, u_max = 5", four});
  for (const char* fig : {"fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8"}) {
    out.push_back({fig, "alias of four-dim", four});
  }
  const SimConfig ge = gilbert_elliott_config();
  out.push_back({"gilbert-elliott", "4-state benchmark, Gilbert-Elliott channels", ge});
  for (const char* fig : {"fig10", "fig11", "correlated"}) {
    out.push_back({fig, "alias of gilbert-elliott", ge});
  }
  out.push_back({"three-dim", "3-state orthogonal plant, N_r = 3 with drift rows",
                 three_dim_config(true)});
  out.push_back({"three-dim-unconstrained",
                 "3-state orthogonal plant, N_r = 1 without drift rows",
                 three_dim_config(false)});
  out.push_back({"fig12", "alias of three-dim", three_dim_config(true)});
  return out;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& p : all_presets()) names.push_back(p.name);
  return names;
}

Preset find_preset(const std::string& name) {
  for (auto& p : all_presets()) {
    if (p.name == name) return p;
  }
  std::string msg = "unknown preset '" + name + "'; available:";
  for (const auto& n : preset_names()) msg += " " + n;
  throw InvalidArgument(msg);
}

namespace {

const std::vector<double> kUmax = {2, 3, 4, 5, 10};
const std::vector<double> kProb = {0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

const std::vector<double> kFig12NoStab = {
     1.6471, 5.3401, 7.2910, 8.3954, 9.4282, 10.4279, 11.1971, 11.9116,
     12.4542, 12.9396, 13.2997, 13.8557, 14.3632, 14.8001, 15.3606, 15.4014,
     15.9135, 16.4125, 16.7440, 17.2076, 17.3108, 17.3320, 17.5282, 17.9869,
     18.3918, 18.5319, 18.7365, 19.0324, 19.2967, 19.6562, 20.1079, 20.2924,
     20.5422, 20.8101, 21.0668, 21.3266, 21.8224, 22.0667, 22.1631, 22.3744,
     22.5305, 22.6477, 23.0746, 23.4810, 23.6094, 23.7411, 23.8718, 24.3211,
     24.7086, 24.9158, 25.0226, 25.1569, 25.2660, 25.4236, 25.5713, 25.6588,
     25.9374, 26.3779, 26.5998, 26.6196, 27.0347, 27.3047, 27.5738, 27.6873,
     27.8672, 28.2699, 28.4390, 28.5018, 28.9112, 29.1117, 29.4198, 29.8015,
     30.1872, 30.5419, 30.7460, 30.9033, 31.0897, 31.2732, 31.4245, 31.9654,
     31.9407, 32.3728, 32.6157, 32.8662, 32.8703, 33.2853, 33.3968, 33.6340,
     33.6708, 33.8639, 34.1653, 34.2772, 34.6846, 34.9859, 35.2116, 35.4815,
     35.7462, 35.9369, 36.1930, 36.3283, 36.6618, 37.0388, 37.1921, 37.5096,
     37.7356, 38.5853, 38.8825, 38.9620, 39.1684, 39.1140, 39.4114, 39.8638,
     40.2122, 40.3450, 40.4681, 40.8887, 41.0537, 41.6078, 41.9445, 42.5147,
     42.9379,
};
const std::vector<double> kFig12Stab = {
     1.6471, 5.3402, 7.2534, 8.3697, 9.4324, 10.3656, 11.0916, 11.8753,
     12.2332, 12.6990, 13.1481, 13.5156, 13.8491, 14.3728, 14.7264, 14.5936,
     15.2276, 15.4596, 15.6412, 16.1448, 16.0857, 15.9242, 16.3116, 16.4484,
     16.6355, 16.8922, 16.8836, 17.0607, 17.3678, 17.4136, 17.6064, 17.9475,
     17.9785, 17.9650, 18.2204, 18.1600, 18.4828, 18.6845, 18.5962, 18.5609,
     18.7175, 18.5174, 18.6015, 19.0943, 19.0305, 18.9849, 19.1564, 19.2478,
     19.3847, 19.7000, 19.5223, 19.3784, 19.4853, 19.3953, 19.2357, 19.3137,
     19.3851, 19.3618, 19.6900, 19.6160, 19.6633, 20.0182, 19.9717, 19.7833,
     20.0763, 20.2011, 20.0608, 19.9708, 20.1324, 20.1129, 20.5368, 20.5569,
     20.7167, 21.0976, 20.9307, 20.8256, 21.0943, 21.0431, 20.9920, 21.5515,
     21.2613, 21.3604, 21.5420, 21.4531, 21.0771, 21.4052, 21.3564, 21.1007,
     21.2950, 21.1574, 21.0376, 21.2753, 21.2059, 21.1188, 21.2206, 20.9697,
     20.8745, 20.9601, 20.9363, 20.7317, 21.1159, 21.2033, 21.0188, 21.4408,
     21.4661, 21.8231, 22.0248, 21.8895, 21.8599, 21.7575, 21.7900, 21.7236,
     21.9764, 21.7887, 21.6550, 21.8452, 21.6754, 21.8077, 22.0329, 22.2667,
     22.1886,
};

std::vector<double> time_axis(int n) {
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = i;
  return t;
}

const std::map<std::string, ReferenceFigure>& reference_table() {
  static const std::map<std::string, ReferenceFigure> table = [] {
    std::map<std::string, ReferenceFigure> t;
    auto add = [&](ReferenceFigure f) { t[f.id] = std::move(f); };
    add({"fig2", "u_max", "msb_pathmax", kUmax,
         {{"full", {1170.96, 856.80, 733.91, 673.59, 628.59}},
          {"zero", {1196.12, 886.72, 771.33, 714.83, 685.79}},
          {"diagonal", {1172.39, 861.89, 738.39, 681.08, 645.59}},
          {"full-nostab", {1093.04, 822.51, 717.75, 670.88, 626.47}}}});
    add({"fig3", "p_c", "msb_pathmax", kProb,
         {{"full", {888.82, 785.01, 719.88, 673.59, 634.42, 605.69}},
          {"zero", {919.83, 818.51, 759.87, 714.83, 678.72, 652.57}},
          {"diagonal", {895.41, 791.50, 727.93, 681.08, 642.21, 613.86}},
          {"full-nostab", {880.97, 779.99, 716.48, 670.88, 632.82, 603.50}}}});
    add({"fig4", "p_s", "msb_pathmax", kProb,
         {{"full", {793.34, 730.71, 693.80, 673.60, 653.49, 634.65}},
          {"zero", {819.07, 760.89, 729.20, 714.83, 702.14, 687.99}},
          {"diagonal", {798.06, 737.51, 702.14, 681.08, 659.73, 644.08}},
          {"full-nostab", {789.39, 727.51, 691.97, 670.88, 650.16, 633.00}}}});
    add({"fig5", "u_max", "mae", kUmax,
         {{"full", {2.3936, 4.5459, 6.4698, 7.7586, 11.0251}},
          {"zero", {2.4908, 4.8446, 6.9749, 8.3955, 11.5694}},
          {"diagonal", {2.4213, 4.6185, 6.6116, 7.9999, 11.4728}},
          {"full-nostab", {2.6247, 4.6599, 6.3931, 7.7063, 10.3377}}}});
    add({"fig6", "p_c", "mae", kProb,
         {{"full", {6.8338, 7.2608, 7.5127, 7.7586, 7.9415, 8.1141}},
          {"zero", {7.1902, 7.7157, 8.0640, 8.3955, 8.6736, 8.9403}},
          {"diagonal", {6.9936, 7.4424, 7.7248, 7.9999, 8.2307, 8.4505}},
          {"full-nostab", {6.8058, 7.2208, 7.4708, 7.7063, 7.8936, 8.0673}}}});
    add({"fig7", "p_s", "mae", kProb,
         {{"full", {7.6714, 7.7065, 7.7586, 7.7586, 7.6754, 7.6325}},
          {"zero", {8.0066, 8.1760, 8.3197, 8.3955, 8.3861, 8.4150}},
          {"diagonal", {7.8376, 7.9125, 7.9785, 7.9999, 7.9558, 7.9573}},
          {"full-nostab", {7.6331, 7.6639, 7.7095, 7.7063, 7.6294, 7.5832}}}});
    // Percentage reduction of solver time relative to the full variant.
    add({"fig8", "u_max", "solver_time_pct", kUmax,
         {{"zero", {64.358, 63.145, 63.002, 64.250, 64.527}},
          {"diagonal", {43.635, 41.832, 41.880, 41.635, 43.094}},
          {"full-nostab", {3.244, 0.342, 1.092, 1.285, -0.393}}}});
    add({"fig8-pc", "p_c", "solver_time_pct", kProb,
         {{"zero", {63.598, 63.198, 63.241, 64.250, 64.237, 63.563}},
          {"diagonal", {40.836, 40.795, 39.981, 41.635, 40.938, 38.925}},
          {"full-nostab", {-0.794, -1.117, -0.019, 1.285, -0.386, 0.251}}}});
    add({"fig8-ps", "p_s", "solver_time_pct", kProb,
         {{"zero", {63.286, 64.480, 63.410, 63.753, 62.934, 61.411}},
          {"diagonal", {39.957, 41.715, 40.765, 40.732, 40.273, 40.647}},
          {"full-nostab", {-0.522, 1.952, 0.252, -0.527, -1.551, 1.606}}}});
    add({"fig10", "p_gx", "msb_pathmax", kProb,
         {{"p_gc", {987.41, 877.09, 810.92, 734.01, 706.03, 666.03}},
          {"p_gs", {848.26, 792.49, 772.72, 734.01, 708.24, 699.55}}}});
    add({"fig11", "p_gx", "mae", kProb,
         {{"p_gc", {6.5050, 6.9580, 7.2756, 7.4517, 7.7213, 7.9138}},
          {"p_gs", {7.3976, 7.4075, 7.4877, 7.4517, 7.4667, 7.4705}}}});
    add({"fig12", "t", "mean_norm", time_axis(static_cast<int>(kFig12Stab.size())),
         {{"nostab-nr1", kFig12NoStab}, {"stab", kFig12Stab}}});
    return t;
  }();
  return table;
}

}  // namespace

std::vector<std::string> reference_figure_ids() {
  std::vector<std::string> ids;
  for (const auto& [id, f] : reference_table()) ids.push_back(id);
  return ids;
}

const ReferenceFigure& reference_figure(const std::string& id) {
  const auto& t = reference_table();
  auto it = t.find(id);
  if (it == t.end()) throw InvalidArgument("no reference data for figure '" + id + "'");
  return it->second;
}

}  // namespace netmpc
