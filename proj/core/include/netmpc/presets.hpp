#pragma once

#include <string>
#include <vector>

#include "netmpc/simulation.hpp"

namespace netmpc {

// Four-state benchmark: 3x3 rotation block plus a stable mode, Bernoulli
// channels with p_s = p_c = 0.8, u_max = 5, N = 5, N_r = 3.
SimConfig four_dim_config();

// Same plant with Gilbert-Elliott channels (p_gb = 0.2, p_bg = 0.9, p_bad = 0,
// p_good = 0.8 on both channels).
SimConfig gilbert_elliott_config();

// Three-state orthogonal plant. With `stability` the controller uses
// N_r = kappa = 3 and drift rows; without it N_r = 1 and no drift rows.
SimConfig three_dim_config(bool stability);

struct Preset {
  std::string name;
  std::string description;
  SimConfig config;
};

std::vector<std::string> preset_names();
Preset find_preset(const std::string& name);  // throws InvalidArgument

// Reference values, for comparison reports only.
struct ReferenceCurve {
  std::string label;  // variant label or curve name
  std::vector<double> values;
};

struct ReferenceFigure {
  std::string id;
  std::string param;   // swept parameter, or "t" for time traces
  std::string metric;  // msb, mae, solver_time_pct, mean_norm
  std::vector<double> xs;
  std::vector<ReferenceCurve> curves;
};

std::vector<std::string> reference_figure_ids();
const ReferenceFigure& reference_figure(const std::string& id);  // throws InvalidArgument

}  // namespace netmpc
