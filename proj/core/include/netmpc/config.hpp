#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "netmpc/simulation.hpp"

namespace netmpc {

struct MomentsSettings {
  long samples = 100000;
  std::uint64_t seed = 1;
  std::string path = "generate";  // file path, or "generate"
};

// Experiment description read from a sectioned text file:
//
//   [system]     A, B, C, sigma_w, sigma_v, sigma_x0, orthogonal_dim
//   [cost]       Q, Q_N, R
//   [horizon]    N, N_r
//   [control]    u_max, saturator (sigmoid|clamp), psi_max, policy
//   [channels]   sensor, control (bernoulli|gilbert_elliott) and
//                <channel>_p, <channel>_p_gb, _p_bg, _p_good, _p_bad
//   [stability]  enabled, r, zeta (number or auto)
//   [simulation] T, paths, seed, threads
//   [moments]    samples, seed, path
//
// Matrices are written `RxC [a b; c d]`, `eye(n)` or `k*eye(n)`. Lines
// starting with '#' are comments. Unknown sections and keys are errors.
struct ExperimentConfig {
  std::string name;
  SimConfig sim;
  bool r_auto = true;
  bool zeta_auto = true;
  MomentsSettings moments;
};

ExperimentConfig parse_config(std::istream& is, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);
void write_config(std::ostream& os, const ExperimentConfig& cfg);

// Replaces auto r and zeta by their defaults for the configured model.
void resolve_stability(ExperimentConfig& cfg);

// Config for a named preset, with r and zeta marked auto.
ExperimentConfig preset_config(const std::string& name);

}  // namespace netmpc
