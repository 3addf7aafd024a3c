#pragma once

#include <cstdint>
#include <string>

#include "netmpc/channels.hpp"
#include "netmpc/model.hpp"
#include "netmpc/qp.hpp"

// Randomized property suites shared by the unit tests and the acceptance run.
namespace netmpc::properties {

struct Outcome {
  bool passed = true;
  std::string detail;
};

// Random matrices and models used by the suites.
MatrixXd random_matrix(RngStream& rng, int r, int c);
MatrixXd random_spd(RngStream& rng, int n, double floor = 0.1);
SystemModel random_model(RngStream& rng, int d, int m, int q, int N, int N_r,
                         double radius = 0.95);
// Strictly convex QP whose rows are satisfied by a random point.
QpProblem random_qp(RngStream& rng, int n, int k);

// Input-bound rows: feasible parameters never exceed u_max under adversarial
// saturated innovations; a row violated by delta reaches u_max + delta.
Outcome input_bound_suite(int instances, std::uint64_t seed);

// Stacked dynamics/costs and the stacked filter-error/innovation identities
// against step-by-step simulation.
Outcome stacked_dynamics_suite(int instances, std::uint64_t seed);
Outcome innovation_stack_suite(int instances, std::uint64_t seed);

// Assembled quadratic against a fresh-sample Monte-Carlo cost difference.
Outcome objective_fidelity_suite(int instances, long mc_samples, std::uint64_t seed);

// ADMM solver against active-set enumeration.
Outcome qp_oracle_suite(int instances, std::uint64_t seed);

// Remote estimator against exact Gaussian conditioning (all dropout patterns
// of a 3-step scalar problem) and the zero-mean estimator-noise property.
Outcome estimator_conditioning_check();
Outcome estimator_noise_check(long samples, std::uint64_t seed);

// Conditional drift of z_t = (A_o')^t x~_o under the fallback policy.
struct DriftReport {
  Outcome outcome;
  long triggered = 0;
  double worst_margin_se = 0.0;  // (mean drift + zeta p_c) / SE, max over cases
  double max_step_half = 0.0, max_step_full = 0.0;
};
DriftReport fallback_drift_suite(int paths, double p_c, std::uint64_t seed);

// Random states through assemble/solve/fallback with stability rows active.
struct FeasibilityReport {
  Outcome outcome;
  long states = 0;
  long fallbacks = 0;
  double worst_bound_margin = 0.0;
  double worst_stability_margin = 0.0;
};
FeasibilityReport recursive_feasibility_suite(long states, long moment_samples,
                                              std::uint64_t seed);

}  // namespace netmpc::properties
