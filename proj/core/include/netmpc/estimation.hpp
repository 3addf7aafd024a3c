#pragma once

#include <optional>
#include <vector>

#include "netmpc/model.hpp"

namespace netmpc {

struct SensorPacket {
  VectorXd x_hat;  // filtered estimate at the sensor
  VectorXd y;      // raw measurement
};

struct EstimatorState {
  VectorXd x_tilde;              // E[x_t | received data]
  VectorXd last_u_applied;       // u^a_{t-1}, known through acknowledgements
  VectorXd received_innovation;  // s_t (y_t - C x_hat_t)
  int s = 0;
};

// x_tilde_{-1} = 0 and u^a_{-1} = 0.
EstimatorState estimator_init(const SystemModel& model);

// Packet must be present exactly when s == 1.
EstimatorState remote_update(const EstimatorState& state, int s,
                             const std::optional<SensorPacket>& packet,
                             const VectorXd& u_prev_applied, const SystemModel& model);

// max_t of the path mean of ||x_hat_t - x_tilde_t||^2. Each inner vector is
// one path's per-step squared error trace.
double estimation_error_diag(const std::vector<std::vector<double>>& error_sq_traces);

}  // namespace netmpc
