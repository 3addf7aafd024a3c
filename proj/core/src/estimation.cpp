#include "netmpc/estimation.hpp"

#include <algorithm>

#include "netmpc/error.hpp"

namespace netmpc {

EstimatorState estimator_init(const SystemModel& model) {
  EstimatorState st;
  st.x_tilde = VectorXd::Zero(model.d());
  st.last_u_applied = VectorXd::Zero(model.m());
  st.received_innovation = VectorXd::Zero(model.q());
  st.s = 0;
  return st;
}

EstimatorState remote_update(const EstimatorState& state, int s,
                             const std::optional<SensorPacket>& packet,
                             const VectorXd& u_prev_applied, const SystemModel& model) {
  if (s != 0 && s != 1) throw InvalidArgument("sensor bit must be 0 or 1");
  if ((s == 1) != packet.has_value())
    throw InvalidArgument("sensor packet must be present exactly when s = 1");
  EstimatorState next;
  next.s = s;
  next.last_u_applied = u_prev_applied;
  if (s == 1) {
    next.x_tilde = packet->x_hat;
    next.received_innovation = packet->y - model.C * packet->x_hat;
  } else {
    next.x_tilde = model.A * state.x_tilde + model.B * u_prev_applied;
    next.received_innovation = VectorXd::Zero(model.q());
  }
  return next;
}

double estimation_error_diag(const std::vector<std::vector<double>>& traces) {
  if (traces.empty()) return 0.0;
  std::size_t T = traces.front().size();
  for (const auto& tr : traces) T = std::min(T, tr.size());
  double best = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    double sum = 0.0;
    for (const auto& tr : traces) sum += tr[t];
    best = std::max(best, sum / static_cast<double>(traces.size()));
  }
  return best;
}

}  // namespace netmpc
