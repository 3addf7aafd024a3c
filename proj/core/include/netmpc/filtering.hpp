#pragma once

#include <vector>

#include "netmpc/model.hpp"

namespace netmpc {

struct KalmanState {
  VectorXd x_hat;  // filtered mean x_{t|t}
  MatrixXd P;      // filtered covariance P_{t|t}
};

struct KalmanStep {
  KalmanState state;
  VectorXd innovation;  // y - C x_hat of the updated state
  MatrixXd gain;        // gain used for this update
};

// One predict/update cycle driven by the applied input and the next output.
KalmanStep kf_predict_update(const KalmanState& state, const VectorXd& u_applied,
                             const VectorXd& y_next, const SystemModel& model);

// Filter start from x_{0|-1} = 0, P_{0|-1} = Sigma_x0 and the first output.
KalmanStep kf_initialize(const SystemModel& model, const VectorXd& y0);

struct SteadyStateFilter {
  MatrixXd K;       // steady gain, d x q
  MatrixXd P_pred;  // steady prediction covariance
  MatrixXd P_filt;  // steady filtered covariance
  int iterations = 0;
};

SteadyStateFilter steady_state_gain(const SystemModel& model, double rel_tol = 1e-10,
                                    int max_iter = 100000);

// Error/innovation propagation over one horizon, with
// phi_k = (I - K_k C) A and Gamma_k = I - K_k C:
//   e_{t:N+1} = F e_t + O w_{t:N} - H v_{t:N+1}
//   I_{t:N+1} = calC F e_t + calC O w_{t:N} + (I - calC H) v_{t:N+1}
struct InnovationStack {
  MatrixXd F;  // (N+1)d x d
  MatrixXd O;  // (N+1)d x Nd
  MatrixXd H;  // (N+1)d x (N+1)q
  int N = 0;
};

// gains[k] is the gain that maps y_{t+k+1} into the update at t+k+1; N+1
// gains are expected (the last closes the window and does not enter F, O, H).
InnovationStack build_innovation_stack(const std::vector<MatrixXd>& gains,
                                       const SystemModel& model);

}  // namespace netmpc
