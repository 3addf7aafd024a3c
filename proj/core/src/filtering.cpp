#include "netmpc/filtering.hpp"

#include <cmath>

#include "netmpc/error.hpp"

namespace netmpc {
namespace {

// Gain and filtered covariance from a prediction covariance.
void update_from_prediction(const MatrixXd& P_pred, const SystemModel& model, MatrixXd& K,
                            MatrixXd& P_filt) {
  const MatrixXd S = symmetrize(model.C * P_pred * model.C.transpose() + model.Sigma_v);
  Eigen::LDLT<MatrixXd> ldlt(S);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff()))
    throw InvalidArgument("innovation covariance is numerically singular");
  K = ldlt.solve(model.C * P_pred.transpose()).transpose();
  P_filt = symmetrize(P_pred - K * model.C * P_pred);
}

}  // namespace

KalmanStep kf_predict_update(const KalmanState& state, const VectorXd& u_applied,
                             const VectorXd& y_next, const SystemModel& model) {
  const VectorXd x_pred = model.A * state.x_hat + model.B * u_applied;
  const MatrixXd P_pred = model.A * state.P * model.A.transpose() + model.Sigma_w;
  KalmanStep out;
  update_from_prediction(P_pred, model, out.gain, out.state.P);
  out.state.x_hat = x_pred + out.gain * (y_next - model.C * x_pred);
  out.innovation = y_next - model.C * out.state.x_hat;
  return out;
}

KalmanStep kf_initialize(const SystemModel& model, const VectorXd& y0) {
  KalmanStep out;
  update_from_prediction(model.Sigma_x0, model, out.gain, out.state.P);
  out.state.x_hat = out.gain * y0;
  out.innovation = y0 - model.C * out.state.x_hat;
  return out;
}

SteadyStateFilter steady_state_gain(const SystemModel& model, double rel_tol,
                                    int max_iter) {
  SteadyStateFilter out;
  MatrixXd P = symmetrize(model.A * model.Sigma_x0 * model.A.transpose() + model.Sigma_w);
  MatrixXd K, Pf;
  for (int it = 1; it <= max_iter; ++it) {
    update_from_prediction(P, model, K, Pf);
    const MatrixXd next = symmetrize(model.A * Pf * model.A.transpose() + model.Sigma_w);
    const double change = (next - P).norm();
    P = next;
    if (change <= rel_tol * std::max(1.0, P.norm())) {
      out.iterations = it;
      update_from_prediction(P, model, out.K, out.P_filt);
      out.P_pred = P;
      return out;
    }
  }
  throw Error("steady-state Riccati iteration did not converge");
}

InnovationStack build_innovation_stack(const std::vector<MatrixXd>& gains,
                                       const SystemModel& model) {
  const int d = model.d(), q = model.q();
  if (gains.empty()) throw InvalidArgument("innovation stack needs N+1 gains");
  const int N = static_cast<int>(gains.size()) - 1;
  for (const auto& K : gains)
    if (K.rows() != d || K.cols() != q) throw InvalidArgument("gain has wrong shape");

  const MatrixXd I = MatrixXd::Identity(d, d);
  std::vector<MatrixXd> phi(N), gamma(N);
  for (int k = 0; k < N; ++k) {
    gamma[k] = I - gains[k] * model.C;
    phi[k] = gamma[k] * model.A;
  }

  InnovationStack s;
  s.N = N;
  s.F.resize((N + 1) * d, d);
  s.O = MatrixXd::Zero((N + 1) * d, N * d);
  s.H = MatrixXd::Zero((N + 1) * d, (N + 1) * q);
  s.F.topRows(d) = I;
  for (int k = 1; k <= N; ++k) s.F.middleRows(k * d, d) = phi[k - 1] * s.F.middleRows((k - 1) * d, d);

  // Column j of O (noise w_{t+j}) and of H (noise v_{t+j+1}) start at row
  // block j+1 and are propagated by the phi's below.
  for (int j = 0; j < N; ++j) {
    MatrixXd o = gamma[j];
    MatrixXd h = gains[j];
    for (int k = j + 1; k <= N; ++k) {
      s.O.block(k * d, j * d, d, d) = o;
      s.H.block(k * d, (j + 1) * q, d, q) = h;
      if (k < N) {
        o = phi[k] * o;
        h = phi[k] * h;
      }
    }
  }
  return s;
}

}  // namespace netmpc
