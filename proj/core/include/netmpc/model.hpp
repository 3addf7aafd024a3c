#pragma once

#include <optional>
#include <string>
#include <vector>

#include "netmpc/linalg.hpp"

namespace netmpc {

struct SystemModel {
  MatrixXd A, B, C;
  MatrixXd Sigma_w;   // process noise covariance
  MatrixXd Sigma_v;   // measurement noise covariance
  MatrixXd Sigma_x0;  // initial state covariance
  MatrixXd Q, Q_N, R;
  double u_max = 1.0;
  int N = 1;    // optimization horizon
  int N_r = 1;  // recalculation interval

  int d() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  int q() const { return static_cast<int>(C.rows()); }
};

struct ValidationCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool ok() const;
  bool passed(const std::string& name) const;
  std::string summary() const;
};

// Throws InvalidArgument on inconsistent dimensions. Assumption violations are
// reported as failed checks instead.
ValidationReport validate_model(const SystemModel& model);

struct Decomposition {
  MatrixXd A_o, A_s;  // orthogonal and Schur-stable blocks
  MatrixXd B_o, B_s;
  MatrixXd basis;      // x = basis * [x_o; x_s]
  MatrixXd basis_inv;
  int kappa = 0;       // reachability index of (A_o, B_o); 0 when d_o = 0

  int d_o() const { return static_cast<int>(A_o.rows()); }
  int d_s() const { return static_cast<int>(A_s.rows()); }
  // Orthogonal-part coordinates of a full state vector.
  VectorXd orthogonal_part(const VectorXd& x) const;
};

// `block_dim` declares that A is already block-diagonal with the orthogonal
// block in the leading block_dim coordinates.
Decomposition decompose(const SystemModel& model,
                        std::optional<int> block_dim = std::nullopt);

// [A^{h-1}B ... AB B]
MatrixXd reachability_matrix(const MatrixXd& A, const MatrixXd& B, int h);
int reachability_index(const MatrixXd& A_o, const MatrixXd& B_o);

struct StackedMatrices {
  MatrixXd calA;   // (N+1)d x d
  MatrixXd calB;   // (N+1)d x Nm
  MatrixXd calD;   // (N+1)d x Nd
  MatrixXd calC;   // (N+1)q x (N+1)d
  MatrixXd calQ;   // (N+1)d x (N+1)d
  MatrixXd calR;   // Nm x Nm
  MatrixXd alpha;  // calB' calQ calB + calR
  MatrixXd Q_A;    // calA' calQ calB, d x Nm
  MatrixXd Q_D;    // calD' calQ calB, Nd x Nm
  Eigen::LLT<MatrixXd> alpha_llt;
};

StackedMatrices stack(const SystemModel& model);

}  // namespace netmpc
