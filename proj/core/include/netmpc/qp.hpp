#pragma once

#include <string>

#include "netmpc/linalg.hpp"

namespace netmpc {

// min 1/2 x'Px + q'x  s.t.  l <= Ax <= u  (use +-infinity for one-sided rows,
// l = u for equalities).
struct QpProblem {
  MatrixXd P;
  VectorXd q;
  MatrixXd A;
  VectorXd l, u;

  int n() const { return static_cast<int>(q.size()); }
  int k() const { return static_cast<int>(l.size()); }
  void validate() const;  // throws InvalidArgument
  double objective(const VectorXd& x) const { return 0.5 * x.dot(P * x) + q.dot(x); }
};

enum class QpStatus { optimal, max_iter, primal_infeasible_certificate };
std::string to_string(QpStatus s);

struct QpSettings {
  double eps_abs = 1e-6;
  double eps_rel = 1e-6;
  double eps_pinf = 1e-6;
  int max_iter = 4000;
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;  // over-relaxation
  int scaling_iters = 10;
  int check_every = 10;
  bool adaptive_rho = true;  // at most one update per solve
  bool polish = true;
  double polish_delta = 1e-6;
  int polish_refine_iters = 5;
  int polish_active_rounds = 3;  // active-set growth rounds when the reduced solve is infeasible
};

struct QpSolution {
  VectorXd x, y, z;  // primal, dual (y > 0 on active upper bounds), Ax estimate
  QpStatus status = QpStatus::max_iter;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool polished = false;
  double solve_time = 0.0;  // seconds, monotonic clock
};

QpSolution solve(const QpProblem& p, const QpSettings& opts = {});

struct KktReport {
  double stationarity = 0.0;      // ||Px + q + A'y||_inf
  double primal_feasibility = 0.0;  // distance of Ax to [l, u], inf-norm
  double complementarity = 0.0;   // max_i |y_i| * slack of the bound it acts on
  double dual_sign = 0.0;         // worst violation of y sign pattern vs. bounds
  double max() const;
};

KktReport check_kkt(const QpProblem& p, const VectorXd& x, const VectorXd& y);

}  // namespace netmpc
