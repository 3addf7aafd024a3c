#include "netmpc/qp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/SparseCore>

#include "netmpc/error.hpp"

namespace netmpc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kInfBound = 1e20;
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kRhoEqScale = 1e3;


double inf_norm(const VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

VectorXd project(const VectorXd& v, const VectorXd& l, const VectorXd& u) {
  return v.cwiseMax(l).cwiseMin(u);
}

// Ruiz-equilibrated copy of the problem: P~ = c D P D, q~ = c D q, A~ = E A D.
struct Scaled {
  MatrixXd P, A;
  Eigen::SparseMatrix<double> As;  // sparse copy of A for the iteration products
  VectorXd q, l, u;
  VectorXd D, E;
  double c = 1.0;
};

Scaled scale_problem(const QpProblem& p, int iters) {
  Scaled s;
  const int n = p.n(), k = p.k();
  // Equilibration works on sparse copies; both matrices are mostly zeros.
  Eigen::SparseMatrix<double> Ps = p.P.sparseView();
  s.As = p.A.sparseView();
  s.q = p.q;
  s.D = VectorXd::Ones(n);
  s.E = VectorXd::Ones(k);
  auto limit = [](double v) {
    if (v < 1e-4) return 1.0;
    return std::clamp(v, 1e-4, 1e4);
  };
  VectorXd cmax(n), rmax(k);
  for (int it = 0; it < iters; ++it) {
    cmax.setZero();
    rmax.setZero();
    for (int j = 0; j < n; ++j) {
      for (Eigen::SparseMatrix<double>::InnerIterator e(Ps, j); e; ++e)
        cmax(j) = std::max(cmax(j), std::abs(e.value()));
      for (Eigen::SparseMatrix<double>::InnerIterator e(s.As, j); e; ++e) {
        cmax(j) = std::max(cmax(j), std::abs(e.value()));
        rmax(e.row()) = std::max(rmax(e.row()), std::abs(e.value()));
      }
    }
    VectorXd dD(n), dE(k);
    for (int j = 0; j < n; ++j) dD(j) = 1.0 / std::sqrt(limit(cmax(j)));
    for (int i = 0; i < k; ++i) dE(i) = 1.0 / std::sqrt(limit(rmax(i)));
    for (int j = 0; j < n; ++j) {
      for (Eigen::SparseMatrix<double>::InnerIterator e(Ps, j); e; ++e)
        e.valueRef() *= dD(e.row()) * dD(j);
      for (Eigen::SparseMatrix<double>::InnerIterator e(s.As, j); e; ++e)
        e.valueRef() *= dE(e.row()) * dD(j);
    }
    s.q = dD.cwiseProduct(s.q);
    s.D = s.D.cwiseProduct(dD);
    s.E = s.E.cwiseProduct(dE);
  }
  s.P = MatrixXd(Ps);
  s.A = MatrixXd(s.As);
  double pmean = 0.0;
  for (int j = 0; j < n; ++j) pmean += s.P.col(j).cwiseAbs().maxCoeff();
  pmean = n > 0 ? pmean / n : 0.0;
  const double cs = std::max(pmean, inf_norm(s.q));
  s.c = cs > 1e-4 ? std::min(1.0 / cs, 1e4) : 1.0;
  s.P *= s.c;
  s.q *= s.c;
  s.l.resize(k);
  s.u.resize(k);
  for (int i = 0; i < k; ++i) {
    s.l(i) = p.l(i) <= -kInfBound ? -kInf : p.l(i) * s.E(i);
    s.u(i) = p.u(i) >= kInfBound ? kInf : p.u(i) * s.E(i);
  }
  return s;
}

struct Residuals {
  double prim, dual, eps_prim, eps_dual;
};

// Residuals in original units from scaled iterates.
Residuals residuals(const Scaled& s, const VectorXd& x, const VectorXd& z, const VectorXd& y,
                    const QpSettings& o) {
  const VectorXd Ax = s.As * x;
  const VectorXd Px = s.P * x;
  const VectorXd Aty = s.As.transpose() * y;
  const VectorXd Einv = s.E.cwiseInverse();
  const VectorXd Dinv = s.D.cwiseInverse();
  Residuals r;
  r.prim = inf_norm(Einv.cwiseProduct(Ax - z));
  r.dual = inf_norm(Dinv.cwiseProduct(Px + s.q + Aty)) / s.c;
  r.eps_prim = o.eps_abs + o.eps_rel * std::max(inf_norm(Einv.cwiseProduct(Ax)),
                                                inf_norm(Einv.cwiseProduct(z)));
  r.eps_dual = o.eps_abs + o.eps_rel / s.c *
                               std::max({inf_norm(Dinv.cwiseProduct(Px)),
                                         inf_norm(Dinv.cwiseProduct(Aty)),
                                         inf_norm(Dinv.cwiseProduct(s.q))});
  return r;
}

VectorXd rho_vector(const Scaled& s, double rho) {
  VectorXd r(s.l.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (std::isinf(s.l(i)) && std::isinf(s.u(i)))
      r(i) = kRhoMin;
    else if (s.u(i) - s.l(i) < 1e-12)
      r(i) = kRhoEqScale * rho;
    else
      r(i) = rho;
  }
  return r;
}

Eigen::LLT<MatrixXd> factor(const Scaled& s, const VectorXd& rho, double sigma) {
  MatrixXd K = s.P;
  K.diagonal().array() += sigma;
  const Eigen::SparseMatrix<double> AtRA = s.As.transpose() * rho.asDiagonal() * s.As;
  K += MatrixXd(AtRA);
  return Eigen::LLT<MatrixXd>(K);
}

// Active-set refinement of an ADMM point (scaled space). Rows the reduced
// solve violates are added to the active set and the solve is repeated.
bool polish(const Scaled& s, const QpSettings& o, VectorXd& x, VectorXd& z, VectorXd& y) {
  const int n = static_cast<int>(s.q.size()), k = static_cast<int>(s.l.size());
  std::vector<int> side(k, 2);  // 2 inactive, -1 lower, +1 upper, 0 equality
  for (int i = 0; i < k; ++i) {
    const bool eq = s.u(i) - s.l(i) < 1e-12;
    const bool low = std::isfinite(s.l(i)) && z(i) - s.l(i) < -y(i);
    const bool upp = std::isfinite(s.u(i)) && s.u(i) - z(i) < y(i);
    if (eq && (low || upp))
      side[i] = 0;
    else if (low)
      side[i] = -1;
    else if (upp)
      side[i] = 1;
  }
  const Residuals before = residuals(s, x, z, y, o);
  for (int round = 0; round <= o.polish_active_rounds; ++round) {
    std::vector<int> rows;
    for (int i = 0; i < k; ++i)
      if (side[i] != 2) rows.push_back(i);
    const int na = static_cast<int>(rows.size());
    MatrixXd Ad(na, n);
    VectorXd b(na);
    for (int i = 0; i < na; ++i) {
      Ad.row(i) = s.A.row(rows[i]);
      b(i) = side[rows[i]] > 0 ? s.u(rows[i]) : s.l(rows[i]);
    }
    const Eigen::SparseMatrix<double> Ar = Ad.sparseView();
    const double delta = o.polish_delta;
    const Eigen::SparseMatrix<double> AtA = Ar.transpose() * Ar;
    MatrixXd K = s.P + MatrixXd(AtA) / delta;
    K.diagonal().array() += delta;
    Eigen::LLT<MatrixXd> llt(K);
    if (llt.info() != Eigen::Success) return false;

    // Solve the regularized system, then refine against the exact KKT system.
    auto reg_solve = [&](const VectorXd& r1, const VectorXd& r2, VectorXd& dx, VectorXd& dy) {
      dx = llt.solve(r1 + Ar.transpose() * r2 / delta);
      dy = (Ar * dx - r2) / delta;
    };
    VectorXd xp, yp;
    reg_solve(-s.q, b, xp, yp);
    for (int it = 0; it < o.polish_refine_iters; ++it) {
      const VectorXd r1 = -s.q - s.P * xp - Ar.transpose() * yp;
      const VectorXd r2 = b - Ar * xp;
      VectorXd dx, dy;
      reg_solve(r1, r2, dx, dy);
      xp += dx;
      yp += dy;
    }
    if (!xp.allFinite() || !yp.allFinite()) return false;

    // Violated inactive rows join the active set for the next round.
    const VectorXd Ax = s.As * xp;
    bool grew = false;
    for (int i = 0; i < k; ++i) {
      if (side[i] != 2) continue;
      const double tol = o.eps_abs * s.E(i);
      if (Ax(i) > s.u(i) + tol) {
        side[i] = 1;
        grew = true;
      } else if (Ax(i) < s.l(i) - tol) {
        side[i] = -1;
        grew = true;
      }
    }
    if (grew) continue;

    // Multipliers must carry the sign of the bound they act on.
    const double ytol = 1e-9 * std::max(1.0, inf_norm(yp));
    for (int i = 0; i < na; ++i) {
      const int sd = side[rows[i]];
      if (sd < 0 && yp(i) > ytol) return false;
      if (sd > 0 && yp(i) < -ytol) return false;
    }
    VectorXd yfull = VectorXd::Zero(k);
    for (int i = 0; i < na; ++i) yfull(rows[i]) = yp(i);
    const VectorXd zp = project(Ax, s.l, s.u);
    const Residuals after = residuals(s, xp, zp, yfull, o);
    const bool ok = after.prim <= std::max(before.prim, after.eps_prim) &&
                    after.dual <= std::max(before.dual, after.eps_dual);
    if (!ok) return false;
    x = xp;
    z = zp;
    y = yfull;
    return true;
  }
  return false;
}

}  // namespace

void QpProblem::validate() const {
  const auto nn = q.size();
  if (P.rows() != nn || P.cols() != nn) throw InvalidArgument("QP: P must be n x n");
  if (A.cols() != nn && A.rows() > 0) throw InvalidArgument("QP: A must have n columns");
  if (l.size() != A.rows() || u.size() != A.rows())
    throw InvalidArgument("QP: bounds must match the rows of A");
  for (Eigen::Index i = 0; i < l.size(); ++i)
    if (!(l(i) <= u(i))) throw InvalidArgument("QP: lower bound exceeds upper bound");
  if (!is_symmetric(P, 1e-9)) throw InvalidArgument("QP: P must be symmetric");
}

std::string to_string(QpStatus s) {
  switch (s) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::max_iter: return "max_iter";
    case QpStatus::primal_infeasible_certificate: return "primal_infeasible_certificate";
  }
  return "unknown";
}

QpSolution solve(const QpProblem& p, const QpSettings& o) {
  const auto t0 = std::chrono::steady_clock::now();
  p.validate();
  const int n = p.n(), k = p.k();
  QpProblem sym = p;
  sym.P = symmetrize(p.P);
  Scaled s = scale_problem(sym, o.scaling_iters);

  double rho = o.rho;
  VectorXd rho_vec = rho_vector(s, rho);
  Eigen::LLT<MatrixXd> llt = factor(s, rho_vec, o.sigma);

  VectorXd x = VectorXd::Zero(n), z = VectorXd::Zero(k), y = VectorXd::Zero(k);
  z = project(z, s.l, s.u);
  VectorXd y_prev = y;
  bool rho_updated = !o.adaptive_rho;
  VectorXd xt(n), zt(k), rhs(n);

  QpSolution sol;
  sol.status = QpStatus::max_iter;
  int it = 0;
  for (it = 1; it <= o.max_iter; ++it) {
    rhs = o.sigma * x - s.q;
    rhs.noalias() += s.As.transpose() * (rho_vec.cwiseProduct(z) - y);
    xt = llt.solve(rhs);
    zt.noalias() = s.As * xt;
    x = o.alpha * xt + (1.0 - o.alpha) * x;
    const VectorXd zrel = o.alpha * zt + (1.0 - o.alpha) * z;
    const VectorXd znew = project(zrel + y.cwiseQuotient(rho_vec), s.l, s.u);
    y_prev = y;
    y += rho_vec.cwiseProduct(zrel - znew);
    z = znew;

    if (it % o.check_every != 0 && it != o.max_iter) continue;
    const Residuals r = residuals(s, x, z, y, o);
    if (r.prim <= r.eps_prim && r.dual <= r.eps_dual) {
      sol.status = QpStatus::optimal;
      break;
    }
    // Primal infeasibility certificate from the dual increment.
    const VectorXd dy = y - y_prev;
    const double ndy = inf_norm(s.E.cwiseProduct(dy));
    if (ndy > 1e-12) {
      const double lhs = inf_norm(s.D.cwiseInverse().cwiseProduct(s.As.transpose() * dy));
      double sup = 0.0;
      for (int i = 0; i < k; ++i) {
        if (dy(i) > 0) sup += std::isinf(s.u(i)) ? kInf : s.u(i) * dy(i);
        if (dy(i) < 0) sup += std::isinf(s.l(i)) ? kInf : s.l(i) * dy(i);
      }
      if (lhs <= o.eps_pinf * ndy && sup < -o.eps_pinf * ndy) {
        sol.status = QpStatus::primal_infeasible_certificate;
        break;
      }
    }
    if (!rho_updated) {
      const VectorXd Ax = s.As * x;
      const double pn = std::max(inf_norm(Ax), inf_norm(z));
      const VectorXd Px = s.P * x;
      const VectorXd Aty = s.As.transpose() * y;
      const double dn = std::max({inf_norm(Px), inf_norm(Aty), inf_norm(s.q)});
      const double pr = inf_norm(Ax - z) / std::max(pn, 1e-10);
      const double dr = inf_norm(Px + s.q + Aty) / std::max(dn, 1e-10);
      const double cand = std::clamp(rho * std::sqrt(pr / std::max(dr, 1e-10)), kRhoMin, kRhoMax);
      if (cand > 10.0 * rho || cand < 0.1 * rho) {
        rho = cand;
        rho_vec = rho_vector(s, rho);
        llt = factor(s, rho_vec, o.sigma);
        rho_updated = true;
      }
    }
  }
  sol.iterations = std::min(it, o.max_iter);

  if (sol.status != QpStatus::primal_infeasible_certificate && o.polish)
    sol.polished = polish(s, o, x, z, y);

  const Residuals r = residuals(s, x, z, y, o);
  // A slow ADMM tail is often finished by the active-set polish.
  if (sol.status == QpStatus::max_iter && sol.polished && r.prim <= r.eps_prim &&
      r.dual <= r.eps_dual)
    sol.status = QpStatus::optimal;
  sol.primal_residual = r.prim;
  sol.dual_residual = r.dual;
  sol.x = s.D.cwiseProduct(x);
  sol.y = s.E.cwiseProduct(y) / s.c;
  sol.z = s.E.cwiseInverse().cwiseProduct(z);
  sol.solve_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

double KktReport::max() const {
  return std::max({stationarity, primal_feasibility, complementarity, dual_sign});
}

KktReport check_kkt(const QpProblem& p, const VectorXd& x, const VectorXd& y) {
  KktReport rep;
  const VectorXd Ax = p.A * x;
  rep.stationarity = inf_norm(p.P * x + p.q + p.A.transpose() * y);
  rep.primal_feasibility = inf_norm(Ax - project(Ax, p.l, p.u));
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double yp = std::max(y(i), 0.0), ym = std::max(-y(i), 0.0);
    if (yp > 0) {
      if (p.u(i) >= kInfBound)
        rep.dual_sign = std::max(rep.dual_sign, yp);
      else
        rep.complementarity = std::max(rep.complementarity, yp * std::abs(p.u(i) - Ax(i)));
    }
    if (ym > 0) {
      if (p.l(i) <= -kInfBound)
        rep.dual_sign = std::max(rep.dual_sign, ym);
      else
        rep.complementarity = std::max(rep.complementarity, ym * std::abs(Ax(i) - p.l(i)));
    }
  }
  return rep;
}

}  // namespace netmpc
