#include "netmpc/policy.hpp"

#include <cmath>

#include "netmpc/error.hpp"

namespace netmpc {

std::string to_string(PolicyVariant v) {
  switch (v) {
    case PolicyVariant::full: return "full";
    case PolicyVariant::zero: return "zero";
    case PolicyVariant::diagonal: return "diagonal";
    case PolicyVariant::fallback: return "fallback";
  }
  return "unknown";
}

PolicyVariant parse_variant(const std::string& name) {
  if (name == "full") return PolicyVariant::full;
  if (name == "zero") return PolicyVariant::zero;
  if (name == "diagonal") return PolicyVariant::diagonal;
  if (name == "fallback") return PolicyVariant::fallback;
  throw InvalidArgument("unknown policy variant '" + name +
                        "' (expected full, zero, diagonal or fallback)");
}

double sigmoid(double xi) { return std::tanh(0.5 * xi); }

double SaturatorSpec::apply(double v) const {
  if (kind == Kind::sigmoid) return psi_max * sigmoid(v);
  return std::clamp(v, -psi_max, psi_max);
}

VectorXd SaturatorSpec::apply(const VectorXd& v) const {
  return v.unaryExpr([this](double x) { return apply(x); });
}

PolicyParams PolicyParams::zeros(int N, int m, int q, PolicyVariant variant) {
  PolicyParams p;
  p.N = N;
  p.m = m;
  p.q = q;
  p.variant = variant;
  p.eta = VectorXd::Zero(N * m);
  p.Theta = MatrixXd::Zero(N * m, N * q);
  return p;
}

bool theta_block_free(PolicyVariant v, int l, int i) {
  switch (v) {
    case PolicyVariant::full: return i <= l;
    case PolicyVariant::diagonal: return i == l;
    default: return false;
  }
}

VectorXd feasibility_rows(const PolicyParams& p, const SaturatorSpec& sat, double u_max) {
  VectorXd margin(p.eta.size());
  for (Eigen::Index i = 0; i < p.eta.size(); ++i)
    margin(i) = u_max - std::abs(p.eta(i)) - p.Theta.row(i).cwiseAbs().sum() * sat.psi_max;
  return margin;
}

VectorXd evaluate(const PolicyParams& p, const VectorXd& innovations,
                  const SaturatorSpec& sat, double u_max) {
  if (innovations.size() != p.Theta.cols())
    throw InvalidArgument("innovation stack has wrong length");
  if (feasibility_rows(p, sat, u_max).minCoeff() < -1e-7 * std::max(1.0, u_max))
    throw InvalidArgument("policy parameters violate the input bound rows");
  return p.eta + p.Theta * sat.apply(innovations);
}

VectorXd evaluate_step(const PolicyParams& p, int l, const std::vector<VectorXd>& received,
                       const SaturatorSpec& sat) {
  if (l < 0 || l >= p.N) throw InvalidArgument("window step out of range");
  if (static_cast<int>(received.size()) < l + 1)
    throw InvalidArgument("not enough received innovations for this step");
  VectorXd u = p.eta.segment(l * p.m, p.m);
  for (int i = 0; i <= l; ++i) {
    const auto blk = p.Theta.block(l * p.m, i * p.q, p.m, p.q);
    if (!blk.isZero(0.0)) u += blk * sat.apply(received[i]);
  }
  return u;
}

ProtocolOutput protocol_step(const ActuatorBuffer& buffer, int nu, int l, int N_r,
                             const VectorXd& u_transmitted,
                             const std::vector<VectorXd>& eta_tail) {
  if (l < 0 || l >= N_r) throw InvalidArgument("protocol step beyond the window");
  ProtocolOutput out{VectorXd(), buffer};
  if (nu == 1) {
    out.u_applied = u_transmitted;
    if (buffer.empty()) {
      out.buffer.eta_blocks = eta_tail;
      out.buffer.start = l + 1;
    }
    out.buffer.g = 1;
  } else {
    if (!buffer.empty() && l >= buffer.start &&
        l - buffer.start < static_cast<int>(buffer.eta_blocks.size())) {
      out.u_applied = buffer.eta_blocks[l - buffer.start];
    } else {
      out.u_applied = VectorXd::Zero(u_transmitted.size());
    }
  }
  return out;
}

ProtocolMatrices build_G_S(const std::vector<int>& nu, int N_r, int N, int m) {
  if (static_cast<int>(nu.size()) < N_r)
    throw InvalidArgument("need one channel draw per window step");
  ProtocolMatrices pm;
  pm.g_diag = VectorXd::Ones(N * m);
  pm.s_diag = VectorXd::Ones(N * m);
  int g = 0;
  for (int l = 0; l < N_r; ++l) {
    g = g + (1 - g) * nu[l];
    pm.g_diag.segment(l * m, m).setConstant(g);
    pm.s_diag.segment(l * m, m).setConstant(nu[l]);
  }
  return pm;
}

VectorXd sat_inf(const VectorXd& z, double r, double zeta) {
  return z.unaryExpr([r, zeta](double v) {
    if (v > r) return zeta;
    if (v < -r) return -zeta;
    return v * zeta / r;
  });
}

double max_zeta(const Decomposition& dec, double u_max) {
  if (dec.d_o() == 0) return 0.0;
  const MatrixXd Rp = pseudo_inverse(reachability_matrix(dec.A_o, dec.B_o, dec.kappa));
  Eigen::JacobiSVD<MatrixXd> svd(Rp);
  return u_max / (std::sqrt(static_cast<double>(dec.d_o())) * svd.singularValues()(0));
}

OrthogonalPowers::OrthogonalPowers(MatrixXd A_o, int reortho_every)
    : A_(std::move(A_o)), current_(MatrixXd::Identity(A_.rows(), A_.cols())),
      reortho_every_(reortho_every) {}

const MatrixXd& OrthogonalPowers::power(long t) {
  if (t < t_) {
    t_ = 0;
    current_.setIdentity();
  }
  while (t_ < t) {
    current_ = A_ * current_;
    ++t_;
    if (reortho_every_ > 0 && t_ % reortho_every_ == 0 && current_.size() > 0) {
      Eigen::HouseholderQR<MatrixXd> qr(current_);
      MatrixXd Qm = qr.householderQ();
      // Fix column signs so Qm stays close to current_.
      const MatrixXd Rm = qr.matrixQR().triangularView<Eigen::Upper>();
      for (Eigen::Index j = 0; j < Qm.cols(); ++j)
        if (Rm(j, j) < 0) Qm.col(j) *= -1.0;
      current_ = Qm;
    }
  }
  return current_;
}

VectorXd fallback_saturation_policy(const VectorXd& x_tilde_o, const MatrixXd& Ao_t,
                                    const MatrixXd& Ao_t_kappa, const Decomposition& dec,
                                    double r, double zeta, double u_max) {
  if (dec.d_o() == 0) throw InvalidArgument("fallback policy needs an orthogonal part");
  const double zmax = max_zeta(dec, u_max);
  if (!(zeta > 0.0) || zeta > zmax * (1.0 + 1e-12))
    throw InvalidArgument("zeta outside (0, u_max / (sqrt(d_o) sigma_1(R^+))]");
  if (!(r > 0.0)) throw InvalidArgument("r must be positive");
  const MatrixXd Rp = pseudo_inverse(reachability_matrix(dec.A_o, dec.B_o, dec.kappa));
  const VectorXd z = Ao_t.transpose() * x_tilde_o;
  return -Rp * (Ao_t_kappa * sat_inf(z, r, zeta));
}

VectorXd fallback_saturation_policy(const VectorXd& x_tilde_o, long t,
                                    const Decomposition& dec, double r, double zeta,
                                    double u_max) {
  OrthogonalPowers pw(dec.A_o);
  const MatrixXd Ao_t = pw.power(t);
  const MatrixXd Ao_tk = pw.power(t + dec.kappa);
  return fallback_saturation_policy(x_tilde_o, Ao_t, Ao_tk, dec, r, zeta, u_max);
}

}  // namespace netmpc
