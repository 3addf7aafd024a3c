#include "netmpc/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "netmpc/error.hpp"
#include "netmpc/filtering.hpp"
#include "netmpc/moments_io.hpp"

namespace netmpc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

OfflineMoments estimate_moments(const SystemModel& model, const ChannelSpec& sensor,
                                const ChannelSpec& control, const SaturatorSpec& sat,
                                long samples, std::uint64_t seed) {
  if (samples < kMinMomentSamples)
    throw InvalidArgument("sample count too small (need at least " +
                          std::to_string(kMinMomentSamples) + ")");
  sensor.validate();
  control.validate();
  const StackedMatrices st = stack(model);
  const int d = model.d(), m = model.m(), q = model.q(), N = model.N, Nr = model.N_r;
  const int Nm = N * m, np = (N - 1) * q;

  OfflineMoments mo;
  mo.d = d;
  mo.m = m;
  mo.q = q;
  mo.N = N;
  mo.N_r = Nr;
  mo.sample_count = samples;
  mo.seed = seed;
  mo.model_hash = moments_hash(model, sensor, control, sat);

  // Protocol matrices: G and S are diagonal, so E[G' alpha S] = alpha o E[g s'].
  {
    RngStream rng(seed, stream_id(0, StreamRole::control_channel));
    MatrixXd Egg = MatrixXd::Zero(Nm, Nm), Ess = Egg, Egs = Egg;
    VectorXd Eg = VectorXd::Zero(Nm), Es = VectorXd::Zero(Nm);
    std::vector<int> nu(Nr);
    for (long k = 0; k < samples; ++k) {
      Channel ch(control);
      for (int l = 0; l < Nr; ++l) nu[l] = ch.sample(rng);
      const ProtocolMatrices pm = build_G_S(nu, Nr, N, m);
      Egg.noalias() += pm.g_diag * pm.g_diag.transpose();
      Ess.noalias() += pm.s_diag * pm.s_diag.transpose();
      Egs.noalias() += pm.g_diag * pm.s_diag.transpose();
      Eg += pm.g_diag;
      Es += pm.s_diag;
    }
    const double inv = 1.0 / static_cast<double>(samples);
    mo.mu_G = (Eg * inv).asDiagonal();
    mo.mu_S = (Es * inv).asDiagonal();
    mo.Sigma_G = symmetrize(st.alpha.cwiseProduct(Egg * inv));
    mo.Sigma_S = symmetrize(st.alpha.cwiseProduct(Ess * inv));
    mo.Sigma_GS = st.alpha.cwiseProduct(Egs * inv);
  }

  // Future received innovations against the stationary filter error.
  {
    mo.Sigma_psi = MatrixXd::Zero(np, np);
    mo.Sigma_psi_w = MatrixXd::Zero(np, N * d);
    mo.Sigma_e_psi = MatrixXd::Zero(np, d);
    if (np > 0) {
      const SteadyStateFilter ss = steady_state_gain(model);
      const MatrixXd Gam = MatrixXd::Identity(d, d) - ss.K * model.C;
      const MatrixXd phi = Gam * model.A;
      const MatrixXd Le = psd_sqrt(ss.P_filt);
      const MatrixXd Lw = psd_sqrt(model.Sigma_w);
      const MatrixXd Lv = psd_sqrt(model.Sigma_v);
      RngStream noise(seed, stream_id(0, StreamRole::process_noise));
      RngStream srng(seed, stream_id(0, StreamRole::sensor_channel));
      VectorXd psi(np), wstack(N * d);
      for (long k = 0; k < samples; ++k) {
        VectorXd e = noise.gaussian(Le);
        for (int b = 0; b < kMomentBurnIn; ++b) {
          const VectorXd w = noise.gaussian(Lw);
          const VectorXd v = noise.gaussian(Lv);
          e = phi * e + Gam * w - ss.K * v;
        }
        const VectorXd e_t = e;
        Channel ch(sensor);
        ch.sample(srng);  // s_t: the current packet is already known
        for (int j = 0; j < N; ++j) {
          const VectorXd w = noise.gaussian(Lw);
          const VectorXd v = noise.gaussian(Lv);
          wstack.segment(j * d, d) = w;
          e = phi * e + Gam * w - ss.K * v;
          if (j + 1 <= N - 1) {
            const int s = ch.sample(srng);
            const VectorXd innov = model.C * e + v;
            psi.segment(j * q, q) = s ? sat.apply(innov) : VectorXd::Zero(q);
          }
        }
        mo.Sigma_psi.noalias() += psi * psi.transpose();
        mo.Sigma_psi_w.noalias() += psi * wstack.transpose();
        mo.Sigma_e_psi.noalias() += psi * e_t.transpose();
      }
      const double inv = 1.0 / static_cast<double>(samples);
      mo.Sigma_psi = symmetrize(mo.Sigma_psi * inv);
      mo.Sigma_psi_w *= inv;
      mo.Sigma_e_psi *= inv;
    }
  }
  return mo;
}

StabilityParams default_stability(const SystemModel& model, const Decomposition& dec) {
  StabilityParams p;
  p.enabled = dec.d_o() > 0;
  p.r = 10.0 * std::sqrt(std::max(model.Sigma_w.trace(), 0.0));
  if (p.r <= 0.0) p.r = 1.0;
  p.zeta = dec.d_o() > 0 ? max_zeta(dec, model.u_max) : 0.0;
  return p;
}

std::vector<StabilityRow> stability_constraints(const VectorXd& x_tilde_o,
                                                const MatrixXd& Ao_t,
                                                const MatrixXd& Ao_t_kappa,
                                                const Decomposition& dec,
                                                const StabilityParams& params) {
  std::vector<StabilityRow> rows;
  if (!params.enabled || dec.d_o() == 0) return rows;
  const VectorXd xi = Ao_t.transpose() * x_tilde_o;
  MatrixXd M;
  for (int j = 0; j < dec.d_o(); ++j) {
    if (std::abs(xi(j)) <= params.r) continue;
    if (M.size() == 0)
      M = Ao_t_kappa.transpose() * reachability_matrix(dec.A_o, dec.B_o, dec.kappa);
    if (xi(j) > params.r)
      rows.push_back({M.row(j).transpose(), -kInf, -params.zeta});
    else
      rows.push_back({M.row(j).transpose(), params.zeta, kInf});
  }
  return rows;
}

std::vector<StabilityRow> stability_constraints(const VectorXd& x_tilde_o, long t_abs,
                                                const Decomposition& dec,
                                                const StabilityParams& params) {
  OrthogonalPowers pw(dec.A_o);
  const MatrixXd Ao_t = pw.power(t_abs);
  const MatrixXd Ao_tk = pw.power(t_abs + dec.kappa);
  return stability_constraints(x_tilde_o, Ao_t, Ao_tk, dec, params);
}

QpLayout QpLayout::make(int N, int m, int q, PolicyVariant variant) {
  QpLayout L;
  L.N = N;
  L.m = m;
  L.q = q;
  L.variant = variant;
  for (int l = 0; l < N; ++l)
    for (int i = 0; i < N; ++i) {
      if (!theta_block_free(variant, l, i)) continue;
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < q; ++c) L.theta_entries.emplace_back(l * m + r, i * q + c);
    }
  return L;
}

PolicyParams QpLayout::unpack(const VectorXd& x) const {
  PolicyParams p = PolicyParams::zeros(N, m, q, variant);
  p.eta = x.segment(eta_offset(), n_eta());
  for (int j = 0; j < n_theta(); ++j)
    p.Theta(theta_entries[j].first, theta_entries[j].second) = x(theta_offset() + j);
  return p;
}

VectorXd QpLayout::pack(const PolicyParams& p) const {
  VectorXd x = VectorXd::Zero(n_total());
  x.segment(eta_offset(), n_eta()) = p.eta;
  x.segment(a_offset(), n_eta()) = p.eta.cwiseAbs();
  for (int j = 0; j < n_theta(); ++j) {
    const double v = p.Theta(theta_entries[j].first, theta_entries[j].second);
    x(theta_offset() + j) = v;
    x(b_offset() + j) = std::abs(v);
  }
  return x;
}

AssembledQp assemble_qp(const OfflineMoments& mo, const StackedMatrices& st,
                        const VectorXd& x_tilde, const VectorXd& innovation,
                        const SaturatorSpec& sat, double u_max, PolicyVariant variant,
                        const std::vector<StabilityRow>& stability) {
  const int N = mo.N, m = mo.m, q = mo.q, d = mo.d, Nm = N * m;
  if (st.alpha.rows() != Nm || st.Q_A.rows() != d || x_tilde.size() != d ||
      innovation.size() != q || mo.Sigma_G.rows() != Nm)
    throw DataMismatch("moments do not match the model dimensions");
  if (variant == PolicyVariant::fallback)
    throw InvalidArgument("the fallback variant has no QP");

  AssembledQp out;
  out.layout = QpLayout::make(N, m, q, variant);
  const QpLayout& L = out.layout;
  const VectorXd psi0 = sat.apply(innovation);
  const VectorXd v1 = st.Q_A.transpose() * x_tilde;
  const VectorXd f_eta = mo.mu_G.transpose() * v1;
  const VectorXd f_S = mo.mu_S.transpose() * v1;
  MatrixXd W;
  if (N > 1)
    W = (mo.Sigma_psi_w * st.Q_D * mo.mu_S).transpose() +
        (mo.Sigma_e_psi * st.Q_A * mo.mu_S).transpose();

  const int ne = L.n_eta(), nt = L.n_theta(), nz = ne + nt;
  MatrixXd& H = out.H;
  VectorXd& f = out.f;
  H = MatrixXd::Zero(nz, nz);
  f = VectorXd::Zero(nz);
  H.topLeftCorner(ne, ne) = mo.Sigma_G;
  f.head(ne) = f_eta;
  for (int a = 0; a < nt; ++a) {
    const auto [ra, ca] = L.theta_entries[a];
    const int ia = ne + a;
    if (ca < q) {
      f(ia) = psi0(ca) * f_S(ra);
      for (int i = 0; i < ne; ++i) {
        const double h = mo.Sigma_GS(i, ra) * psi0(ca);
        H(i, ia) = h;
        H(ia, i) = h;
      }
    } else {
      f(ia) = W(ra, ca - q);
    }
    for (int b = 0; b <= a; ++b) {
      const auto [rb, cb] = L.theta_entries[b];
      double h = 0.0;
      if (ca < q && cb < q)
        h = psi0(ca) * psi0(cb) * mo.Sigma_S(ra, rb);
      else if (ca >= q && cb >= q)
        h = mo.Sigma_psi(ca - q, cb - q) * mo.Sigma_S(ra, rb);
      H(ne + a, ne + b) = h;
      H(ne + b, ne + a) = h;
    }
  }
  H = symmetrize(H);
  {
    MatrixXd shifted = H;
    shifted.diagonal().array() += 1e-8;
    Eigen::LLT<MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success) {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(H);
      out.min_hessian_eig = es.eigenvalues().minCoeff();
      if (out.min_hessian_eig < -1e-8) {
        H = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
            es.eigenvectors().transpose();
        H = symmetrize(H);
        out.psd_projected = true;
      }
    }
  }

  const int n = L.n_total();
  const int rows = 2 * ne + 2 * nt + Nm + static_cast<int>(stability.size());
  QpProblem& qp = out.qp;
  qp.P = MatrixXd::Zero(n, n);
  qp.P.topLeftCorner(nz, nz) = 2.0 * H;
  qp.q = VectorXd::Zero(n);
  qp.q.head(nz) = 2.0 * f;
  qp.A = MatrixXd::Zero(rows, n);
  qp.l.resize(rows);
  qp.u.resize(rows);
  int r = 0;
  auto abs_split = [&](int var, int aux) {
    qp.A(r, var) = 1.0;
    qp.A(r, aux) = -1.0;
    qp.l(r) = -kInf;
    qp.u(r) = 0.0;
    ++r;
    qp.A(r, var) = 1.0;
    qp.A(r, aux) = 1.0;
    qp.l(r) = 0.0;
    qp.u(r) = kInf;
    ++r;
  };
  for (int i = 0; i < ne; ++i) abs_split(L.eta_offset() + i, L.a_offset() + i);
  for (int j = 0; j < nt; ++j) abs_split(L.theta_offset() + j, L.b_offset() + j);
  const int bound_row0 = r;
  for (int i = 0; i < Nm; ++i) {
    qp.A(r, L.a_offset() + i) = 1.0;
    qp.l(r) = -kInf;
    qp.u(r) = u_max;
    ++r;
  }
  for (int j = 0; j < nt; ++j)
    qp.A(bound_row0 + L.theta_entries[j].first, L.b_offset() + j) = sat.psi_max;

  for (const auto& srow : stability) {
    const int km = static_cast<int>(srow.coeff.size());
    if (km > Nm) throw InvalidArgument("stability row longer than the horizon");
    for (int i = 0; i < km; ++i) qp.A(r, L.eta_offset() + i) = srow.coeff(i);
    for (int j = 0; j < nt; ++j) {
      const auto [rj, cj] = L.theta_entries[j];
      if (rj < km && cj < q) qp.A(r, L.theta_offset() + j) = srow.coeff(rj) * psi0(cj);
    }
    qp.l(r) = srow.lower;
    qp.u(r) = srow.upper;
    ++r;
  }
  out.stability_rows = static_cast<int>(stability.size());
  return out;
}

double objective_value(const OfflineMoments& mo, const StackedMatrices& st,
                       const VectorXd& x_tilde, const VectorXd& innovation,
                       const SaturatorSpec& sat, const PolicyParams& p) {
  const int q = mo.q, N = mo.N;
  const VectorXd psi0 = sat.apply(innovation);
  const MatrixXd Tc = p.Theta.leftCols(q);
  const MatrixXd Tp = p.Theta.rightCols((N - 1) * q);
  const MatrixXd Pi = psi0 * psi0.transpose();
  double v = p.eta.dot(mo.Sigma_G * p.eta);
  v += (mo.Sigma_S * Tc * Pi * Tc.transpose()).trace();
  v += 2.0 * (p.eta.transpose() * mo.Sigma_GS + x_tilde.transpose() * st.Q_A * mo.mu_S)
                 .dot(Tc * psi0);
  v += 2.0 * x_tilde.dot(st.Q_A * mo.mu_G * p.eta);
  if (N > 1) {
    v += (mo.Sigma_S * Tp * mo.Sigma_psi * Tp.transpose()).trace();
    v += 2.0 * (st.Q_D * mo.mu_S * Tp * mo.Sigma_psi_w).trace();
    v += 2.0 * (st.Q_A * mo.mu_S * Tp * mo.Sigma_e_psi).trace();
  }
  return v;
}

PolicyParams fallback_params(const FallbackContext& ctx, int N, int m, int q,
                             PolicyVariant variant) {
  PolicyParams p = PolicyParams::zeros(N, m, q, variant);
  if (ctx.dec == nullptr || ctx.dec->d_o() == 0) return p;
  const int km = ctx.dec->kappa * m;
  if (km > N * m) throw InvalidArgument("reachability index exceeds the horizon");
  p.eta.head(km) = fallback_saturation_policy(ctx.x_tilde_o, ctx.Ao_t, ctx.Ao_t_kappa,
                                              *ctx.dec, ctx.stability.r,
                                              ctx.stability.zeta, ctx.u_max);
  return p;
}

namespace {

// Stability rows are solved with a small inward margin so that solver slack and
// the input-bound repair below stay inside the exact rows.
constexpr double kRowMargin = 1e-5;
// Accepted violation of the exact rows after the solve.
constexpr double kRowCheckTol = 1e-9;

QpProblem tightened(const AssembledQp& aq) {
  QpProblem qp = aq.qp;
  for (int i = qp.k() - aq.stability_rows; i < qp.k(); ++i) {
    if (std::isfinite(qp.l(i))) qp.l(i) += kRowMargin * std::max(1.0, std::abs(qp.l(i)));
    if (std::isfinite(qp.u(i))) qp.u(i) -= kRowMargin * std::max(1.0, std::abs(qp.u(i)));
  }
  return qp;
}

bool stability_rows_hold(const AssembledQp& aq, const PolicyParams& p) {
  const VectorXd z = aq.layout.pack(p);
  for (int i = aq.qp.k() - aq.stability_rows; i < aq.qp.k(); ++i) {
    const double v = aq.qp.A.row(i).dot(z);
    const double tol = kRowCheckTol * std::max(1.0, aq.qp.A.row(i).cwiseAbs().dot(z.cwiseAbs()));
    if (v < aq.qp.l(i) - tol || v > aq.qp.u(i) + tol) return false;
  }
  return true;
}

}  // namespace

StepResult solve_step(const AssembledQp& aq, const QpSettings& settings,
                      const FallbackContext& fallback, const SaturatorSpec& sat,
                      double u_max) {
  StepResult res;
  const auto& L = aq.layout;
  bool ok = false;
  if (settings.max_iter > 0) {
    const QpSolution sol = solve(tightened(aq), settings);
    res.status = sol.status;
    res.iterations = sol.iterations;
    res.solve_time = sol.solve_time;
    ok = sol.status == QpStatus::optimal && sol.x.allFinite();
    if (ok) res.params = L.unpack(sol.x);
  } else {
    res.status = QpStatus::max_iter;
  }
  if (ok) {
    // Remove any remaining excess on the input bound rows.
    auto& p = res.params;
    for (Eigen::Index i = 0; i < p.eta.size(); ++i) {
      const double mass = std::abs(p.eta(i)) + p.Theta.row(i).cwiseAbs().sum() * sat.psi_max;
      if (mass > u_max) {
        const double scale = u_max / mass;
        p.eta(i) *= scale;
        p.Theta.row(i) *= scale;
        res.repaired = true;
      }
    }
    ok = stability_rows_hold(aq, p);
  }
  if (!ok) {
    res.used_fallback = true;
    res.params = fallback_params(fallback, L.N, L.m, L.q, L.variant);
  }
  return res;
}

Controller::Controller(const SystemModel& model, const Decomposition& dec,
                       const StackedMatrices& stacked, const OfflineMoments& moments,
                       ControllerConfig cfg)
    : model_(model), dec_(dec), stacked_(stacked), moments_(moments), cfg_(std::move(cfg)),
      powers_(dec.A_o) {
  if (moments_.N != model.N || moments_.m != model.m() || moments_.q != model.q() ||
      moments_.d != model.d() || moments_.N_r != model.N_r)
    throw DataMismatch("moments were generated for a different horizon or model size");
  const bool needs_orth = cfg_.variant == PolicyVariant::fallback ||
                          (cfg_.stability.enabled && dec.d_o() > 0);
  if (cfg_.variant == PolicyVariant::fallback && dec.d_o() == 0)
    throw InvalidArgument("the fallback variant needs an orthogonal part of A");
  if (needs_orth && dec.kappa > model.N)
    throw InvalidArgument("reachability index exceeds the horizon N");
  if (cfg_.stability.enabled && dec.d_o() > 0 && model.N_r != dec.kappa)
    throw InvalidArgument("stability constraints need N_r equal to the reachability index " +
                          std::to_string(dec.kappa));
  if (needs_orth) {
    if (!(cfg_.stability.r > 0.0)) throw InvalidArgument("stability threshold r must be positive");
    const double zmax = max_zeta(dec, model.u_max);
    if (!(cfg_.stability.zeta > 0.0) || cfg_.stability.zeta > zmax * (1.0 + 1e-12))
      throw InvalidArgument("zeta must lie in (0, " + std::to_string(zmax) + "]");
  }
}

Controller::Plan Controller::plan(long t, const VectorXd& x_tilde, const VectorXd& innovation) {
  Plan out;
  FallbackContext ctx;
  ctx.u_max = model_.u_max;
  ctx.stability = cfg_.stability;
  const bool use_orth = dec_.d_o() > 0 && dec_.kappa <= model_.N &&
                        (cfg_.variant == PolicyVariant::fallback || cfg_.stability.enabled ||
                         cfg_.stability.zeta > 0.0);
  if (use_orth) {
    ctx.dec = &dec_;
    ctx.x_tilde_o = dec_.orthogonal_part(x_tilde);
    ctx.Ao_t = powers_.power(t);
    // A_o^{t+kappa} from A_o^t so that the cache only moves forward.
    MatrixXd Ak = MatrixXd::Identity(dec_.d_o(), dec_.d_o());
    for (int k = 0; k < dec_.kappa; ++k) Ak = dec_.A_o * Ak;
    ctx.Ao_t_kappa = Ak * ctx.Ao_t;
  }
  if (cfg_.variant == PolicyVariant::fallback) {
    out.params = fallback_params(ctx, model_.N, model_.m(), model_.q(), cfg_.variant);
    return out;
  }
  std::vector<StabilityRow> rows;
  if (cfg_.stability.enabled && use_orth)
    rows = stability_constraints(ctx.x_tilde_o, ctx.Ao_t, ctx.Ao_t_kappa, dec_, cfg_.stability);
  const AssembledQp aq = assemble_qp(moments_, stacked_, x_tilde, innovation, cfg_.sat,
                                     model_.u_max, cfg_.variant, rows);
  const StepResult step = solve_step(aq, cfg_.qp, ctx, cfg_.sat, model_.u_max);
  out.params = step.params;
  out.solved_qp = true;
  out.used_fallback = step.used_fallback;
  out.solve_time = step.solve_time;
  out.iterations = step.iterations;
  out.stability_rows = aq.stability_rows;
  out.status = step.status;
  return out;
}

}  // namespace netmpc
