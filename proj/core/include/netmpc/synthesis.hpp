#pragma once

#include <cstdint>
#include <vector>

#include "netmpc/channels.hpp"
#include "netmpc/model.hpp"
#include "netmpc/policy.hpp"
#include "netmpc/qp.hpp"

namespace netmpc {

// Expectations entering the per-instant objective, estimated offline.
struct OfflineMoments {
  MatrixXd mu_G, Sigma_G;  // E[G], E[G' alpha G]
  MatrixXd mu_S, Sigma_S;  // E[S], E[S' alpha S]
  MatrixXd Sigma_GS;       // E[G' alpha S]
  MatrixXd Sigma_psi;      // E[psi' psi'^T], (N-1)q square
  MatrixXd Sigma_psi_w;    // E[psi' w_{t:N}^T], (N-1)q x Nd
  MatrixXd Sigma_e_psi;    // E[psi' e_t^T], (N-1)q x d
  long sample_count = 0;
  std::uint64_t seed = 0;
  std::uint64_t model_hash = 0;
  int d = 0, m = 0, q = 0, N = 0, N_r = 0;
};

inline constexpr long kMinMomentSamples = 1000;
inline constexpr int kMomentBurnIn = 50;

OfflineMoments estimate_moments(const SystemModel& model, const ChannelSpec& sensor,
                                const ChannelSpec& control, const SaturatorSpec& sat,
                                long samples, std::uint64_t seed);

struct StabilityParams {
  bool enabled = false;
  double r = 1.0;
  double zeta = 1.0;
};

// r = 10 sqrt(trace Sigma_w) and zeta at the upper end of its admissible range.
StabilityParams default_stability(const SystemModel& model, const Decomposition& dec);

// Row over the expression eta_{1:kappa m} + Theta^{(:,t)}_{1:kappa m} psi_0:
// lower <= coeff' (...) <= upper.
struct StabilityRow {
  VectorXd coeff;  // kappa m
  double lower, upper;
};

std::vector<StabilityRow> stability_constraints(const VectorXd& x_tilde_o,
                                                const MatrixXd& Ao_t,
                                                const MatrixXd& Ao_t_kappa,
                                                const Decomposition& dec,
                                                const StabilityParams& params);
std::vector<StabilityRow> stability_constraints(const VectorXd& x_tilde_o, long t_abs,
                                                const Decomposition& dec,
                                                const StabilityParams& params);

// Decision vector: [eta (Nm); free Theta entries; a (Nm); b (one per free
// Theta entry)] with |eta_i| <= a_i and |theta_j| <= b_j.
struct QpLayout {
  int N = 0, m = 0, q = 0;
  PolicyVariant variant = PolicyVariant::full;
  std::vector<std::pair<int, int>> theta_entries;  // (row, col) in Theta

  int n_eta() const { return N * m; }
  int n_theta() const { return static_cast<int>(theta_entries.size()); }
  int eta_offset() const { return 0; }
  int theta_offset() const { return n_eta(); }
  int a_offset() const { return n_eta() + n_theta(); }
  int b_offset() const { return 2 * n_eta() + n_theta(); }
  int n_total() const { return 2 * (n_eta() + n_theta()); }

  static QpLayout make(int N, int m, int q, PolicyVariant variant);
  PolicyParams unpack(const VectorXd& x) const;
  VectorXd pack(const PolicyParams& p) const;  // aux variables set tight
};

struct AssembledQp {
  QpProblem qp;
  QpLayout layout;
  int stability_rows = 0;
  bool psd_projected = false;
  double min_hessian_eig = 0.0;  // only filled when the projection check triggers
  // Quadratic V(z) = z'Hz + 2f'z over [eta; theta] before the QP scaling.
  MatrixXd H;
  VectorXd f;
};

AssembledQp assemble_qp(const OfflineMoments& moments, const StackedMatrices& stacked,
                        const VectorXd& x_tilde, const VectorXd& innovation,
                        const SaturatorSpec& sat, double u_max, PolicyVariant variant,
                        const std::vector<StabilityRow>& stability = {});

// Lemma-3 objective (without the constant term) evaluated at given params.
double objective_value(const OfflineMoments& moments, const StackedMatrices& stacked,
                       const VectorXd& x_tilde, const VectorXd& innovation,
                       const SaturatorSpec& sat, const PolicyParams& params);

struct FallbackContext {
  const Decomposition* dec = nullptr;  // null or d_o = 0: eta = 0
  VectorXd x_tilde_o;
  MatrixXd Ao_t, Ao_t_kappa;
  StabilityParams stability;
  double u_max = 1.0;
};

PolicyParams fallback_params(const FallbackContext& ctx, int N, int m, int q,
                             PolicyVariant variant);

struct StepResult {
  PolicyParams params;
  bool used_fallback = false;
  bool repaired = false;  // rows rescaled to remove solver tolerance slack
  QpStatus status = QpStatus::optimal;
  int iterations = 0;
  double solve_time = 0.0;
};

StepResult solve_step(const AssembledQp& qp, const QpSettings& settings,
                      const FallbackContext& fallback, const SaturatorSpec& sat,
                      double u_max);

struct ControllerConfig {
  PolicyVariant variant = PolicyVariant::full;
  StabilityParams stability;
  SaturatorSpec sat;
  QpSettings qp;
};

// Per-path controller: owns the orthogonal power cache, shares the rest.
class Controller {
 public:
  Controller(const SystemModel& model, const Decomposition& dec,
             const StackedMatrices& stacked, const OfflineMoments& moments,
             ControllerConfig cfg);

  struct Plan {
    PolicyParams params;
    bool solved_qp = false;
    bool used_fallback = false;
    double solve_time = 0.0;
    int iterations = 0;
    int stability_rows = 0;
    QpStatus status = QpStatus::optimal;
  };

  Plan plan(long t, const VectorXd& x_tilde, const VectorXd& innovation);

 private:
  const SystemModel& model_;
  const Decomposition& dec_;
  const StackedMatrices& stacked_;
  const OfflineMoments& moments_;
  ControllerConfig cfg_;
  OrthogonalPowers powers_;
};

}  // namespace netmpc
