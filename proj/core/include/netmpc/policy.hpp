#pragma once

#include <string>
#include <vector>

#include "netmpc/model.hpp"

namespace netmpc {

enum class PolicyVariant { full, zero, diagonal, fallback };

std::string to_string(PolicyVariant v);
PolicyVariant parse_variant(const std::string& name);  // throws InvalidArgument

// (1 - e^{-xi}) / (1 + e^{-xi}), evaluated as tanh(xi / 2).
double sigmoid(double xi);

struct SaturatorSpec {
  enum class Kind { sigmoid, clamp };
  Kind kind = Kind::sigmoid;
  double psi_max = 1.0;

  double apply(double v) const;
  VectorXd apply(const VectorXd& v) const;
};

// Stacked policy u_{t:N} = eta + Theta psi(I~_{t:N}); Theta is block lower
// triangular with m x q blocks.
struct PolicyParams {
  VectorXd eta;    // Nm
  MatrixXd Theta;  // Nm x Nq
  PolicyVariant variant = PolicyVariant::full;
  int N = 0, m = 0, q = 0;

  static PolicyParams zeros(int N, int m, int q, PolicyVariant variant);
};

// Whether block (l, i) of Theta is a free decision variable for the variant.
bool theta_block_free(PolicyVariant v, int l, int i);

// u_max - |eta_i| - ||Theta_{i,:}||_1 psi_max per row.
VectorXd feasibility_rows(const PolicyParams& p, const SaturatorSpec& sat, double u_max);

// Whole-horizon evaluation; `innovations` stacks N q-blocks (zero where dropped).
// Throws InvalidArgument when the parameters violate the input bound rows.
VectorXd evaluate(const PolicyParams& p, const VectorXd& innovations,
                  const SaturatorSpec& sat, double u_max);

// Causal command for window step l using the first l+1 received innovations.
VectorXd evaluate_step(const PolicyParams& p, int l, const std::vector<VectorXd>& received,
                       const SaturatorSpec& sat);

// Actuator-side buffer of the transmission protocol.
struct ActuatorBuffer {
  std::vector<VectorXd> eta_blocks;  // blocks for window steps start..N_r-1
  int start = -1;                    // -1 when empty
  int g = 0;                         // cumulative delivery flag

  bool empty() const { return start < 0; }
  void clear() {
    eta_blocks.clear();
    start = -1;
    g = 0;
  }
};

struct ProtocolOutput {
  VectorXd u_applied;
  ActuatorBuffer buffer;
};

// One actuator step at window position l. `eta_tail` holds the eta blocks
// l+1 .. N_r-1 that accompany the transmitted command.
ProtocolOutput protocol_step(const ActuatorBuffer& buffer, int nu, int l, int N_r,
                             const VectorXd& u_transmitted,
                             const std::vector<VectorXd>& eta_tail);

// Diagonals of the stacked protocol matrices G and S for one window of
// channel draws (nu must hold at least N_r entries).
struct ProtocolMatrices {
  VectorXd g_diag;  // Nm
  VectorXd s_diag;  // Nm
  MatrixXd G() const { return g_diag.asDiagonal(); }
  MatrixXd S() const { return s_diag.asDiagonal(); }
};

ProtocolMatrices build_G_S(const std::vector<int>& nu, int N_r, int N, int m);

// componentwise: z zeta / r inside [-r, r], +-zeta outside.
VectorXd sat_inf(const VectorXd& z, double r, double zeta);

// Largest zeta allowed for the fallback policy: u_max / (sqrt(d_o) sigma_1(R_kappa^+)).
double max_zeta(const Decomposition& dec, double u_max);

// Powers of an orthogonal matrix, advanced incrementally and re-orthogonalized
// every `reortho_every` multiplications.
class OrthogonalPowers {
 public:
  explicit OrthogonalPowers(MatrixXd A_o, int reortho_every = 1000);
  const MatrixXd& power(long t);  // non-decreasing t is cheapest

 private:
  MatrixXd A_, current_;
  long t_ = 0;
  int reortho_every_;
};

// eta_{1:kappa m} = -R_kappa^+ A_o^{t+kappa} sat((A_o')^t x_o).
VectorXd fallback_saturation_policy(const VectorXd& x_tilde_o, long t,
                                    const Decomposition& dec, double r, double zeta,
                                    double u_max);
// Variant that reuses precomputed A_o^t and A_o^{t+kappa}.
VectorXd fallback_saturation_policy(const VectorXd& x_tilde_o, const MatrixXd& Ao_t,
                                    const MatrixXd& Ao_t_kappa, const Decomposition& dec,
                                    double r, double zeta, double u_max);

}  // namespace netmpc
