#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "netmpc/channels.hpp"
#include "netmpc/model.hpp"
#include "netmpc/policy.hpp"
#include "netmpc/qp.hpp"
#include "netmpc/synthesis.hpp"

namespace netmpc {

struct SimConfig {
  SystemModel model;
  std::optional<int> orthogonal_dim;  // A supplied in block form
  ChannelSpec sensor = ChannelSpec::bernoulli(1.0);
  ChannelSpec control = ChannelSpec::bernoulli(1.0);
  SaturatorSpec sat;
  PolicyVariant variant = PolicyVariant::full;
  StabilityParams stability;  // r/zeta must be resolved (see resolve_stability)
  QpSettings qp;
  int T = 120;
  int paths = 1;
  std::uint64_t seed = 1;
  int threads = 1;
  bool keep_traces = false;
};

// Derived, immutable data shared by all paths of a run.
struct SimSetup {
  SimConfig cfg;
  Decomposition dec;
  StackedMatrices stacked;
  std::shared_ptr<const OfflineMoments> moments;
};

SimSetup prepare(const SimConfig& cfg, std::shared_ptr<const OfflineMoments> moments);

struct PathResult {
  std::vector<double> x_norm_sq;    // T+1 entries, t = 0..T
  std::vector<double> u_norm_sq;    // T entries
  std::vector<double> est_err_sq;   // ||x_hat - x_tilde||^2, T+1 entries
  std::vector<double> solve_times;  // one per optimization instant
  std::vector<char> fallback;       // one per optimization instant
  std::vector<char> sensor_bits, control_bits;
  std::vector<VectorXd> x_tilde;    // filled when keep_traces
  std::vector<VectorXd> x;          // filled when keep_traces
};

PathResult run_path(const SimSetup& setup, int path_index);

struct AggregateStats {
  int paths = 0;
  int T = 0;
  double empirical_msb = 0.0;  // max_t of the path mean of ||x_t||^2
  int msb_time = 0;
  double msb_se = 0.0;         // bootstrap standard error
  double path_max_msb = 0.0;   // path mean of max_t ||x_t||^2
  double path_max_msb_se = 0.0;
  double mae = 0.0;            // mean over paths and stages of ||u^a_t||^2
  double mae_se = 0.0;
  std::vector<double> mean_sq_trace;    // per-step path mean of ||x_t||^2
  std::vector<double> mean_norm_trace;  // per-step path mean of ||x_t||
  double est_error_diag = 0.0;
  double mean_solver_time = 0.0;
  double median_solver_time = 0.0;
  long solves = 0;
  double fallback_rate = 0.0;
  // Per-path ||x_t||^2 traces (paths x (T+1)) and per-path mean ||u||^2, kept
  // for paired bootstrap comparisons between runs that share seeds.
  MatrixXd path_x_sq;
  VectorXd path_mae;
};

AggregateStats aggregate(const std::vector<PathResult>& paths, std::uint64_t bootstrap_seed);

// Runs every path (in parallel when threads > 1). Results do not depend on the
// thread count because each path owns its random streams.
std::vector<PathResult> run_paths(const SimSetup& setup);
AggregateStats run_monte_carlo(const SimSetup& setup);

// Bootstrap standard error of msb(a) - msb(b) for runs over the same paths.
double paired_msb_diff_se(const AggregateStats& a, const AggregateStats& b, int resamples,
                          std::uint64_t seed);
// Standard error of path_max_msb(a) - path_max_msb(b) for runs over the same paths.
double paired_path_max_diff_se(const AggregateStats& a, const AggregateStats& b);

struct VariantSpec {
  PolicyVariant policy = PolicyVariant::full;
  bool stability = true;
  std::string label() const;
  static VariantSpec parse(const std::string& label);
};

enum class SweepParam { u_max, p_c, p_s, p_gc, p_gs };
std::string to_string(SweepParam p);
SweepParam parse_sweep_param(const std::string& name);

// Applies one swept value to a configuration.
void apply_param(SimConfig& cfg, SweepParam p, double value);

struct SweepRow {
  std::string param;
  double value = 0.0;
  std::string variant;
  AggregateStats stats;
};

// Moment provider: returns moments for a configuration (generated or cached).
using MomentsProvider = std::function<std::shared_ptr<const OfflineMoments>(const SimConfig&)>;

// Provider that estimates moments on demand and caches them by hash.
MomentsProvider caching_moments_provider(long samples, std::uint64_t seed);

std::vector<SweepRow> sweep(const SimConfig& base, SweepParam param,
                            const std::vector<double>& values,
                            const std::vector<VariantSpec>& variants,
                            const MomentsProvider& moments,
                            const std::function<void(const SweepRow&)>& on_row = {});

std::string format_g(double v);  // %.6g
// Wall-clock solver time is the only nondeterministic output; it is written
// when `timing` is set and left empty otherwise so repeated runs are
// byte-identical.
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, bool timing);

}  // namespace netmpc
