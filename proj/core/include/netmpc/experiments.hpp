#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "netmpc/presets.hpp"
#include "netmpc/simulation.hpp"

namespace netmpc {

struct ReproduceOptions {
  int paths = 0;  // 0: figure default
  int T = 0;      // 0: figure default
  std::uint64_t seed = 1;
  int threads = 1;
  long moment_samples = 100000;
  std::uint64_t moment_seed = 1;
  std::function<void(const std::string&)> progress;
};

// One curve of a reproduced figure. Sweep figures fill `rows`; time-trace and
// solver-time figures fill `xs`/`ys` directly.
struct CurveResult {
  std::string label;
  std::string param;
  std::string metric;  // msb_pathmax, msb, mae, solver_time_pct, mean_norm
  std::vector<double> xs, ys;
  std::vector<SweepRow> rows;
  std::vector<double> reference;  // reference values aligned with xs, may be empty
};

struct FigureResult {
  std::string id;
  std::vector<CurveResult> curves;
};

// fig2 .. fig8, fig10, fig11, fig12, correlated
std::vector<std::string> figure_ids();
FigureResult reproduce(const std::string& id, const ReproduceOptions& opts);

void write_curve_csv(std::ostream& os, const CurveResult& c);
// Table of ours vs reference values with relative deviation.
void write_comparison(std::ostream& os, const FigureResult& fig);

// Mean over optimization instants of 100 (t_full - t_variant) / t_full.
double solver_time_reduction_pct(const PathResult& full, const PathResult& variant);

// Single-path solver-time comparison against the full variant at one
// parameter value. Returns one percentage per entry of `variants`.
std::vector<double> solver_time_comparison(const SimConfig& base,
                                           const std::vector<VariantSpec>& variants,
                                           const MomentsProvider& moments, int repeats = 1);

}  // namespace netmpc
