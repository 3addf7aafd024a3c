#include "netmpc/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "netmpc/error.hpp"

namespace netmpc {

namespace {

const std::vector<VariantSpec>& reference_variants() {
  static const std::vector<VariantSpec> v = {
      {PolicyVariant::full, true},
      {PolicyVariant::zero, true},
      {PolicyVariant::diagonal, true},
      {PolicyVariant::full, false},
  };
  return v;
}

// Reference MSB values are path means of max_t ||x_t||^2 ("msb_pathmax").
double metric_value(const std::string& metric, const AggregateStats& s) {
  if (metric == "mae") return s.mae;
  if (metric == "msb_pathmax") return s.path_max_msb;
  return s.empirical_msb;
}

void note(const ReproduceOptions& o, const std::string& msg) {
  if (o.progress) o.progress(msg);
}

SimConfig with_options(SimConfig cfg, const ReproduceOptions& o) {
  if (o.paths > 0) cfg.paths = o.paths;
  if (o.T > 0) cfg.T = o.T;
  cfg.seed = o.seed;
  cfg.threads = o.threads;
  return cfg;
}

std::vector<double> reference_for(const std::string& fig, const std::string& label) {
  for (const auto& id : reference_figure_ids()) {
    if (id != fig) continue;
    for (const auto& c : reference_figure(id).curves) {
      if (c.label == label) return c.values;
    }
  }
  return {};
}

// Sweeps all reference variants and splits the rows into one curve per variant.
FigureResult sweep_figure(const std::string& id, const std::string& metric, SweepParam param,
                          const ReproduceOptions& o) {
  const ReferenceFigure& ref = reference_figure(id);
  const SimConfig base = with_options(find_preset(id).config, o);
  const MomentsProvider moments = caching_moments_provider(o.moment_samples, o.moment_seed);
  FigureResult fig{id, {}};
  for (const auto& v : reference_variants()) {
    CurveResult c;
    c.label = v.label();
    c.param = to_string(param);
    c.metric = metric;
    c.xs = ref.xs;
    c.reference = reference_for(id, c.label);
    fig.curves.push_back(std::move(c));
  }
  sweep(base, param, ref.xs, reference_variants(), moments, [&](const SweepRow& row) {
    note(o, id + ": " + row.param + "=" + format_g(row.value) + " " + row.variant);
    for (auto& c : fig.curves) {
      if (c.label != row.variant) continue;
      c.rows.push_back(row);
      c.ys.push_back(metric_value(metric, row.stats));
    }
  });
  return fig;
}

FigureResult gilbert_elliott_figure(const std::string& id, const std::vector<std::string>& metrics,
                                    const ReproduceOptions& o) {
  const ReferenceFigure& ref = reference_figure("fig10");
  const SimConfig base = with_options(gilbert_elliott_config(), o);
  const MomentsProvider moments = caching_moments_provider(o.moment_samples, o.moment_seed);
  FigureResult fig{id, {}};
  for (SweepParam p : {SweepParam::p_gc, SweepParam::p_gs}) {
    std::vector<SweepRow> rows =
        sweep(base, p, ref.xs, {VariantSpec{PolicyVariant::full, true}}, moments,
              [&](const SweepRow& row) {
                note(o, id + ": " + row.param + "=" + format_g(row.value));
              });
    for (const auto& metric : metrics) {
      CurveResult c;
      c.label = to_string(p);
      if (metrics.size() > 1) c.label = metric + "-" + c.label;
      c.param = to_string(p);
      c.metric = metric;
      c.xs = ref.xs;
      c.rows = rows;
      for (const auto& r : rows) c.ys.push_back(metric_value(metric, r.stats));
      c.reference = reference_for(metric == "mae" ? "fig11" : "fig10", to_string(p));
      fig.curves.push_back(std::move(c));
    }
  }
  return fig;
}

FigureResult solver_time_figure(const std::string& id, const ReproduceOptions& o) {
  const ReferenceFigure& ref = reference_figure(id);
  SimConfig base = find_preset("fig8").config;
  if (o.T > 0) base.T = o.T;
  base.seed = o.seed;
  base.paths = 1;
  base.threads = 1;
  const MomentsProvider moments = caching_moments_provider(o.moment_samples, o.moment_seed);
  const SweepParam param = parse_sweep_param(ref.param);
  const std::vector<VariantSpec> variants = {
      {PolicyVariant::zero, true}, {PolicyVariant::diagonal, true}, {PolicyVariant::full, false}};
  FigureResult fig{id, {}};
  for (const auto& v : variants) {
    CurveResult c;
    c.label = v.label();
    c.param = ref.param;
    c.metric = "solver_time_pct";
    c.xs = ref.xs;
    c.reference = reference_for(id, c.label);
    fig.curves.push_back(std::move(c));
  }
  for (double x : ref.xs) {
    note(o, id + ": " + ref.param + "=" + format_g(x));
    SimConfig cfg = base;
    apply_param(cfg, param, x);
    const std::vector<double> pct = solver_time_comparison(cfg, variants, moments, 3);
    for (std::size_t i = 0; i < variants.size(); ++i) fig.curves[i].ys.push_back(pct[i]);
  }
  return fig;
}

FigureResult trace_figure(const ReproduceOptions& o) {
  const MomentsProvider moments = caching_moments_provider(o.moment_samples, o.moment_seed);
  FigureResult fig{"fig12", {}};
  for (bool stab : {false, true}) {
    SimConfig cfg = with_options(three_dim_config(stab), o);
    note(o, std::string("fig12: ") + (stab ? "with" : "without") + " drift rows");
    const SimSetup setup = prepare(cfg, moments(cfg));
    const AggregateStats st = run_monte_carlo(setup);
    CurveResult c;
    c.label = stab ? "stab" : "nostab-nr1";
    c.param = "t";
    c.metric = "mean_norm";
    for (int t = 0; t <= cfg.T; ++t) c.xs.push_back(t);
    c.ys = st.mean_norm_trace;
    c.reference = reference_for("fig12", c.label);
    c.reference.resize(std::min(c.reference.size(), c.xs.size()));
    fig.curves.push_back(std::move(c));
  }
  return fig;
}

}  // namespace

std::vector<std::string> figure_ids() {
  return {"fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8",
          "fig10", "fig11", "fig12", "correlated"};
}

FigureResult reproduce(const std::string& id, const ReproduceOptions& opts) {
  if (id == "fig2") return sweep_figure(id, "msb_pathmax", SweepParam::u_max, opts);
  if (id == "fig3") return sweep_figure(id, "msb_pathmax", SweepParam::p_c, opts);
  if (id == "fig4") return sweep_figure(id, "msb_pathmax", SweepParam::p_s, opts);
  if (id == "fig5") return sweep_figure(id, "mae", SweepParam::u_max, opts);
  if (id == "fig6") return sweep_figure(id, "mae", SweepParam::p_c, opts);
  if (id == "fig7") return sweep_figure(id, "mae", SweepParam::p_s, opts);
  if (id == "fig8") return solver_time_figure(id, opts);
  if (id == "fig10") return gilbert_elliott_figure(id, {"msb_pathmax"}, opts);
  if (id == "fig11") return gilbert_elliott_figure(id, {"mae"}, opts);
  if (id == "correlated") return gilbert_elliott_figure(id, {"msb_pathmax", "mae"}, opts);
  if (id == "fig12") return trace_figure(opts);
  std::string msg = "unknown figure '" + id + "'; available:";
  for (const auto& f : figure_ids()) msg += " " + f;
  throw InvalidArgument(msg);
}

void write_curve_csv(std::ostream& os, const CurveResult& c) {
  if (!c.rows.empty()) {
    write_sweep_csv(os, c.rows, false);
    return;
  }
  os << c.param << "," << c.metric << "\n";
  for (std::size_t i = 0; i < c.xs.size() && i < c.ys.size(); ++i) {
    os << format_g(c.xs[i]) << "," << format_g(c.ys[i]) << "\n";
  }
}

void write_comparison(std::ostream& os, const FigureResult& fig) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-18s %-12s %-10s %12s %12s %9s\n", "curve", "metric", "x",
                "ours", "reference", "rel.dev");
  os << fig.id << "\n" << buf;
  for (const auto& c : fig.curves) {
    // Long traces are summarized at a few instants.
    std::vector<std::size_t> idx;
    if (c.xs.size() > 12) {
      for (std::size_t t : {0, 30, 60, 90, 120}) {
        if (t < c.xs.size()) idx.push_back(t);
      }
    } else {
      for (std::size_t i = 0; i < c.xs.size(); ++i) idx.push_back(i);
    }
    for (std::size_t i : idx) {
      if (i >= c.ys.size()) continue;
      const double ours = c.ys[i];
      if (i < c.reference.size()) {
        const double ref = c.reference[i];
        const double dev = ref != 0.0 ? (ours - ref) / std::abs(ref) : 0.0;
        std::snprintf(buf, sizeof buf, "%-18s %-12s %-10s %12.4g %12.4g %+8.1f%%\n",
                      c.label.c_str(), c.metric.c_str(), format_g(c.xs[i]).c_str(), ours, ref,
                      100.0 * dev);
      } else {
        std::snprintf(buf, sizeof buf, "%-18s %-12s %-10s %12.4g %12s %9s\n", c.label.c_str(),
                      c.metric.c_str(), format_g(c.xs[i]).c_str(), ours, "-", "-");
      }
      os << buf;
    }
  }
}

double solver_time_reduction_pct(const PathResult& full, const PathResult& variant) {
  const std::size_t n = std::min(full.solve_times.size(), variant.solve_times.size());
  if (n == 0) throw InvalidArgument("no optimization instants to compare");
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double tf = full.solve_times[i];
    s += tf > 0.0 ? 100.0 * (tf - variant.solve_times[i]) / tf : 0.0;
  }
  return s / static_cast<double>(n);
}

std::vector<double> solver_time_comparison(const SimConfig& base,
                                           const std::vector<VariantSpec>& variants,
                                           const MomentsProvider& moments, int repeats) {
  // Per-instant minimum over repeats filters scheduler noise.
  auto timed = [&](const VariantSpec& v) {
    SimConfig cfg = base;
    cfg.variant = v.policy;
    cfg.stability.enabled = v.stability && base.stability.enabled;
    cfg.paths = 1;
    const SimSetup setup = prepare(cfg, moments(cfg));
    PathResult best = run_path(setup, 0);
    for (int r = 1; r < repeats; ++r) {
      const PathResult pr = run_path(setup, 0);
      for (std::size_t i = 0; i < best.solve_times.size(); ++i) {
        best.solve_times[i] = std::min(best.solve_times[i], pr.solve_times[i]);
      }
    }
    return best;
  };
  const PathResult full = timed({PolicyVariant::full, true});
  std::vector<double> out;
  for (const auto& v : variants) out.push_back(solver_time_reduction_pct(full, timed(v)));
  return out;
}

}  // namespace netmpc
