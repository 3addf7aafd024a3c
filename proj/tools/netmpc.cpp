// netmpc: command-line front end for moment generation, closed-loop runs,
// parameter sweeps and figure reproduction.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "netmpc/config.hpp"
#include "netmpc/error.hpp"
#include "netmpc/experiments.hpp"
#include "netmpc/moments_io.hpp"
#include "netmpc/presets.hpp"
#include "netmpc/simulation.hpp"

namespace {

using namespace netmpc;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitMismatch = 2;
constexpr int kExitInternal = 3;

struct SourceFlags {
  std::string config;
  std::string preset;
};

struct RunFlags {
  std::vector<std::string> policies;
  bool no_stability = false;
  std::optional<double> umax;
  std::optional<int> paths, steps, threads;
  std::optional<std::uint64_t> seed;
  std::string out, traces, moments_file;
  bool generate = false;
  bool timing = false;
};

void add_source(CLI::App* cmd, SourceFlags& s) {
  auto* c = cmd->add_option("--config", s.config, "Experiment config file")->check(CLI::ExistingFile);
  auto* p = cmd->add_option("--preset", s.preset, "Built-in preset (see `netmpc preset --list`)");
  c->excludes(p);
}

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--policy", f.policies,
                  "Policy variant: full|zero|diagonal|fallback (repeatable or comma list)")
      ->delimiter(',');
  cmd->add_flag("--no-stability", f.no_stability, "Disable the drift (stability) rows");
  cmd->add_option("--umax", f.umax, "Override the input bound u_max")->check(CLI::PositiveNumber);
  cmd->add_option("--paths", f.paths, "Number of Monte-Carlo paths")->check(CLI::PositiveNumber);
  cmd->add_option("--steps", f.steps, "Simulation length T")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "Base seed (overrides NETMPC_SEED and the config)");
  cmd->add_option("--threads", f.threads, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "CSV output file (default: stdout)");
  cmd->add_option("--emit-traces", f.traces, "Write per-step mean traces to this CSV file");
  cmd->add_option("--moments", f.moments_file, "Moments file (overrides [moments] path)");
  cmd->add_flag("--generate-moments", f.generate, "Estimate moments instead of loading a file");
  cmd->add_flag("--timing", f.timing, "Fill the mean_solver_time column (not reproducible)");
}

ExperimentConfig load_source(const SourceFlags& s) {
  if (!s.config.empty()) return load_config(s.config);
  if (!s.preset.empty()) return preset_config(s.preset);
  throw InvalidArgument("one of --config or --preset is required");
}

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("NETMPC_SEED");
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  const unsigned long long s = std::strtoull(v, &end, 10);
  if (*end != '\0') throw InvalidArgument(std::string("NETMPC_SEED is not an integer: ") + v);
  return static_cast<std::uint64_t>(s);
}

void apply_run_flags(ExperimentConfig& cfg, const RunFlags& f) {
  if (auto s = env_seed()) cfg.sim.seed = *s;
  if (f.seed) cfg.sim.seed = *f.seed;
  if (f.paths) cfg.sim.paths = *f.paths;
  if (f.steps) cfg.sim.T = *f.steps;
  if (f.threads) cfg.sim.threads = *f.threads;
  if (f.no_stability) cfg.sim.stability.enabled = false;
  if (f.umax) cfg.sim.model.u_max = *f.umax;
  resolve_stability(cfg);
  if (!f.moments_file.empty()) cfg.moments.path = f.moments_file;
  if (f.generate) cfg.moments.path = "generate";
  if (cfg.sim.T % cfg.sim.model.N_r != 0) {
    std::cerr << "warning: T = " << cfg.sim.T << " is not a multiple of N_r = "
              << cfg.sim.model.N_r << "\n";
  }
}

MomentsProvider make_provider(const ExperimentConfig& cfg) {
  if (cfg.moments.path == "generate") {
    return caching_moments_provider(cfg.moments.samples, cfg.moments.seed);
  }
  auto mo = std::make_shared<const OfflineMoments>(load_moments(cfg.moments.path));
  // prepare() checks the hash against each configuration it is used with.
  return [mo](const SimConfig&) { return mo; };
}

std::vector<VariantSpec> variants_from(const RunFlags& f, const ExperimentConfig& cfg,
                                       bool sweep_defaults) {
  std::vector<VariantSpec> out;
  if (f.policies.empty()) {
    if (sweep_defaults) {
      out = {{PolicyVariant::full, true},
             {PolicyVariant::zero, true},
             {PolicyVariant::diagonal, true},
             {PolicyVariant::full, false}};
    } else {
      out.push_back({cfg.sim.variant, cfg.sim.stability.enabled});
    }
  } else {
    for (const auto& p : f.policies) out.push_back({parse_variant(p), cfg.sim.stability.enabled});
  }
  if (!cfg.sim.stability.enabled) {
    // Deduplicate variants that collapse once stability is off.
    std::vector<VariantSpec> uniq;
    for (auto v : out) {
      v.stability = false;
      bool seen = false;
      for (const auto& u : uniq) seen = seen || u.policy == v.policy;
      if (!seen) uniq.push_back(v);
    }
    out = uniq;
  }
  return out;
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw InvalidArgument("cannot write '" + path + "'");
  return file;
}

void write_traces(const std::string& path, const std::vector<SweepRow>& rows) {
  std::ofstream f(path);
  if (!f) throw InvalidArgument("cannot write '" + path + "'");
  f << "param,value,variant,t,mean_sq_norm,mean_norm\n";
  for (const auto& r : rows) {
    for (std::size_t t = 0; t < r.stats.mean_sq_trace.size(); ++t) {
      f << r.param << "," << format_g(r.value) << "," << r.variant << "," << t << ","
        << format_g(r.stats.mean_sq_trace[t]) << "," << format_g(r.stats.mean_norm_trace[t])
        << "\n";
    }
  }
}

int cmd_moments(const SourceFlags& src, const std::string& out, std::optional<long> samples,
                std::optional<std::uint64_t> seed) {
  ExperimentConfig cfg = load_source(src);
  if (samples) cfg.moments.samples = *samples;
  if (seed) cfg.moments.seed = *seed;
  const SimConfig& s = cfg.sim;
  const OfflineMoments mo =
      estimate_moments(s.model, s.sensor, s.control, s.sat, cfg.moments.samples, cfg.moments.seed);
  std::ofstream file;
  write_moments(open_out(out, file), mo);
  return kExitOk;
}

int cmd_run(const SourceFlags& src, const RunFlags& f, bool is_sweep, const std::string& param,
            const std::vector<double>& values) {
  ExperimentConfig cfg = load_source(src);
  apply_run_flags(cfg, f);
  const MomentsProvider provider = make_provider(cfg);
  const std::vector<VariantSpec> variants = variants_from(f, cfg, is_sweep);
  std::vector<SweepRow> rows;
  if (is_sweep) {
    rows = sweep(cfg.sim, parse_sweep_param(param), values, variants, provider,
                 [](const SweepRow& r) {
                   std::cerr << r.param << "=" << format_g(r.value) << " " << r.variant
                             << " msb=" << format_g(r.stats.empirical_msb)
                             << " msb_pathmax=" << format_g(r.stats.path_max_msb) << "\n";
                 });
  } else {
    SimConfig base = cfg.sim;
    const double u = base.model.u_max;
    // A u_max "sweep" at the configured value keeps zeta unchanged.
    rows = sweep(base, SweepParam::u_max, {u}, variants, provider);
  }
  std::ofstream file;
  write_sweep_csv(open_out(f.out, file), rows, f.timing);
  if (!f.traces.empty()) write_traces(f.traces, rows);
  return kExitOk;
}

int cmd_reproduce(const std::string& fig, const std::string& out_dir, const RunFlags& f,
                  std::optional<long> samples) {
  ReproduceOptions o;
  if (f.paths) o.paths = *f.paths;
  if (f.steps) o.T = *f.steps;
  if (auto s = env_seed()) o.seed = *s;
  if (f.seed) o.seed = *f.seed;
  if (f.threads) o.threads = *f.threads;
  if (samples) o.moment_samples = *samples;
  o.progress = [](const std::string& m) { std::cerr << m << "\n"; };
  const FigureResult res = reproduce(fig, o);
  std::filesystem::create_directories(out_dir);
  for (const auto& c : res.curves) {
    const std::string path = out_dir + "/" + res.id + "_" + c.label + ".csv";
    std::ofstream file(path);
    if (!file) throw InvalidArgument("cannot write '" + path + "'");
    write_curve_csv(file, c);
    std::cerr << "wrote " << path << "\n";
  }
  write_comparison(std::cout, res);
  return kExitOk;
}

int cmd_inspect(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  std::string first;
  std::getline(in, first);
  in.seekg(0);
  if (first.rfind("netmpc-moments", 0) == 0) {
    describe_moments(std::cout, read_moments(in));
    return kExitOk;
  }
  ExperimentConfig cfg = parse_config(in, path);
  resolve_stability(cfg);
  const SimConfig& s = cfg.sim;
  const ValidationReport rep = validate_model(s.model);
  std::cout << "model: d=" << s.model.d() << " m=" << s.model.m() << " q=" << s.model.q()
            << " N=" << s.model.N << " N_r=" << s.model.N_r << "\n";
  std::cout << rep.summary();
  const Decomposition dec = decompose(s.model, s.orthogonal_dim);
  std::cout << "orthogonal dim " << dec.d_o() << ", reachability index " << dec.kappa << "\n";
  std::cout << "stability: " << (s.stability.enabled ? "on" : "off") << " r=" << format_g(s.stability.r)
            << " zeta=" << format_g(s.stability.zeta)
            << " (max zeta " << format_g(max_zeta(dec, s.model.u_max)) << ")\n";
  std::cout << "moments hash " << hash_hex(moments_hash(s.model, s.sensor, s.control, s.sat))
            << "\n";
  return kExitOk;
}

int cmd_preset(const std::string& name, bool list, const std::string& out) {
  if (list || name.empty()) {
    for (const auto& n : preset_names()) std::cout << n << "  " << find_preset(n).description << "\n";
    return kExitOk;
  }
  std::ofstream file;
  write_config(open_out(out, file), preset_config(name));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic MPC over unreliable sensor and control channels"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "netmpc 0.1.0");

  SourceFlags src;
  RunFlags rf;
  std::string out, out_dir, param, fig, inspect_path, preset_name;
  std::vector<double> values;
  std::optional<long> samples;
  std::optional<std::uint64_t> moments_seed;
  bool list = false;

  auto* moments = app.add_subcommand("moments", "Estimate offline moments and write them to a file");
  add_source(moments, src);
  moments->add_option("--out", out, "Output file (default: stdout)");
  moments->add_option("--samples", samples, "Monte-Carlo samples (overrides the config)");
  moments->add_option("--seed", moments_seed, "Moments seed (overrides the config)");

  auto* run = app.add_subcommand("run", "Closed-loop Monte-Carlo run, one CSV row per policy");
  add_source(run, src);
  add_run_flags(run, rf);

  auto* sw = app.add_subcommand("sweep", "Sweep one parameter over a list of values");
  add_source(sw, src);
  add_run_flags(sw, rf);
  sw->add_option("--param", param, "u_max|p_c|p_s|p_gc|p_gs")->required();
  sw->add_option("--values", values, "Comma-separated values")->delimiter(',')->required();

  auto* rep = app.add_subcommand("reproduce", "Reproduce a reference figure as CSV files");
  rep->add_option("figure", fig, "fig2..fig8, fig10, fig11, fig12, correlated")->required();
  rep->add_option("--out", out_dir, "Output directory")->default_val("results");
  rep->add_option("--paths", rf.paths, "Paths per point")->check(CLI::PositiveNumber);
  rep->add_option("--steps", rf.steps, "Simulation length T")->check(CLI::PositiveNumber);
  rep->add_option("--seed", rf.seed, "Base seed");
  rep->add_option("--threads", rf.threads, "Worker threads")->check(CLI::PositiveNumber);
  rep->add_option("--samples", samples, "Moment samples per configuration");

  auto* ins = app.add_subcommand("inspect", "Describe a moments file or a config file");
  ins->add_option("file", inspect_path, "Moments or config file")->required()->check(CLI::ExistingFile);

  auto* pre = app.add_subcommand("preset", "Print a preset as a config file");
  pre->add_option("name", preset_name, "Preset name");
  pre->add_flag("--list", list, "List presets");
  pre->add_option("--out", out, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*moments) return cmd_moments(src, out, samples, moments_seed);
    if (*run) return cmd_run(src, rf, false, "", {});
    if (*sw) return cmd_run(src, rf, true, param, values);
    if (*rep) return cmd_reproduce(fig, out_dir, rf, samples);
    if (*ins) return cmd_inspect(inspect_path);
    if (*pre) return cmd_preset(preset_name, list, out);
  } catch (const DataMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMismatch;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
