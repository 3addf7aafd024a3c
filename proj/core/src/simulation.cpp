#include "netmpc/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <thread>

#include "netmpc/error.hpp"
#include "netmpc/estimation.hpp"
#include "netmpc/filtering.hpp"
#include "netmpc/moments_io.hpp"

namespace netmpc {

SimSetup prepare(const SimConfig& cfg, std::shared_ptr<const OfflineMoments> moments) {
  if (cfg.paths < 1) throw InvalidArgument("paths must be at least 1");
  if (cfg.T < 1) throw InvalidArgument("steps must be at least 1");
  const ValidationReport rep = validate_model(cfg.model);
  if (!rep.ok()) throw InvalidArgument("model violates standing assumptions:\n" + rep.summary());
  cfg.sensor.validate();
  cfg.control.validate();
  SimSetup s;
  s.cfg = cfg;
  s.dec = decompose(cfg.model, cfg.orthogonal_dim);
  s.stacked = stack(cfg.model);
  if (!moments) throw InvalidArgument("moments are required");
  const std::uint64_t h = moments_hash(cfg.model, cfg.sensor, cfg.control, cfg.sat);
  if (moments->model_hash != h)
    throw DataMismatch("moments were generated for a different model (hash " +
                       hash_hex(moments->model_hash) + ", expected " + hash_hex(h) + ")");
  s.moments = std::move(moments);
  return s;
}

PathResult run_path(const SimSetup& setup, int path_index) {
  const SimConfig& cfg = setup.cfg;
  const SystemModel& M = cfg.model;
  const int T = cfg.T, Nr = M.N_r, m = M.m();
  const auto pid = static_cast<std::uint64_t>(path_index);
  RngStream r_x0(cfg.seed, stream_id(pid, StreamRole::initial_state));
  RngStream r_w(cfg.seed, stream_id(pid, StreamRole::process_noise));
  RngStream r_v(cfg.seed, stream_id(pid, StreamRole::measurement_noise));
  RngStream r_s(cfg.seed, stream_id(pid, StreamRole::sensor_channel));
  RngStream r_c(cfg.seed, stream_id(pid, StreamRole::control_channel));
  Channel sensor(cfg.sensor), control(cfg.control);
  const MatrixXd Lx0 = psd_sqrt(M.Sigma_x0);
  const MatrixXd Lw = psd_sqrt(M.Sigma_w);
  const MatrixXd Lv = psd_sqrt(M.Sigma_v);

  ControllerConfig cc;
  cc.variant = cfg.variant;
  cc.stability = cfg.stability;
  cc.sat = cfg.sat;
  cc.qp = cfg.qp;
  Controller controller(M, setup.dec, setup.stacked, *setup.moments, cc);

  PathResult res;
  res.x_norm_sq.reserve(T + 1);
  res.u_norm_sq.reserve(T);
  res.est_err_sq.reserve(T + 1);

  VectorXd x = r_x0.gaussian(Lx0);
  VectorXd y = M.C * x + r_v.gaussian(Lv);
  KalmanStep kf = kf_initialize(M, y);
  EstimatorState est = estimator_init(M);
  {
    const int s = sensor.sample(r_s);
    res.sensor_bits.push_back(static_cast<char>(s));
    est = remote_update(est, s, s ? std::optional<SensorPacket>({kf.state.x_hat, y}) : std::nullopt,
                        VectorXd::Zero(m), M);
  }
  res.est_err_sq.push_back((kf.state.x_hat - est.x_tilde).squaredNorm());

  PolicyParams params;
  ActuatorBuffer buffer;
  std::vector<VectorXd> received;
  for (int t = 0; t < T; ++t) {
    const int l = t % Nr;
    if (l == 0) {
      const Controller::Plan plan = controller.plan(t, est.x_tilde, est.received_innovation);
      params = plan.params;
      if (plan.solved_qp) {
        res.solve_times.push_back(plan.solve_time);
        res.fallback.push_back(static_cast<char>(plan.used_fallback));
      }
      buffer.clear();
      received.clear();
    }
    received.push_back(est.received_innovation);
    const VectorXd u_tx = evaluate_step(params, l, received, cfg.sat);
    std::vector<VectorXd> tail;
    for (int k = l + 1; k < Nr; ++k) tail.push_back(params.eta.segment(k * m, m));
    const int nu = control.sample(r_c);
    res.control_bits.push_back(static_cast<char>(nu));
    ProtocolOutput po = protocol_step(buffer, nu, l, Nr, u_tx, tail);
    buffer = std::move(po.buffer);
    const VectorXd& ua = po.u_applied;

    res.x_norm_sq.push_back(x.squaredNorm());
    res.u_norm_sq.push_back(ua.squaredNorm());
    if (cfg.keep_traces) {
      res.x.push_back(x);
      res.x_tilde.push_back(est.x_tilde);
    }

    x = M.A * x + M.B * ua + r_w.gaussian(Lw);
    y = M.C * x + r_v.gaussian(Lv);
    kf = kf_predict_update(kf.state, ua, y, M);
    const int s = sensor.sample(r_s);
    res.sensor_bits.push_back(static_cast<char>(s));
    est = remote_update(est, s, s ? std::optional<SensorPacket>({kf.state.x_hat, y}) : std::nullopt,
                        ua, M);
    res.est_err_sq.push_back((kf.state.x_hat - est.x_tilde).squaredNorm());
  }
  res.x_norm_sq.push_back(x.squaredNorm());
  if (cfg.keep_traces) {
    res.x.push_back(x);
    res.x_tilde.push_back(est.x_tilde);
  }
  return res;
}

std::vector<PathResult> run_paths(const SimSetup& setup) {
  const int P = setup.cfg.paths;
  std::vector<PathResult> out(P);
  const int nthreads = std::max(1, std::min(setup.cfg.threads, P));
  if (nthreads == 1) {
    for (int i = 0; i < P; ++i) out[i] = run_path(setup, i);
    return out;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < nthreads; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < P; i = next++) {
        try {
          out[i] = run_path(setup, i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
  return out;
}

namespace {

double max_path_mean(const MatrixXd& X, const std::vector<int>& idx, int* argmax = nullptr) {
  const Eigen::Index T1 = X.cols();
  double best = -1.0;
  for (Eigen::Index t = 0; t < T1; ++t) {
    double s = 0.0;
    for (int i : idx) s += X(i, t);
    s /= static_cast<double>(idx.size());
    if (s > best) {
      best = s;
      if (argmax) *argmax = static_cast<int>(t);
    }
  }
  return best;
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

constexpr int kBootstrapResamples = 200;

}  // namespace

AggregateStats aggregate(const std::vector<PathResult>& paths, std::uint64_t bootstrap_seed) {
  AggregateStats a;
  a.paths = static_cast<int>(paths.size());
  if (paths.empty()) return a;
  a.T = static_cast<int>(paths.front().u_norm_sq.size());
  const int P = a.paths, T1 = a.T + 1;
  a.path_x_sq.resize(P, T1);
  a.path_mae.resize(P);
  a.mean_sq_trace.assign(T1, 0.0);
  a.mean_norm_trace.assign(T1, 0.0);
  std::vector<double> times;
  long fallbacks = 0;
  std::vector<std::vector<double>> err;
  err.reserve(P);
  for (int i = 0; i < P; ++i) {
    const auto& pr = paths[i];
    if (static_cast<int>(pr.x_norm_sq.size()) != T1)
      throw InvalidArgument("paths have inconsistent lengths");
    for (int t = 0; t < T1; ++t) {
      a.path_x_sq(i, t) = pr.x_norm_sq[t];
      a.mean_sq_trace[t] += pr.x_norm_sq[t];
      a.mean_norm_trace[t] += std::sqrt(pr.x_norm_sq[t]);
    }
    double su = 0.0;
    for (double u : pr.u_norm_sq) su += u;
    a.path_mae(i) = a.T > 0 ? su / a.T : 0.0;
    times.insert(times.end(), pr.solve_times.begin(), pr.solve_times.end());
    for (char f : pr.fallback) fallbacks += f;
    err.push_back(pr.est_err_sq);
  }
  for (int t = 0; t < T1; ++t) {
    a.mean_sq_trace[t] /= P;
    a.mean_norm_trace[t] /= P;
  }
  std::vector<int> all(P);
  for (int i = 0; i < P; ++i) all[i] = i;
  a.empirical_msb = max_path_mean(a.path_x_sq, all, &a.msb_time);
  const VectorXd pmax = a.path_x_sq.rowwise().maxCoeff();
  a.path_max_msb = pmax.mean();
  if (P > 1)
    a.path_max_msb_se = std::sqrt((pmax.array() - a.path_max_msb).square().sum() / (P - 1.0) / P);
  a.mae = a.path_mae.mean();
  a.est_error_diag = estimation_error_diag(err);
  a.solves = static_cast<long>(times.size());
  if (!times.empty()) {
    double s = 0.0;
    for (double v : times) s += v;
    a.mean_solver_time = s / static_cast<double>(times.size());
    std::vector<double> sorted = times;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    a.median_solver_time = sorted[sorted.size() / 2];
    a.fallback_rate = static_cast<double>(fallbacks) / static_cast<double>(times.size());
  }
  if (P > 1) {
    RngStream rng(bootstrap_seed, 0xb007);
    std::vector<double> msb_bs, mae_bs;
    std::vector<int> idx(P);
    for (int b = 0; b < kBootstrapResamples; ++b) {
      double smae = 0.0;
      for (int i = 0; i < P; ++i) {
        idx[i] = static_cast<int>(rng.uniform() * P);
        smae += a.path_mae(idx[i]);
      }
      msb_bs.push_back(max_path_mean(a.path_x_sq, idx));
      mae_bs.push_back(smae / P);
    }
    a.msb_se = stddev(msb_bs);
    a.mae_se = stddev(mae_bs);
  }
  return a;
}

AggregateStats run_monte_carlo(const SimSetup& setup) {
  return aggregate(run_paths(setup), setup.cfg.seed);
}

double paired_msb_diff_se(const AggregateStats& a, const AggregateStats& b, int resamples,
                          std::uint64_t seed) {
  if (a.path_x_sq.rows() != b.path_x_sq.rows() || a.path_x_sq.cols() != b.path_x_sq.cols())
    throw InvalidArgument("paired comparison needs runs of equal shape");
  const int P = static_cast<int>(a.path_x_sq.rows());
  if (P < 2) return 0.0;
  RngStream rng(seed, 0xd1ff);
  std::vector<int> idx(P);
  std::vector<double> diffs;
  for (int r = 0; r < resamples; ++r) {
    for (int i = 0; i < P; ++i) idx[i] = static_cast<int>(rng.uniform() * P);
    diffs.push_back(max_path_mean(a.path_x_sq, idx) - max_path_mean(b.path_x_sq, idx));
  }
  return stddev(diffs);
}

double paired_path_max_diff_se(const AggregateStats& a, const AggregateStats& b) {
  if (a.path_x_sq.rows() != b.path_x_sq.rows() || a.path_x_sq.cols() != b.path_x_sq.cols())
    throw InvalidArgument("paired comparison needs runs of equal shape");
  const Eigen::Index P = a.path_x_sq.rows();
  if (P < 2) return 0.0;
  const VectorXd d = a.path_x_sq.rowwise().maxCoeff() - b.path_x_sq.rowwise().maxCoeff();
  const double m = d.mean();
  return std::sqrt((d.array() - m).square().sum() / (P - 1.0) / static_cast<double>(P));
}

std::string VariantSpec::label() const {
  return to_string(policy) + (stability ? "" : "-nostab");
}

VariantSpec VariantSpec::parse(const std::string& label) {
  VariantSpec v;
  std::string base = label;
  const std::string suffix = "-nostab";
  if (base.size() > suffix.size() && base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0) {
    v.stability = false;
    base.resize(base.size() - suffix.size());
  }
  v.policy = parse_variant(base);
  return v;
}

std::string to_string(SweepParam p) {
  switch (p) {
    case SweepParam::u_max: return "u_max";
    case SweepParam::p_c: return "p_c";
    case SweepParam::p_s: return "p_s";
    case SweepParam::p_gc: return "p_gc";
    case SweepParam::p_gs: return "p_gs";
  }
  return "unknown";
}

SweepParam parse_sweep_param(const std::string& name) {
  if (name == "u_max" || name == "umax") return SweepParam::u_max;
  if (name == "p_c") return SweepParam::p_c;
  if (name == "p_s") return SweepParam::p_s;
  if (name == "p_gc") return SweepParam::p_gc;
  if (name == "p_gs") return SweepParam::p_gs;
  throw InvalidArgument("unknown sweep parameter '" + name +
                        "' (expected u_max, p_c, p_s, p_gc or p_gs)");
}

void apply_param(SimConfig& cfg, SweepParam p, double value) {
  auto need = [](const ChannelSpec& c, ChannelSpec::Kind k, const char* what) {
    if (c.kind != k) throw InvalidArgument(std::string("cannot sweep ") + what +
                                           " on this channel kind");
  };
  switch (p) {
    case SweepParam::u_max:
      if (!(value > 0)) throw InvalidArgument("u_max must be positive");
      // Keep zeta at the same fraction of its admissible maximum.
      cfg.stability.zeta *= value / cfg.model.u_max;
      cfg.model.u_max = value;
      break;
    case SweepParam::p_c:
      need(cfg.control, ChannelSpec::Kind::bernoulli, "p_c");
      cfg.control.p = value;
      break;
    case SweepParam::p_s:
      need(cfg.sensor, ChannelSpec::Kind::bernoulli, "p_s");
      cfg.sensor.p = value;
      break;
    case SweepParam::p_gc:
      need(cfg.control, ChannelSpec::Kind::gilbert_elliott, "p_gc");
      cfg.control.p_good = value;
      break;
    case SweepParam::p_gs:
      need(cfg.sensor, ChannelSpec::Kind::gilbert_elliott, "p_gs");
      cfg.sensor.p_good = value;
      break;
  }
}

MomentsProvider caching_moments_provider(long samples, std::uint64_t seed) {
  auto cache = std::make_shared<std::map<std::uint64_t, std::shared_ptr<const OfflineMoments>>>();
  auto mu = std::make_shared<std::mutex>();
  return [=](const SimConfig& cfg) -> std::shared_ptr<const OfflineMoments> {
    const std::uint64_t h = moments_hash(cfg.model, cfg.sensor, cfg.control, cfg.sat);
    std::lock_guard<std::mutex> lk(*mu);
    auto it = cache->find(h);
    if (it != cache->end()) return it->second;
    auto mo = std::make_shared<OfflineMoments>(
        estimate_moments(cfg.model, cfg.sensor, cfg.control, cfg.sat, samples, seed));
    (*cache)[h] = mo;
    return mo;
  };
}

std::vector<SweepRow> sweep(const SimConfig& base, SweepParam param,
                            const std::vector<double>& values,
                            const std::vector<VariantSpec>& variants,
                            const MomentsProvider& moments,
                            const std::function<void(const SweepRow&)>& on_row) {
  if (values.empty()) throw InvalidArgument("sweep needs at least one value");
  if (variants.empty()) throw InvalidArgument("sweep needs at least one variant");
  std::vector<SweepRow> rows;
  for (double v : values) {
    for (const auto& var : variants) {
      SimConfig cfg = base;
      apply_param(cfg, param, v);
      cfg.variant = var.policy;
      cfg.stability.enabled = var.stability && base.stability.enabled;
      SweepRow row;
      row.param = to_string(param);
      row.value = v;
      row.variant = var.label();
      row.stats = run_monte_carlo(prepare(cfg, moments(cfg)));
      if (on_row) on_row(row);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string format_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, bool timing) {
  os << "param,value,variant,msb,mae,mean_solver_time,fallback_rate,msb_pathmax\n";
  for (const auto& r : rows)
    os << r.param << ',' << format_g(r.value) << ',' << r.variant << ','
       << format_g(r.stats.empirical_msb) << ',' << format_g(r.stats.mae) << ','
       << (timing ? format_g(r.stats.mean_solver_time) : std::string()) << ','
       << format_g(r.stats.fallback_rate) << ',' << format_g(r.stats.path_max_msb) << '\n';
}

}  // namespace netmpc
