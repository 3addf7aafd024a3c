#include "netmpc/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "netmpc/error.hpp"
#include "netmpc/presets.hpp"

namespace netmpc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Entry {
  std::string value;
  int line = 0;
};

class Context {
 public:
  Context(std::string source, std::string section, std::string key, int line)
      : source_(std::move(source)), section_(std::move(section)), key_(std::move(key)),
        line_(line) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw InvalidArgument(source_ + ":" + std::to_string(line_) + ": [" + section_ + "] " +
                          key_ + ": " + what);
  }

  double number(const std::string& s) const {
    const std::string t = trim(s);
    if (t.empty()) fail("expected a number");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(t.c_str(), &end);
    if (errno != 0 || end != t.c_str() + t.size()) fail("invalid number '" + t + "'");
    return v;
  }

  long integer(const std::string& s) const {
    const double v = number(s);
    if (v != static_cast<double>(static_cast<long>(v))) fail("expected an integer");
    return static_cast<long>(v);
  }

  bool boolean(const std::string& s) const {
    const std::string t = trim(s);
    if (t == "true" || t == "on" || t == "1") return true;
    if (t == "false" || t == "off" || t == "0") return false;
    fail("expected true or false");
  }

  MatrixXd matrix(const std::string& s) const {
    std::string t = trim(s);
    // k*eye(n) or eye(n)
    const auto eye_pos = t.find("eye(");
    if (eye_pos != std::string::npos) {
      double k = 1.0;
      if (eye_pos > 0) {
        std::string pre = trim(t.substr(0, eye_pos));
        if (pre.empty() || pre.back() != '*') fail("expected k*eye(n)");
        pre.pop_back();
        k = number(pre);
      }
      if (t.back() != ')') fail("expected eye(n)");
      const long n = integer(t.substr(eye_pos + 4, t.size() - eye_pos - 5));
      if (n < 1) fail("eye dimension must be positive");
      return k * MatrixXd::Identity(n, n);
    }
    const auto open = t.find('[');
    if (open == std::string::npos || t.back() != ']') fail("expected 'RxC [ ... ]' or eye(n)");
    const std::string dims = trim(t.substr(0, open));
    const auto x = dims.find('x');
    if (x == std::string::npos) fail("matrix needs explicit dimensions 'RxC'");
    const long rows = integer(dims.substr(0, x));
    const long cols = integer(dims.substr(x + 1));
    if (rows < 1 || cols < 1) fail("matrix dimensions must be positive");
    const std::string body = t.substr(open + 1, t.size() - open - 2);
    std::vector<std::vector<double>> data;
    std::stringstream rows_ss(body);
    std::string row;
    while (std::getline(rows_ss, row, ';')) {
      std::stringstream vals(row);
      std::vector<double> r;
      std::string tok;
      while (vals >> tok) r.push_back(number(tok));
      data.push_back(std::move(r));
    }
    if (static_cast<long>(data.size()) != rows) {
      fail("declared " + std::to_string(rows) + " rows, found " + std::to_string(data.size()));
    }
    MatrixXd M(rows, cols);
    for (long i = 0; i < rows; ++i) {
      if (static_cast<long>(data[i].size()) != cols) {
        fail("row " + std::to_string(i + 1) + " has " + std::to_string(data[i].size()) +
             " entries, expected " + std::to_string(cols));
      }
      for (long j = 0; j < cols; ++j) M(i, j) = data[i][j];
    }
    return M;
  }

 private:
  std::string source_, section_, key_;
  int line_;
};

using Section = std::map<std::string, Entry>;

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"experiment", {"name"}},
      {"system", {"A", "B", "C", "sigma_w", "sigma_v", "sigma_x0", "orthogonal_dim"}},
      {"cost", {"Q", "Q_N", "R"}},
      {"horizon", {"N", "N_r"}},
      {"control", {"u_max", "saturator", "psi_max", "policy"}},
      {"channels",
       {"sensor", "control", "sensor_p", "sensor_p_gb", "sensor_p_bg", "sensor_p_good",
        "sensor_p_bad", "control_p", "control_p_gb", "control_p_bg", "control_p_good",
        "control_p_bad"}},
      {"stability", {"enabled", "r", "zeta"}},
      {"simulation", {"T", "paths", "seed", "threads"}},
      {"moments", {"samples", "seed", "path"}},
  };
  return s;
}

ChannelSpec read_channel(const std::map<std::string, Section>& doc, const std::string& source,
                         const std::string& which) {
  ChannelSpec spec;
  auto it = doc.find("channels");
  if (it == doc.end()) return spec;
  const Section& sec = it->second;
  auto get = [&](const std::string& key, double def) {
    auto e = sec.find(key);
    if (e == sec.end()) return def;
    return Context(source, "channels", key, e->second.line).number(e->second.value);
  };
  auto kind = sec.find(which);
  const std::string k = kind == sec.end() ? "bernoulli" : trim(kind->second.value);
  const int line = kind == sec.end() ? 0 : kind->second.line;
  if (k == "bernoulli") {
    spec = ChannelSpec::bernoulli(get(which + "_p", 1.0));
    for (const char* bad : {"_p_gb", "_p_bg", "_p_good", "_p_bad"}) {
      auto e = sec.find(which + bad);
      if (e != sec.end()) {
        Context(source, "channels", which + bad, e->second.line)
            .fail("only valid for gilbert_elliott channels");
      }
    }
  } else if (k == "gilbert_elliott") {
    auto e = sec.find(which + "_p");
    if (e != sec.end()) {
      Context(source, "channels", which + "_p", e->second.line)
          .fail("only valid for bernoulli channels");
    }
    spec = ChannelSpec::gilbert_elliott(get(which + "_p_gb", 0.0), get(which + "_p_bg", 1.0),
                                        get(which + "_p_good", 1.0), get(which + "_p_bad", 0.0));
  } else {
    Context(source, "channels", which, line).fail("unknown channel kind '" + k + "'");
  }
  try {
    spec.validate();
  } catch (const InvalidArgument& ex) {
    Context(source, "channels", which, line).fail(ex.what());
  }
  return spec;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string matrix_literal(const MatrixXd& M) {
  std::string s = std::to_string(M.rows()) + "x" + std::to_string(M.cols()) + " [";
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    if (i > 0) s += "; ";
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j > 0) s += " ";
      s += fmt17(M(i, j));
    }
  }
  return s + "]";
}

void write_channel(std::ostream& os, const std::string& which, const ChannelSpec& c) {
  if (c.kind == ChannelSpec::Kind::bernoulli) {
    os << which << " = bernoulli\n" << which << "_p = " << fmt17(c.p) << "\n";
  } else {
    os << which << " = gilbert_elliott\n"
       << which << "_p_gb = " << fmt17(c.p_gb) << "\n"
       << which << "_p_bg = " << fmt17(c.p_bg) << "\n"
       << which << "_p_good = " << fmt17(c.p_good) << "\n"
       << which << "_p_bad = " << fmt17(c.p_bad) << "\n";
  }
}

}  // namespace

ExperimentConfig parse_config(std::istream& is, const std::string& source) {
  std::map<std::string, Section> doc;
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw InvalidArgument(source + ":" + std::to_string(lineno) + ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (!schema().count(section)) {
        throw InvalidArgument(source + ":" + std::to_string(lineno) + ": unknown section [" +
                              section + "]");
      }
      doc[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    if (section.empty()) {
      throw InvalidArgument(source + ":" + std::to_string(lineno) + ": key outside of a section");
    }
    const std::string key = trim(line.substr(0, eq));
    if (!schema().at(section).count(key)) {
      throw InvalidArgument(source + ":" + std::to_string(lineno) + ": [" + section +
                            "] unknown key '" + key + "'");
    }
    if (doc[section].count(key)) {
      Context(source, section, key, lineno).fail("duplicate key");
    }
    doc[section][key] = Entry{trim(line.substr(eq + 1)), lineno};
  }

  auto find = [&](const std::string& sec, const std::string& key) -> const Entry* {
    auto s = doc.find(sec);
    if (s == doc.end()) return nullptr;
    auto e = s->second.find(key);
    return e == s->second.end() ? nullptr : &e->second;
  };
  auto ctx = [&](const std::string& sec, const std::string& key) {
    const Entry* e = find(sec, key);
    return Context(source, sec, key, e ? e->line : 0);
  };
  auto required = [&](const std::string& sec, const std::string& key) -> const Entry& {
    const Entry* e = find(sec, key);
    if (!e) Context(source, sec, key, 0).fail("missing required key");
    return *e;
  };
  auto mat = [&](const std::string& sec, const std::string& key) {
    return ctx(sec, key).matrix(required(sec, key).value);
  };

  ExperimentConfig cfg;
  if (const Entry* e = find("experiment", "name")) cfg.name = e->value;
  SimConfig& sim = cfg.sim;
  SystemModel& m = sim.model;
  m.A = mat("system", "A");
  m.B = mat("system", "B");
  m.C = mat("system", "C");
  m.Sigma_w = mat("system", "sigma_w");
  m.Sigma_v = mat("system", "sigma_v");
  m.Sigma_x0 = find("system", "sigma_x0") ? mat("system", "sigma_x0")
                                          : MatrixXd::Identity(m.A.rows(), m.A.rows());
  if (const Entry* e = find("system", "orthogonal_dim")) {
    if (e->value != "auto") sim.orthogonal_dim = static_cast<int>(ctx("system", "orthogonal_dim").integer(e->value));
  }
  m.Q = mat("cost", "Q");
  m.Q_N = mat("cost", "Q_N");
  m.R = mat("cost", "R");
  m.N = static_cast<int>(ctx("horizon", "N").integer(required("horizon", "N").value));
  m.N_r = find("horizon", "N_r")
              ? static_cast<int>(ctx("horizon", "N_r").integer(find("horizon", "N_r")->value))
              : 1;
  if (m.N < 1) ctx("horizon", "N").fail("must be at least 1");
  if (m.N_r < 1 || m.N_r > m.N) ctx("horizon", "N_r").fail("must be in [1, N]");
  m.u_max = ctx("control", "u_max").number(required("control", "u_max").value);
  if (!(m.u_max > 0)) ctx("control", "u_max").fail("must be positive");
  if (const Entry* e = find("control", "saturator")) {
    if (e->value == "sigmoid") sim.sat.kind = SaturatorSpec::Kind::sigmoid;
    else if (e->value == "clamp") sim.sat.kind = SaturatorSpec::Kind::clamp;
    else ctx("control", "saturator").fail("expected sigmoid or clamp");
  }
  if (const Entry* e = find("control", "psi_max")) {
    sim.sat.psi_max = ctx("control", "psi_max").number(e->value);
    if (!(sim.sat.psi_max > 0)) ctx("control", "psi_max").fail("must be positive");
  }
  if (const Entry* e = find("control", "policy")) {
    try {
      sim.variant = parse_variant(e->value);
    } catch (const InvalidArgument& ex) {
      ctx("control", "policy").fail(ex.what());
    }
  }
  sim.sensor = read_channel(doc, source, "sensor");
  sim.control = read_channel(doc, source, "control");

  sim.stability.enabled = false;
  if (const Entry* e = find("stability", "enabled")) {
    sim.stability.enabled = ctx("stability", "enabled").boolean(e->value);
  }
  if (const Entry* e = find("stability", "r"); e && e->value != "auto") {
    cfg.r_auto = false;
    sim.stability.r = ctx("stability", "r").number(e->value);
    if (!(sim.stability.r > 0)) ctx("stability", "r").fail("must be positive");
  }
  if (const Entry* e = find("stability", "zeta"); e && e->value != "auto") {
    cfg.zeta_auto = false;
    sim.stability.zeta = ctx("stability", "zeta").number(e->value);
    if (!(sim.stability.zeta > 0)) ctx("stability", "zeta").fail("must be positive");
  }

  if (const Entry* e = find("simulation", "T")) {
    sim.T = static_cast<int>(ctx("simulation", "T").integer(e->value));
    if (sim.T < 1) ctx("simulation", "T").fail("must be at least 1");
  }
  if (const Entry* e = find("simulation", "paths")) {
    sim.paths = static_cast<int>(ctx("simulation", "paths").integer(e->value));
    if (sim.paths < 1) ctx("simulation", "paths").fail("must be at least 1");
  }
  if (const Entry* e = find("simulation", "seed")) {
    const long s = ctx("simulation", "seed").integer(e->value);
    if (s < 0) ctx("simulation", "seed").fail("must be non-negative");
    sim.seed = static_cast<std::uint64_t>(s);
  }
  if (const Entry* e = find("simulation", "threads")) {
    sim.threads = static_cast<int>(ctx("simulation", "threads").integer(e->value));
    if (sim.threads < 1) ctx("simulation", "threads").fail("must be at least 1");
  }
  if (const Entry* e = find("moments", "samples")) {
    cfg.moments.samples = ctx("moments", "samples").integer(e->value);
  }
  if (const Entry* e = find("moments", "seed")) {
    const long s = ctx("moments", "seed").integer(e->value);
    if (s < 0) ctx("moments", "seed").fail("must be non-negative");
    cfg.moments.seed = static_cast<std::uint64_t>(s);
  }
  if (const Entry* e = find("moments", "path")) cfg.moments.path = e->value;

  // Dimension consistency is checked here so errors point at the config.
  const auto d = m.A.rows();
  if (m.A.cols() != d) ctx("system", "A").fail("must be square");
  if (m.B.rows() != d) ctx("system", "B").fail("must have as many rows as A");
  if (m.C.cols() != d) ctx("system", "C").fail("must have as many columns as A");
  auto square = [&](const MatrixXd& M, long n, const char* sec, const char* key) {
    if (M.rows() != n || M.cols() != n) {
      ctx(sec, key).fail("must be " + std::to_string(n) + "x" + std::to_string(n));
    }
  };
  square(m.Sigma_w, d, "system", "sigma_w");
  square(m.Sigma_v, m.C.rows(), "system", "sigma_v");
  square(m.Sigma_x0, d, "system", "sigma_x0");
  square(m.Q, d, "cost", "Q");
  square(m.Q_N, d, "cost", "Q_N");
  square(m.R, m.B.cols(), "cost", "R");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

void write_config(std::ostream& os, const ExperimentConfig& cfg) {
  const SimConfig& sim = cfg.sim;
  const SystemModel& m = sim.model;
  if (!cfg.name.empty()) os << "[experiment]\nname = " << cfg.name << "\n\n";
  os << "[system]\n"
     << "A = " << matrix_literal(m.A) << "\n"
     << "B = " << matrix_literal(m.B) << "\n"
     << "C = " << matrix_literal(m.C) << "\n"
     << "sigma_w = " << matrix_literal(m.Sigma_w) << "\n"
     << "sigma_v = " << matrix_literal(m.Sigma_v) << "\n"
     << "sigma_x0 = " << matrix_literal(m.Sigma_x0) << "\n"
     << "orthogonal_dim = "
     << (sim.orthogonal_dim ? std::to_string(*sim.orthogonal_dim) : std::string("auto"))
     << "\n\n";
  os << "[cost]\n"
     << "Q = " << matrix_literal(m.Q) << "\n"
     << "Q_N = " << matrix_literal(m.Q_N) << "\n"
     << "R = " << matrix_literal(m.R) << "\n\n";
  os << "[horizon]\nN = " << m.N << "\nN_r = " << m.N_r << "\n\n";
  os << "[control]\n"
     << "u_max = " << fmt17(m.u_max) << "\n"
     << "saturator = " << (sim.sat.kind == SaturatorSpec::Kind::sigmoid ? "sigmoid" : "clamp")
     << "\n"
     << "psi_max = " << fmt17(sim.sat.psi_max) << "\n"
     << "policy = " << to_string(sim.variant) << "\n\n";
  os << "[channels]\n";
  write_channel(os, "sensor", sim.sensor);
  write_channel(os, "control", sim.control);
  os << "\n[stability]\n"
     << "enabled = " << (sim.stability.enabled ? "true" : "false") << "\n"
     << "r = " << (cfg.r_auto ? std::string("auto") : fmt17(sim.stability.r)) << "\n"
     << "zeta = " << (cfg.zeta_auto ? std::string("auto") : fmt17(sim.stability.zeta))
     << "\n\n";
  os << "[simulation]\nT = " << sim.T << "\npaths = " << sim.paths << "\nseed = " << sim.seed
     << "\nthreads = " << sim.threads << "\n\n";
  os << "[moments]\nsamples = " << cfg.moments.samples << "\nseed = " << cfg.moments.seed
     << "\npath = " << cfg.moments.path << "\n";
}

void resolve_stability(ExperimentConfig& cfg) {
  if (!cfg.r_auto && !cfg.zeta_auto) return;
  const Decomposition dec = decompose(cfg.sim.model, cfg.sim.orthogonal_dim);
  const StabilityParams def = default_stability(cfg.sim.model, dec);
  if (cfg.r_auto) cfg.sim.stability.r = def.r;
  if (cfg.zeta_auto) cfg.sim.stability.zeta = def.zeta;
}

ExperimentConfig preset_config(const std::string& name) {
  Preset p = find_preset(name);
  ExperimentConfig cfg;
  cfg.name = p.name;
  cfg.sim = p.config;
  cfg.r_auto = true;
  cfg.zeta_auto = true;
  return cfg;
}

}  // namespace netmpc
