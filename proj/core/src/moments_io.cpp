#include "netmpc/moments_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "netmpc/error.hpp"

namespace netmpc {
namespace {

constexpr const char* kMagic = "netmpc-moments";
constexpr int kVersion = 1;

class Fnv1a {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= c[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void num(double v) {
    if (v == 0.0) v = 0.0;  // fold -0
    bytes(&v, sizeof v);
  }
  void num(long v) { bytes(&v, sizeof v); }
  void mat(const MatrixXd& M) {
    num(static_cast<long>(M.rows()));
    num(static_cast<long>(M.cols()));
    for (Eigen::Index i = 0; i < M.rows(); ++i)
      for (Eigen::Index j = 0; j < M.cols(); ++j) num(M(i, j));
  }
  void channel(const ChannelSpec& c) {
    num(static_cast<long>(c.kind));
    if (c.kind == ChannelSpec::Kind::bernoulli) {
      num(c.p);
    } else {
      num(c.p_gb);
      num(c.p_bg);
      num(c.p_good);
      num(c.p_bad);
    }
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

struct Named {
  const char* name;
  MatrixXd OfflineMoments::*field;
};

const Named kFields[] = {
    {"mu_G", &OfflineMoments::mu_G},           {"Sigma_G", &OfflineMoments::Sigma_G},
    {"mu_S", &OfflineMoments::mu_S},           {"Sigma_S", &OfflineMoments::Sigma_S},
    {"Sigma_GS", &OfflineMoments::Sigma_GS},   {"Sigma_psi", &OfflineMoments::Sigma_psi},
    {"Sigma_psi_w", &OfflineMoments::Sigma_psi_w},
    {"Sigma_e_psi", &OfflineMoments::Sigma_e_psi},
};

std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

[[noreturn]] void bad(const std::string& what) {
  throw InvalidArgument("moments file: " + what);
}

}  // namespace

std::uint64_t moments_hash(const SystemModel& model, const ChannelSpec& sensor,
                           const ChannelSpec& control, const SaturatorSpec& sat) {
  Fnv1a h;
  h.bytes(kMagic, 14);
  h.mat(model.A);
  h.mat(model.B);
  h.mat(model.C);
  h.mat(model.Sigma_w);
  h.mat(model.Sigma_v);
  h.mat(model.Q);
  h.mat(model.Q_N);
  h.mat(model.R);
  h.num(static_cast<long>(model.N));
  h.num(static_cast<long>(model.N_r));
  h.channel(sensor);
  h.channel(control);
  h.num(static_cast<long>(sat.kind));
  h.num(sat.psi_max);
  return h.value();
}

std::string hash_hex(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

void write_moments(std::ostream& os, const OfflineMoments& m) {
  os << kMagic << ' ' << kVersion << '\n';
  os << "model_hash " << hash_hex(m.model_hash) << '\n';
  os << "seed " << m.seed << '\n';
  os << "samples " << m.sample_count << '\n';
  os << "dims " << m.d << ' ' << m.m << ' ' << m.q << ' ' << m.N << ' ' << m.N_r << '\n';
  for (const auto& f : kFields) {
    const MatrixXd& M = m.*(f.field);
    os << "matrix " << f.name << ' ' << M.rows() << ' ' << M.cols() << '\n';
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      for (Eigen::Index j = 0; j < M.cols(); ++j) os << (j ? " " : "") << hexfloat(M(i, j));
      os << '\n';
    }
  }
}

OfflineMoments read_moments(std::istream& is) {
  OfflineMoments m;
  std::string tok;
  int version = 0;
  if (!(is >> tok >> version) || tok != kMagic) bad("missing header");
  if (version != kVersion) bad("unsupported version " + std::to_string(version));
  std::string hash;
  if (!(is >> tok >> hash) || tok != "model_hash") bad("missing model_hash");
  m.model_hash = std::stoull(hash, nullptr, 16);
  if (!(is >> tok >> m.seed) || tok != "seed") bad("missing seed");
  if (!(is >> tok >> m.sample_count) || tok != "samples") bad("missing samples");
  if (!(is >> tok >> m.d >> m.m >> m.q >> m.N >> m.N_r) || tok != "dims") bad("missing dims");
  for (const auto& f : kFields) {
    std::string name;
    long r = 0, c = 0;
    if (!(is >> tok >> name >> r >> c) || tok != "matrix" || name != f.name)
      bad(std::string("expected matrix ") + f.name);
    MatrixXd M(r, c);
    for (long i = 0; i < r; ++i)
      for (long j = 0; j < c; ++j) {
        std::string v;
        if (!(is >> v)) bad(std::string("truncated matrix ") + f.name);
        M(i, j) = std::strtod(v.c_str(), nullptr);
      }
    m.*(f.field) = M;
  }
  return m;
}

void save_moments(const std::string& path, const OfflineMoments& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot write moments file '" + path + "'");
  write_moments(os, m);
}

OfflineMoments load_moments(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot read moments file '" + path + "'");
  return read_moments(is);
}

void describe_moments(std::ostream& os, const OfflineMoments& m) {
  os << "model_hash " << hash_hex(m.model_hash) << "\nseed " << m.seed << "\nsamples "
     << m.sample_count << "\ndims d=" << m.d << " m=" << m.m << " q=" << m.q << " N=" << m.N
     << " N_r=" << m.N_r << '\n';
  Eigen::IOFormat fmt(6, 0, " ", "\n", "  ", "");
  for (const auto& f : kFields) {
    const MatrixXd& M = m.*(f.field);
    os << f.name << " (" << M.rows() << "x" << M.cols() << ")\n";
    if (M.size() > 0) os << M.format(fmt) << '\n';
  }
}

}  // namespace netmpc
