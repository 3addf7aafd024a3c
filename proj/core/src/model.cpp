#include "netmpc/model.hpp"

#include <cmath>
#include <complex>
#include <sstream>

#include "netmpc/error.hpp"

namespace netmpc {
namespace {

using Eigen::MatrixXcd;
using cd = std::complex<double>;

// Unit-circle classification thresholds on |lambda|.
constexpr double kUnitTol = 1e-10;
constexpr double kBorderlineTol = 1e-8;
constexpr double kClusterTol = 1e-6;

int complex_rank(const MatrixXcd& M) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<MatrixXcd> svd(M);
  const auto& s = svd.singularValues();
  if (s(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > kRankTol * s(0)) ++r;
  return r;
}

// Distinct eigenvalues with algebraic multiplicities.
struct EigenCluster {
  cd value;
  int multiplicity;
};

std::vector<EigenCluster> eigen_clusters(const MatrixXd& A) {
  std::vector<EigenCluster> out;
  if (A.size() == 0) return out;
  Eigen::EigenSolver<MatrixXd> es(A, false);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const cd lam = es.eigenvalues()(i);
    bool merged = false;
    for (auto& c : out) {
      if (std::abs(c.value - lam) <= kClusterTol * std::max(1.0, std::abs(lam))) {
        ++c.multiplicity;
        merged = true;
        break;
      }
    }
    if (!merged) out.push_back({lam, 1});
  }
  return out;
}

void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

void check_dims(const SystemModel& m) {
  const auto d = m.A.rows();
  require(d > 0 && m.A.cols() == d, "A must be square and non-empty");
  require(m.B.rows() == d && m.B.cols() > 0, "B must have d rows");
  require(m.C.cols() == d && m.C.rows() > 0, "C must have d columns");
  const auto q = m.C.rows();
  const auto mm = m.B.cols();
  require(m.Sigma_w.rows() == d && m.Sigma_w.cols() == d, "Sigma_w must be d x d");
  require(m.Sigma_v.rows() == q && m.Sigma_v.cols() == q, "Sigma_v must be q x q");
  require(m.Sigma_x0.rows() == d && m.Sigma_x0.cols() == d, "Sigma_x0 must be d x d");
  require(m.Q.rows() == d && m.Q.cols() == d, "Q must be d x d");
  require(m.Q_N.rows() == d && m.Q_N.cols() == d, "Q_N must be d x d");
  require(m.R.rows() == mm && m.R.cols() == mm, "R must be m x m");
  require(m.N >= 1, "N must be at least 1");
  require(m.N_r >= 1 && m.N_r <= m.N, "N_r must satisfy 1 <= N_r <= N");
  require(m.u_max > 0.0, "u_max must be positive");
}

MatrixXd null_space(const MatrixXd& M) {
  Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double top = s.size() > 0 ? s(0) : 0.0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > kRankTol * std::max(top, 1e-300)) ++r;
  return svd.matrixV().rightCols(M.cols() - r);
}

MatrixXcd null_space(const MatrixXcd& M) {
  Eigen::JacobiSVD<MatrixXcd> svd(M, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double top = s.size() > 0 ? s(0) : 0.0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > kRankTol * std::max(top, 1e-300)) ++r;
  return svd.matrixV().rightCols(M.cols() - r);
}

}  // namespace

bool ValidationReport::ok() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

bool ValidationReport::passed(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c.passed;
  return false;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    os << (c.passed ? "  ok    " : "  FAIL  ") << c.name;
    if (!c.detail.empty()) os << " (" << c.detail << ")";
    os << '\n';
  }
  return os.str();
}

ValidationReport validate_model(const SystemModel& model) {
  check_dims(model);
  ValidationReport rep;
  const int d = model.d();
  auto add = [&](std::string name, bool ok, std::string detail = {}) {
    rep.checks.push_back({std::move(name), ok, std::move(detail)});
  };

  add("sigma_v_pd", is_positive_definite(model.Sigma_v));
  add("r_pd", is_positive_definite(model.R));
  add("sigma_w_psd", is_positive_semidefinite(model.Sigma_w));
  add("sigma_x0_psd", is_positive_semidefinite(model.Sigma_x0));
  add("cost_psd", is_positive_semidefinite(model.Q) &&
                      is_positive_semidefinite(model.Q_N));

  const auto clusters = eigen_clusters(model.A);
  const MatrixXcd Ac = model.A.cast<cd>();
  const MatrixXcd I = MatrixXcd::Identity(d, d);

  bool in_disk = true, semisimple = true, stabilizable = true, observable = true;
  std::ostringstream disk_detail, ss_detail;
  for (const auto& c : clusters) {
    const double mag = std::abs(c.value);
    if (mag > 1.0 + kBorderlineTol) {
      in_disk = false;
      disk_detail << "|lambda|=" << mag << ' ';
    }
    const MatrixXcd shifted = Ac - c.value * I;
    if (std::abs(mag - 1.0) <= kBorderlineTol) {
      const int geo = d - complex_rank(shifted);
      if (geo != c.multiplicity) {
        semisimple = false;
        ss_detail << "lambda=" << c.value.real() << (c.value.imag() >= 0 ? "+" : "")
                  << c.value.imag() << "i ";
      }
    }
    if (mag >= 1.0 - kBorderlineTol) {
      MatrixXcd ab(d, d + model.m());
      ab << shifted, model.B.cast<cd>();
      if (complex_rank(ab) < d) stabilizable = false;
    }
    MatrixXcd ac(d + model.q(), d);
    ac << shifted, model.C.cast<cd>();
    if (complex_rank(ac) < d) observable = false;
  }
  add("eigenvalues_in_unit_disk", in_disk, disk_detail.str());
  add("unit_circle_semisimple", semisimple, ss_detail.str());
  add("stabilizable", stabilizable);
  add("observable", observable);
  return rep;
}

VectorXd Decomposition::orthogonal_part(const VectorXd& x) const {
  return (basis_inv * x).head(d_o());
}

Decomposition decompose(const SystemModel& model, std::optional<int> block_dim) {
  check_dims(model);
  const int d = model.d();
  Decomposition dec;

  if (block_dim) {
    const int d_o = *block_dim;
    require(d_o >= 0 && d_o <= d, "orthogonal block dimension out of range");
    const int d_s = d - d_o;
    const double scale = std::max(1.0, model.A.cwiseAbs().maxCoeff());
    if (d_o > 0 && d_s > 0) {
      const double off = std::max(model.A.topRightCorner(d_o, d_s).cwiseAbs().maxCoeff(),
                                  model.A.bottomLeftCorner(d_s, d_o).cwiseAbs().maxCoeff());
      require(off <= 1e-12 * scale, "A is not block-diagonal at the declared split");
    }
    dec.A_o = model.A.topLeftCorner(d_o, d_o);
    dec.A_s = model.A.bottomRightCorner(d_s, d_s);
    if (d_o > 0) {
      const double err = (dec.A_o.transpose() * dec.A_o - MatrixXd::Identity(d_o, d_o))
                             .cwiseAbs()
                             .maxCoeff();
      require(err <= 1e-10, "declared orthogonal block is not orthogonal");
    }
    require(spectral_radius(dec.A_s) < 1.0, "declared stable block is not Schur stable");
    dec.basis = MatrixXd::Identity(d, d);
    dec.basis_inv = MatrixXd::Identity(d, d);
  } else {
    const auto clusters = eigen_clusters(model.A);
    std::vector<MatrixXd> o_cols;
    std::vector<std::pair<double, double>> rot;  // (cos, sin) per block; sin=0 for 1x1
    std::vector<cd> unit;
    for (const auto& c : clusters) {
      const double mag = std::abs(c.value);
      if (mag > 1.0 + kBorderlineTol)
        throw InvalidArgument("A has eigenvalues outside the unit disk");
      const double gap = std::abs(mag - 1.0);
      if (gap > kUnitTol && gap <= kBorderlineTol)
        throw InvalidArgument(
            "eigenvalue modulus is numerically borderline to 1; supply A in block "
            "form with orthogonal_dim");
      if (gap > kUnitTol) continue;
      if (c.value.imag() < -kClusterTol) continue;  // handled with its conjugate
      unit.push_back(c.value);
      if (std::abs(c.value.imag()) <= kClusterTol) {
        const double lam = c.value.real() > 0 ? 1.0 : -1.0;
        MatrixXd ns = null_space(MatrixXd(model.A - lam * MatrixXd::Identity(d, d)));
        if (ns.cols() != c.multiplicity)
          throw InvalidArgument("unit-circle eigenvalue is not semi-simple");
        for (Eigen::Index k = 0; k < ns.cols(); ++k) {
          o_cols.push_back(ns.col(k));
          rot.push_back({lam, 0.0});
        }
      } else {
        const cd lam = c.value / mag;
        MatrixXcd ns = null_space(MatrixXcd(model.A.cast<cd>() - lam * MatrixXcd::Identity(d, d)));
        if (ns.cols() != c.multiplicity)
          throw InvalidArgument("unit-circle eigenvalue is not semi-simple");
        for (Eigen::Index k = 0; k < ns.cols(); ++k) {
          MatrixXd pair(d, 2);
          pair.col(0) = ns.col(k).real();
          pair.col(1) = ns.col(k).imag();
          o_cols.push_back(pair);
          rot.push_back({lam.real(), lam.imag()});
        }
      }
    }
    int d_o = 0;
    for (const auto& c : o_cols) d_o += static_cast<int>(c.cols());
    const int d_s = d - d_o;

    MatrixXd V_o(d, d_o);
    dec.A_o = MatrixXd::Zero(d_o, d_o);
    int col = 0;
    for (std::size_t k = 0; k < o_cols.size(); ++k) {
      const auto w = o_cols[k].cols();
      V_o.middleCols(col, w) = o_cols[k];
      if (w == 1) {
        dec.A_o(col, col) = rot[k].first;
      } else {
        const double c = rot[k].first, s = rot[k].second;
        dec.A_o.block(col, col, 2, 2) << c, s, -s, c;
      }
      col += static_cast<int>(w);
    }

    // The stable invariant subspace is the range of the annihilating
    // polynomial of the (semi-simple) unit-circle part.
    MatrixXd p = MatrixXd::Identity(d, d);
    for (const auto& lam : unit) {
      if (std::abs(lam.imag()) <= kClusterTol) {
        p = (model.A - (lam.real() > 0 ? 1.0 : -1.0) * MatrixXd::Identity(d, d)) * p;
      } else {
        const double c = lam.real() / std::abs(lam);
        p = (model.A * model.A - 2.0 * c * model.A + MatrixXd::Identity(d, d)) * p;
      }
    }
    MatrixXd V_s(d, d_s);
    if (d_s > 0) {
      Eigen::JacobiSVD<MatrixXd> svd(p, Eigen::ComputeFullU);
      V_s = svd.matrixU().leftCols(d_s);
    }
    dec.basis.resize(d, d);
    dec.basis << V_o, V_s;
    Eigen::FullPivLU<MatrixXd> lu(dec.basis);
    if (!lu.isInvertible()) throw InvalidArgument("decomposition basis is singular");
    dec.basis_inv = lu.inverse();
    dec.A_s = (dec.basis_inv * model.A * dec.basis).bottomRightCorner(d_s, d_s);
    if (spectral_radius(dec.A_s) >= 1.0)
      throw InvalidArgument("stable block is not Schur stable");
  }

  const MatrixXd Bt = dec.basis_inv * model.B;
  dec.B_o = Bt.topRows(dec.d_o());
  dec.B_s = Bt.bottomRows(dec.d_s());
  dec.kappa = dec.d_o() > 0 ? reachability_index(dec.A_o, dec.B_o) : 0;
  return dec;
}

MatrixXd reachability_matrix(const MatrixXd& A, const MatrixXd& B, int h) {
  require(h >= 1, "reachability horizon must be positive");
  require(A.rows() == A.cols() && B.rows() == A.rows(), "reachability: dimension mismatch");
  const auto n = A.rows(), m = B.cols();
  MatrixXd R(n, h * m);
  MatrixXd blk = B;
  for (int k = h - 1; k >= 0; --k) {
    R.middleCols(k * m, m) = blk;
    blk = A * blk;
  }
  return R;
}

int reachability_index(const MatrixXd& A_o, const MatrixXd& B_o) {
  const int n = static_cast<int>(A_o.rows());
  if (n == 0) return 0;
  for (int h = 1; h <= n; ++h)
    if (numerical_rank(reachability_matrix(A_o, B_o, h)) == n) return h;
  throw InvalidArgument("orthogonal part unreachable");
}

StackedMatrices stack(const SystemModel& model) {
  check_dims(model);
  const int d = model.d(), m = model.m(), q = model.q(), N = model.N;
  StackedMatrices s;

  std::vector<MatrixXd> Apow(N + 1);
  Apow[0] = MatrixXd::Identity(d, d);
  for (int k = 1; k <= N; ++k) Apow[k] = model.A * Apow[k - 1];

  s.calA.resize((N + 1) * d, d);
  for (int k = 0; k <= N; ++k) s.calA.middleRows(k * d, d) = Apow[k];

  s.calB = MatrixXd::Zero((N + 1) * d, N * m);
  s.calD = MatrixXd::Zero((N + 1) * d, N * d);
  for (int i = 1; i <= N; ++i)
    for (int j = 0; j < i; ++j) {
      s.calB.block(i * d, j * m, d, m) = Apow[i - j - 1] * model.B;
      s.calD.block(i * d, j * d, d, d) = Apow[i - j - 1];
    }

  s.calC = MatrixXd::Zero((N + 1) * q, (N + 1) * d);
  s.calQ = MatrixXd::Zero((N + 1) * d, (N + 1) * d);
  for (int k = 0; k <= N; ++k) {
    s.calC.block(k * q, k * d, q, d) = model.C;
    s.calQ.block(k * d, k * d, d, d) = k < N ? model.Q : model.Q_N;
  }
  s.calR = MatrixXd::Zero(N * m, N * m);
  for (int k = 0; k < N; ++k) s.calR.block(k * m, k * m, m, m) = model.R;

  const MatrixXd QB = s.calQ * s.calB;
  s.alpha = symmetrize(s.calB.transpose() * QB + s.calR);
  s.Q_A = s.calA.transpose() * QB;
  s.Q_D = s.calD.transpose() * QB;
  s.alpha_llt.compute(s.alpha);
  return s;
}

}  // namespace netmpc
