#include "netmpc/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace netmpc {

int numerical_rank(const MatrixXd& M, double rel_tol) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<MatrixXd> svd(M);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * s(0)) ++r;
  return r;
}

MatrixXd pseudo_inverse(const MatrixXd& M, double rel_tol) {
  if (M.size() == 0) return MatrixXd::Zero(M.cols(), M.rows());
  Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  VectorXd inv = VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * s(0)) inv(i) = 1.0 / s(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

bool is_symmetric(const MatrixXd& M, double tol) {
  if (M.rows() != M.cols()) return false;
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  return (M - M.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

bool is_positive_definite(const MatrixXd& M, double rel_tol) {
  if (M.rows() != M.cols() || !is_symmetric(M)) return false;
  if (M.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(M));
  const auto& ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  return top > 0.0 && ev.minCoeff() > rel_tol * top;
}

bool is_positive_semidefinite(const MatrixXd& M, double tol) {
  if (M.rows() != M.cols() || !is_symmetric(M)) return false;
  if (M.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(M));
  const auto& ev = es.eigenvalues();
  const double top = std::max(1.0, ev.cwiseAbs().maxCoeff());
  return ev.minCoeff() >= -tol * top;
}

MatrixXd symmetrize(const MatrixXd& M) { return 0.5 * (M + M.transpose()); }

double spectral_radius(const MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::EigenSolver<MatrixXd> es(M, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

MatrixXd block_diag(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out = MatrixXd::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

MatrixXd psd_sqrt(const MatrixXd& M) {
  if (M.size() == 0) return M;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(M));
  const VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace netmpc
