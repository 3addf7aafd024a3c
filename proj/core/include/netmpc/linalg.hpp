#pragma once

#include <Eigen/Dense>

namespace netmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Relative singular-value threshold used for every rank and definiteness test.
inline constexpr double kRankTol = 1e-9;

int numerical_rank(const MatrixXd& M, double rel_tol = kRankTol);
MatrixXd pseudo_inverse(const MatrixXd& M, double rel_tol = kRankTol);
bool is_symmetric(const MatrixXd& M, double tol = 1e-9);
bool is_positive_definite(const MatrixXd& M, double rel_tol = kRankTol);
bool is_positive_semidefinite(const MatrixXd& M, double tol = 1e-9);
MatrixXd symmetrize(const MatrixXd& M);
double spectral_radius(const MatrixXd& M);
MatrixXd block_diag(const MatrixXd& a, const MatrixXd& b);
// Symmetric square root factor L with L L' = M for PSD M.
MatrixXd psd_sqrt(const MatrixXd& M);
// kron(A, B) with the usual block layout a_ij * B.
MatrixXd kron(const MatrixXd& a, const MatrixXd& b);

}  // namespace netmpc
