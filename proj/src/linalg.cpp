// SPDX-License-Identifier: Apache-2.0
#include "aubin/linalg.hpp"

#include <Eigen/Eigenvalues>

namespace aubin::linalg {

Eigen::MatrixXd nullspace(const Eigen::MatrixXd& A, double tol) {
  if (A.rows() == 0) return Eigen::MatrixXd::Identity(A.cols(), A.cols());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cutoff = tol * std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++r;
  return svd.matrixV().rightCols(A.cols() - r);
}

int rank(const Eigen::MatrixXd& A, double tol) {
  if (A.rows() == 0 || A.cols() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& sv = svd.singularValues();
  const double cutoff = tol * std::max(1.0, sv(0));
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++r;
  return r;
}

LeastSquares solve_least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double tol) {
  LeastSquares out;
  if (A.rows() == 0) {
    out.x = Eigen::VectorXd::Zero(A.cols());
    out.residual = 0.0;
    out.kernel = Eigen::MatrixXd::Identity(A.cols(), A.cols());
    return out;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cutoff = tol * std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);
  Eigen::VectorXd inv_sv = Eigen::VectorXd::Zero(sv.size());
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) {
      inv_sv(i) = 1.0 / sv(i);
      ++r;
    }
  }
  out.x = svd.matrixV().leftCols(sv.size()) * inv_sv.asDiagonal() * svd.matrixU().transpose() * b;
  out.residual = (A * out.x - b).norm();
  out.kernel = svd.matrixV().rightCols(A.cols() - r);
  return out;
}

std::vector<double> real_roots(const Eigen::VectorXd& coeffs, double imag_tol) {
  // Trim trailing (near-)zero leading coefficients.
  int deg = static_cast<int>(coeffs.size()) - 1;
  const double scale = coeffs.cwiseAbs().maxCoeff();
  if (scale == 0.0) return {};
  while (deg > 0 && std::abs(coeffs(deg)) < 1e-14 * scale) --deg;
  if (deg == 0) return {};
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i) companion(i, deg - 1) = -coeffs(i) / coeffs(deg);
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion);
  std::vector<double> roots;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const auto ev = es.eigenvalues()(i);
    if (std::abs(ev.imag()) <= imag_tol * std::max(1.0, std::abs(ev.real())))
      roots.push_back(ev.real());
  }
  return roots;
}

}  // namespace aubin::linalg
