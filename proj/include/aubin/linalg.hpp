// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

namespace aubin::linalg {

// Orthonormal basis of ker(A) (columns). Empty matrix A means the whole space.
Eigen::MatrixXd nullspace(const Eigen::MatrixXd& A, double tol = 1e-10);

int rank(const Eigen::MatrixXd& A, double tol = 1e-10);

struct LeastSquares {
  Eigen::VectorXd x;       // minimum-norm solution
  double residual;         // ||A x - b||
  Eigen::MatrixXd kernel;  // basis of the solution set's direction space
};

LeastSquares solve_least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                 double tol = 1e-10);

// Real roots of c[0] + c[1] t + ... + c[d] t^d via the companion matrix.
std::vector<double> real_roots(const Eigen::VectorXd& coeffs, double imag_tol = 1e-8);

}  // namespace aubin::linalg
