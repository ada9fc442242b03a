// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "aubin/lorentz.hpp"
#include "aubin/orthant.hpp"
#include "aubin/problem.hpp"

namespace aubin {

// Symbolic Jacobians/Hessians of the problem data, reusable away from the
// reference point (the probe solves the system at perturbed parameters).
struct SymbolicDerivatives {
  std::vector<std::vector<Expression>> dH_dp;  // n x l
  std::vector<std::vector<Expression>> dH_dx;  // n x n
  std::vector<std::vector<Expression>> dg_dx;  // s x n
  std::vector<std::vector<std::vector<Expression>>> d2g;  // s x n x n
};

// One block of the reduced constraint set Theta (orthant components and
// Lorentz cones at the apex).
struct ThetaBlock {
  enum class Kind {
    Scalar,               // one nonpositive component of Theta
    LorentzApex,          // Lorentz block with b = 0 and mu = 0
    LorentzPolarInterior  // Lorentz block with b = 0 and mu interior to the polar
  };
  Kind kind = Kind::Scalar;
  int offset = 0;  // first coordinate within the reduced vector
  int dim = 1;
  lorentz::LorentzSpec lspec;                                    // Lorentz kinds
  orthant::PointClass pc = orthant::PointClass::ActiveZero;      // Scalar kind
};

// Local representation D = h^{-1}(Theta) near g(x_ref) together with the
// derivatives of b = h o g at the reference point.
struct ReductionData {
  Eigen::MatrixXd grad_h;    // d x s
  Eigen::MatrixXd grad_b;    // d x n  (= grad_h * grad_g)
  Eigen::MatrixXd curvature; // n x n  second-order term of h pulled back by g
  std::vector<Eigen::MatrixXd> hess_h;  // per reduced row; empty matrix = linear row
  Eigen::VectorXd mu;        // multiplier at Theta level, lambda = grad_h^T mu
  std::vector<ThetaBlock> blocks;
  std::vector<int> active_rows;  // selected rows/components of the original cone
  bool supported = true;
  std::string diagnostic;

  int d() const { return static_cast<int>(grad_h.rows()); }
};

struct ReferenceData {
  ProblemSpec spec;
  std::shared_ptr<const SymbolicDerivatives> sym;

  Eigen::MatrixXd gradH_p;  // n x l
  Eigen::MatrixXd gradH_x;  // n x n
  Eigen::MatrixXd gradg;    // s x n
  std::vector<Eigen::MatrixXd> hess_g;  // s Hessians, n x n
  Eigen::VectorXd g0;       // g(x_ref)
  Eigen::VectorXd xstar;    // -H(p_ref, x_ref)

  // Filled in by the chain stage.
  bool completed = false;
  Eigen::VectorXd lambda;
  Eigen::MatrixXd lagr_x;        // gradH_x + sum lambda_j hess_g[j]
  ReductionData reduction;

  int l() const { return spec.l(); }
  int n() const { return spec.n(); }
  int s() const { return spec.s(); }

  // sum_j lam_j hess_g[j]
  Eigen::MatrixXd hessian_contraction(const Eigen::VectorXd& lam) const;

  // Reduced-level Hessian term (includes the curvature of h when nonlinear).
  Eigen::MatrixXd theta_hessian() const;

  // Evaluations away from the reference point (used by the probe).
  Eigen::MatrixXd eval_gradg(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd eval_gradH_x(const Eigen::VectorXd& p, const Eigen::VectorXd& x) const;
  Eigen::MatrixXd eval_hessian_contraction(const Eigen::VectorXd& x, const Eigen::VectorXd& lam) const;
};

// Evaluates all derivatives of H and g at the reference point. The chain
// stage (multiplier recovery, nondegeneracy) comes separately.
ReferenceData assemble_reference(const ProblemSpec& spec);

}  // namespace aubin
