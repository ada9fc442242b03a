// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "aubin/reference.hpp"

namespace aubin {

struct ChainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Multiplier {
  Eigen::VectorXd lambda;  // multiplier at the cone level
  Eigen::VectorXd mu;      // reduced multiplier, lambda = grad_h^T mu
};

struct NondegeneracyResult {
  bool ok = false;
  std::string certificate;  // failing rank information when !ok
  ReductionData reduction;
};

// Builds the canonical local reduction D = h^{-1}(Theta) near g(x_ref):
// active components for the orthant / H-rep case, identity at a Lorentz apex,
// the boundary-defining map on a Lorentz boundary ray. Classification that
// depends on the multiplier (scalar point classes, apex vs polar-interior) is
// refined by complete_reference.
ReductionData make_reduction(const ReferenceData& ref, double activity_tol = 1e-9);

// The unique multiplier with grad_g^T lambda = xstar and lambda in the
// regular normal cone at g(x_ref). Throws ChainError when no solution exists
// (reference point infeasible) or when it is non-unique (nondegeneracy
// failure).
Multiplier recover_multiplier(const ReferenceData& ref, double activity_tol = 1e-9);

NondegeneracyResult check_nondegeneracy(const ReferenceData& ref, double activity_tol = 1e-9);

// recover_multiplier + check_nondegeneracy + Lagrangian derivative, writing
// the results into ref. Throws on infeasibility; nondegeneracy failure is
// reported in the return value, not thrown.
NondegeneracyResult complete_reference(ReferenceData& ref, double activity_tol = 1e-9);

struct TangentResult {
  bool tangent = false;
  std::string reason;        // when not tangent
  Eigen::VectorXd xi_theta;  // reduced-level partner
  Eigen::VectorXd xi;        // cone-level partner (unique)
  double residual = 0.0;
  bool unique = true;
  int rank_defect = 0;
};

// Membership of (u, ustar) in the tangent cone to the graph of the
// constraint normal-cone map at (x_ref, xstar), with the connecting vector.
TangentResult gamma_graph_tangent(const ReferenceData& ref, const Eigen::VectorXd& u,
                                  const Eigen::VectorXd& ustar, double tol = 1e-9);

// Value of a coderivative of the constraint normal-cone map composed through
// the chain rule: { theta_hessian w + grad_b^T eta | eta admissible }.
// Membership queries are exact because grad_b^T is injective under (A2).
class GammaCoderivValue {
 public:
  bool tangent_direction() const { return tangent_; }
  // Decides wstar in value; Undecided only on sampled Lorentz paths (dim>2).
  enum class Verdict { In, Out, Undecided };
  Verdict contains(const Eigen::VectorXd& wstar, double tol = 1e-9) const;
  std::string describe() const;

  // Scalar component cases (empty for Lorentz blocks); exposed for tests.
  const std::vector<std::optional<orthant::ComponentSet>>& scalar_components() const {
    return scalar_sets_;
  }
  const Eigen::VectorXd& offset() const { return offset_; }

 private:
  friend GammaCoderivValue gamma_dirlim_coderiv(const ReferenceData&, const Eigen::VectorXd&,
                                                const Eigen::VectorXd&, const Eigen::VectorXd&,
                                                double);
  friend GammaCoderivValue gamma_regular_coderiv(const ReferenceData&, const Eigen::VectorXd&,
                                                 double);
  bool tangent_ = true;
  bool regular_ = false;
  Eigen::VectorXd offset_;   // theta_hessian * w
  Eigen::MatrixXd grad_b_;
  Eigen::VectorXd input_;    // grad_b * w
  std::vector<std::optional<orthant::ComponentSet>> scalar_sets_;
  std::vector<ThetaBlock> blocks_;
  std::vector<lorentz::CoderivFamily> families_;  // per Lorentz apex block
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> directions_;  // (v,xi) per block
};

GammaCoderivValue gamma_dirlim_coderiv(const ReferenceData& ref, const Eigen::VectorXd& u,
                                       const Eigen::VectorXd& ustar, const Eigen::VectorXd& w,
                                       double tol = 1e-9);

GammaCoderivValue gamma_regular_coderiv(const ReferenceData& ref, const Eigen::VectorXd& w,
                                        double tol = 1e-9);

}  // namespace aubin
