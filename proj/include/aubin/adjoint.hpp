// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "aubin/branches.hpp"

namespace aubin {

struct AdjointWitness {
  Eigen::VectorXd vstar;  // normalized to unit length
  Eigen::VectorXd aux;    // eta (componentwise path) or d (projection path)
  std::string case_info;
  std::string branch;
  double residual = 0.0;
};

enum class ImplicationMode { KernelConsequent, ZeroConsequent };  // (iii) and (iv)

struct ImplicationResult {
  enum class Status { Pass, Fail, Undecided };
  Status status = Status::Undecided;
  std::optional<AdjointWitness> witness;
  std::string detail;
};

// Rows of the assembled adjoint system over the unknowns (v*, c): scalar
// blocks contribute an eta column each, Lorentz apex blocks a d column per
// coordinate via the projection-side substitution eta_b = d_b - (grad_b v*)_b.
Eigen::MatrixXd adjoint_base_matrix(const ReferenceData& ref);

// Verifies the coderivative implication along one critical branch.
ImplicationResult check_adjoint_implication(const ReferenceData& ref, const CriticalBranch& branch,
                                            ImplicationMode mode, double tol = 1e-9);

struct MordukhovichResult {
  bool trivial_only = false;
  bool undecided = false;
  std::optional<AdjointWitness> witness;
};

// Non-directional adjoint inclusion (the classical criterion): searches for a
// nonzero solution using the full limiting coderivative.
MordukhovichResult mordukhovich_check(const ReferenceData& ref, double tol = 1e-9);

// Membership test for a specific candidate in the non-directional adjoint
// inclusion.
bool mordukhovich_ge_contains(const ReferenceData& ref, const Eigen::VectorXd& vstar,
                              double tol = 1e-9);

}  // namespace aubin
