// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "aubin/chain.hpp"
#include "aubin/polyhedral.hpp"

namespace aubin {

struct AviError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Reduced-level Lagrangian derivative entering the linearized system.
Eigen::MatrixXd theta_lagrangian(const ReferenceData& ref);

// Lifts a reduced-level xi back to the cone level (unique under (A2)).
Eigen::VectorXd lift_xi(const ReferenceData& ref, const Eigen::VectorXd& u,
                        const Eigen::VectorXd& xi_theta);

// Critical cone of Theta at (0, mu): a product of {0} / R_- components and
// Lorentz blocks. Only available as one polyhedral cone when every Lorentz
// block has dimension <= 2.
std::optional<PolyhedralCone> reduced_critical_cone(const ReferenceData& ref);

// One solution family of the linearized variational system, closed under
// positive scaling.
struct CriticalBranch {
  enum class Tag { Face, LorentzInterior, LorentzApex, LorentzBoundaryRay };
  Tag tag = Tag::Face;
  std::string descriptor;
  std::vector<int> face_active;  // active rows of the reduced critical cone
  bool exact = true;

  // Polyhedral path: the solution cone in (q, u, xi_theta) coordinates.
  bool has_cone = false;
  PolyhedralCone cone;

  // Conic path (Lorentz blocks of dim > 2): equality system + conic filters.
  Eigen::MatrixXd eq_rows;       // rows over (q, u, xi_theta)
  std::vector<int> xi_free;      // reduced xi components allowed nonzero

  struct Solutions {
    bool feasible = false;
    bool unique = true;
    Eigen::VectorXd u, xi_theta, xi;
    Eigen::MatrixXd family_basis;  // directions in (u, xi_theta) when !unique
  };
  Solutions at(const ReferenceData& ref, const Eigen::VectorXd& q, double tol = 1e-9) const;
};

struct BranchEnumeration {
  std::vector<CriticalBranch> branches;
  bool exact = true;  // false when a sampled (non-certified) path contributed
};

BranchEnumeration enumerate_critical_branches(const ReferenceData& ref, double tol = 1e-9);

struct CoverageResult {
  enum class Verdict { Covered, Uncovered, Undecided };
  Verdict verdict = Verdict::Undecided;
  Eigen::VectorXd uncovered_q;
  std::string method;
};

// Does every parameter direction q admit a solution (condition (i))?
CoverageResult check_direction_coverage(const BranchEnumeration& en, const ReferenceData& ref,
                                        double tol = 1e-9);

}  // namespace aubin
