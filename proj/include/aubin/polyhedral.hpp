// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "aubin/problem.hpp"

namespace aubin {

struct ConeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Finitely generated cone carrying both descriptions:
//   C = {z | ineq z <= 0, eq z = 0} = cone(rays) + span(lineality).
// Rays and lineality are stored as rows. Construction from either side fills
// in the other by exhaustive active-set enumeration; intended for desk-scale
// dimensions (the guard below refuses anything bigger).
class PolyhedralCone {
 public:
  PolyhedralCone() = default;

  static PolyhedralCone from_halfspaces(const Eigen::MatrixXd& ineq, const Eigen::MatrixXd& eq);
  static PolyhedralCone from_generators(const Eigen::MatrixXd& rays, const Eigen::MatrixXd& lineality,
                                        int dim);

  int dim() const { return dim_; }
  const Eigen::MatrixXd& ineq() const { return ineq_; }
  const Eigen::MatrixXd& eq() const { return eq_; }
  const Eigen::MatrixXd& rays() const { return rays_; }
  const Eigen::MatrixXd& lineality() const { return lineality_; }

  bool contains(const Eigen::VectorXd& z, double tol = 1e-9) const;
  PolyhedralCone polar() const;

  // Indices of ineq rows active at z (|a_i^T z| <= tol); z is assumed scaled
  // O(1) by the caller.
  std::vector<int> active_set(const Eigen::VectorXd& z, double tol = 1e-9) const;

  // True when the cone is {0}.
  bool is_trivial(double tol = 1e-12) const;

  // Basis (rows) of the linear span of the cone.
  Eigen::MatrixXd span_basis() const;

 private:
  int dim_ = 0;
  Eigen::MatrixXd ineq_, eq_, rays_, lineality_;
};

struct Face {
  std::vector<int> active;     // closure: ineq rows vanishing on the whole face
  Eigen::MatrixXd rays;        // extreme rays of the face (rows)
  Eigen::MatrixXd lineality;   // rows
  Eigen::VectorXd witness;     // point in the relative interior
  int span_dim = 0;
};

// All faces of C, each with a relative-interior witness. The relative
// interiors partition C. Ordered by (span_dim, active set).
std::vector<Face> enumerate_faces(const PolyhedralCone& C);

// Is z in the relative interior of this face of C?
bool in_relative_interior(const PolyhedralCone& C, const Face& f, const Eigen::VectorXd& z,
                          double tol = 1e-9);

// Critical cone K = T_D(z) cap [lambda]^perp for polyhedral cone specs
// (orthant, H-rep, Lorentz products with block dims <= 2). Throws ConeError
// when z is infeasible or lambda is not a regular normal at z, naming the
// violated condition.
PolyhedralCone critical_cone(const ConeSpec& D, const Eigen::VectorXd& z,
                             const Eigen::VectorXd& lambda, double activity_tol = 1e-9);

}  // namespace aubin
