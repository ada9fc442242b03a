// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace aubin::orthant {

// Componentwise calculus for D = R^s_- . Everything here reduces to the three
// positions a scalar pair (z_i, lambda_i) can occupy in the graph of the
// normal-cone map to R_-.

struct GraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class PointClass {
  Inactive,        // z < 0 (lambda = 0)
  ActivePositive,  // z = 0, lambda > 0
  ActiveZero,      // z = 0, lambda = 0
};

// Classifies (z, lambda) componentwise; throws GraphError when the pair is
// not in the graph of the normal-cone map.
std::vector<PointClass> classify_point(const Eigen::VectorXd& z, const Eigen::VectorXd& lambda,
                                       double tol = 1e-9);

// Membership of (v, xi) in the tangent cone to the graph at (z, lambda).
bool graph_tangent(const Eigen::VectorXd& z, const Eigen::VectorXd& lambda,
                   const Eigen::VectorXd& v, const Eigen::VectorXd& xi, double tol = 1e-9);

// Distance-like residual of (v, xi) from that tangent cone (0 iff member).
double tangent_violation(const Eigen::VectorXd& z, const Eigen::VectorXd& lambda,
                         const Eigen::VectorXd& v, const Eigen::VectorXd& xi);

// Structural case of one component of the directional limiting coderivative,
// determined by the point class and the direction (v_i, xi_i).
enum class DirCase {
  OutputZero,     // value {0} for every input
  NeedsZeroInput, // value R when the input component vanishes, empty otherwise
  OriginUnion,    // full three-piece union at the origin of the scalar graph
};

DirCase scalar_dir_case(PointClass pc, double v, double xi, double tol = 1e-9);

// One component of a coderivative value, given its input component.
enum class ComponentSet { Zero, All, Empty, Nonneg };

ComponentSet dir_coderiv_component(DirCase c, double input, double tol = 1e-9);
ComponentSet regular_coderiv_component(PointClass pc, double input, double tol = 1e-9);

struct CoderivValue {
  bool tangent_direction = true;         // false => empty domain
  std::vector<ComponentSet> components;  // meaningful only when tangent_direction
  bool empty() const;
  bool contains(const Eigen::VectorXd& y, double tol = 1e-9) const;
};

// Directional limiting coderivative of the normal-cone map of R^s_- at
// (z,lambda) in direction (v,xi), applied to `input`. A non-tangent direction
// yields an empty value.
CoderivValue dirlim_coderiv(const Eigen::VectorXd& z, const Eigen::VectorXd& lambda,
                            const Eigen::VectorXd& v, const Eigen::VectorXd& xi,
                            const Eigen::VectorXd& input, double tol = 1e-9);

CoderivValue regular_coderiv(const Eigen::VectorXd& z, const Eigen::VectorXd& lambda,
                             const Eigen::VectorXd& input, double tol = 1e-9);

}  // namespace aubin::orthant
