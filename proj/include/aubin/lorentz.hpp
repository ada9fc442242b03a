// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>

#include "aubin/problem.hpp"

namespace aubin::lorentz {

struct LorentzError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One Lorentz (second-order) cone {(z0, zbar) | z0 >= ||zbar||}. `axis`
// selects whether z0 sits at the first or the last coordinate; the worked
// fixtures use axis-last, the definitional tests axis-first.
struct LorentzSpec {
  int dim = 2;
  ConeSpec::Axis axis = ConeSpec::Axis::Last;

  int axis_index() const { return axis == ConeSpec::Axis::First ? 0 : dim - 1; }
};

double z0_part(const LorentzSpec& spec, const Eigen::VectorXd& z);
Eigen::VectorXd bar_part(const LorentzSpec& spec, const Eigen::VectorXd& z);
Eigen::VectorXd join_parts(const LorentzSpec& spec, double z0, const Eigen::VectorXd& zbar);

// Spectral values z0 -+ ||zbar||; both >= 0 inside the cone, both <= 0 in the
// polar.
double eig_low(const LorentzSpec& spec, const Eigen::VectorXd& z);
double eig_high(const LorentzSpec& spec, const Eigen::VectorXd& z);

bool in_cone(const LorentzSpec& spec, const Eigen::VectorXd& z, double tol = 1e-9);
bool in_polar(const LorentzSpec& spec, const Eigen::VectorXd& z, double tol = 1e-9);

Eigen::VectorXd project(const LorentzSpec& spec, const Eigen::VectorXd& z);
Eigen::VectorXd project_polar(const LorentzSpec& spec, const Eigen::VectorXd& z);

// One-sided directional derivative of the projection, piecewise over the
// five smooth/nonsmooth regions. Validated against finite differences.
Eigen::VectorXd dir_derivative(const LorentzSpec& spec, const Eigen::VectorXd& z,
                               const Eigen::VectorXd& h);

// Position of a nonzero tangent direction (h, k), k = P(h), of the graph of
// the projection at the origin.
enum class GraphDirCase { IntK, IntPolar, Outside, BdK, BdPolar };

GraphDirCase classify_graph_direction(const LorentzSpec& spec, const Eigen::VectorXd& h,
                                      const Eigen::VectorXd& k, double tol = 1e-9);

// Family matrices; w lives in the unit sphere of R^{dim-1} and is given in
// bar-block coordinates.
Eigen::MatrixXd c_matrix(const LorentzSpec& spec, const Eigen::VectorXd& w, double alpha);
Eigen::MatrixXd a_matrix(const LorentzSpec& spec, const Eigen::VectorXd& w);
Eigen::MatrixXd b_matrix(const LorentzSpec& spec, const Eigen::VectorXd& w);
bool a_admissible(const LorentzSpec& spec, const Eigen::VectorXd& w, const Eigen::VectorXd& ustar,
                  double tol = 1e-12);
bool b_admissible(const LorentzSpec& spec, const Eigen::VectorXd& w, const Eigen::VectorXd& ustar,
                  double tol = 1e-12);

// Directional limiting coderivative of the projection at the apex, as a
// structured family indexed by the direction case.
struct CoderivFamily {
  enum class Kind { Identity, Zero, CFamily, CFamilyPlusA, CFamilyPlusB };
  Kind kind = Kind::Identity;
  LorentzSpec spec;
};

CoderivFamily coderiv_family_at_apex(const LorentzSpec& spec, GraphDirCase c);

struct MembershipOptions {
  int sphere_samples = 10000;
  int alpha_samples = 101;
  int refine_steps = 200;
  unsigned seed = 12345;
  double tol = 1e-9;
};

struct MembershipResult {
  enum class Verdict { In, Out, Undecided };
  Verdict verdict = Verdict::Out;
  Eigen::VectorXd w;    // witness parameters when verdict == In
  double alpha = 0.0;
  double t = 0.0;       // convex weight for the union parts
  double residual = 0.0;
};

// Decides y in family(ustar). Exact for dim <= 2; sphere sampling with an
// explicit Undecided verdict above that.
MembershipResult family_membership(const CoderivFamily& f, const Eigen::VectorXd& ustar,
                                   const Eigen::VectorXd& y, const MembershipOptions& opts = {});

// Rewrites a normal-cone coderivative query as the equivalent projection-side
// query: p in D*N_D(a,b)(q) iff `output` in D*P_D(base_point, base_value)(input).
struct ProjectionQuery {
  Eigen::VectorXd base_point;  // a + b
  Eigen::VectorXd base_value;  // a
  Eigen::VectorXd input;       // -q - p
  Eigen::VectorXd output;      // -q
};

ProjectionQuery convert_projection_normal(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                          const Eigen::VectorXd& p, const Eigen::VectorXd& q);

// Graph directions convert the same way: (v, xi) on the normal-cone side
// corresponds to (v + xi, v) on the projection side.
std::pair<Eigen::VectorXd, Eigen::VectorXd> convert_direction(const Eigen::VectorXd& v,
                                                              const Eigen::VectorXd& xi);

// Regular coderivative of the normal-cone map of the Lorentz cone at the
// supported reference positions (apex with lambda = 0, interior point,
// lambda in the polar interior). Returns nullopt for unsupported positions.
std::optional<bool> regular_ncone_coderiv_contains(const LorentzSpec& spec, const Eigen::VectorXd& z,
                                                   const Eigen::VectorXd& lambda,
                                                   const Eigen::VectorXd& input,
                                                   const Eigen::VectorXd& candidate,
                                                   double tol = 1e-9);

}  // namespace aubin::lorentz
