// SPDX-License-Identifier: Apache-2.0
#include "aubin/orthant.hpp"

#include <cmath>
#include <string>

namespace aubin::orthant {

std::vector<PointClass> classify_point(const Eigen::VectorXd& z, const Eigen::VectorXd& lambda,
                                       double tol) {
  if (z.size() != lambda.size()) throw GraphError("z and lambda must have equal length");
  std::vector<PointClass> out(static_cast<std::size_t>(z.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (z(i) > tol)
      throw GraphError("component " + std::to_string(i) + ": z > 0 is infeasible");
    if (z(i) < -tol) {
      if (std::abs(lambda(i)) > tol)
        throw GraphError("component " + std::to_string(i) + ": lambda must vanish where z < 0");
      out[static_cast<std::size_t>(i)] = PointClass::Inactive;
    } else if (lambda(i) > tol) {
      out[static_cast<std::size_t>(i)] = PointClass::ActivePositive;
    } else if (lambda(i) < -tol) {
      throw GraphError("component " + std::to_string(i) + ": lambda < 0 is not a normal");
    } else {
      out[static_cast<std::size_t>(i)] = PointClass::ActiveZero;
    }
  }
  return out;
}

namespace {

double scalar_tangent_violation(PointClass pc, double v, double xi) {
  switch (pc) {
    case PointClass::Inactive:
      return std::abs(xi);
    case PointClass::ActivePositive:
      return std::abs(v);
    case PointClass::ActiveZero: {
      // Distance to (R_- x {0}) union ({0} x R_+).
      const double d1 = std::hypot(std::max(v, 0.0), xi);
      const double d2 = std::hypot(v, std::min(xi, 0.0));
      return std::min(d1, d2);
    }
  }
  return 0.0;
}

}  // namespace

double tangent_violation(const Eigen::VectorXd& z, const Eigen::VectorXd& lambda,
                         const Eigen::VectorXd& v, const Eigen::VectorXd& xi) {
  const auto pcs = classify_point(z, lambda);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i)
    worst = std::max(worst, scalar_tangent_violation(pcs[static_cast<std::size_t>(i)], v(i), xi(i)));
  return worst;
}

bool graph_tangent(const Eigen::VectorXd& z, const Eigen::VectorXd& lambda,
                   const Eigen::VectorXd& v, const Eigen::VectorXd& xi, double tol) {
  const double scale = std::max({1.0, v.norm(), xi.norm()});
  return tangent_violation(z, lambda, v, xi) <= tol * scale;
}

DirCase scalar_dir_case(PointClass pc, double v, double xi, double tol) {
  switch (pc) {
    case PointClass::Inactive:
      return DirCase::OutputZero;
    case PointClass::ActivePositive:
      return DirCase::NeedsZeroInput;
    case PointClass::ActiveZero:
      if (v < -tol) return DirCase::OutputZero;
      if (xi > tol) return DirCase::NeedsZeroInput;
      return DirCase::OriginUnion;
  }
  return DirCase::OriginUnion;
}

ComponentSet dir_coderiv_component(DirCase c, double input, double tol) {
  switch (c) {
    case DirCase::OutputZero:
      return ComponentSet::Zero;
    case DirCase::NeedsZeroInput:
      return std::abs(input) <= tol ? ComponentSet::All : ComponentSet::Empty;
    case DirCase::OriginUnion:
      // Admissible outputs u with (u, -input) in the limiting normal cone to
      // the scalar graph at the origin.
      if (std::abs(input) <= tol) return ComponentSet::All;
      if (input > 0.0) return ComponentSet::Nonneg;
      return ComponentSet::Zero;
  }
  return ComponentSet::Empty;
}

ComponentSet regular_coderiv_component(PointClass pc, double input, double tol) {
  switch (pc) {
    case PointClass::Inactive:
      return ComponentSet::Zero;
    case PointClass::ActivePositive:
      return std::abs(input) <= tol ? ComponentSet::All : ComponentSet::Empty;
    case PointClass::ActiveZero:
      // Regular normals to the scalar graph at the origin form R_+ x R_-.
      return input >= -tol ? ComponentSet::Nonneg : ComponentSet::Empty;
  }
  return ComponentSet::Empty;
}

bool CoderivValue::empty() const {
  if (!tangent_direction) return true;
  for (const auto c : components)
    if (c == ComponentSet::Empty) return true;
  return false;
}

bool CoderivValue::contains(const Eigen::VectorXd& y, double tol) const {
  if (empty()) return false;
  if (static_cast<std::size_t>(y.size()) != components.size()) return false;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    switch (components[static_cast<std::size_t>(i)]) {
      case ComponentSet::Zero:
        if (std::abs(y(i)) > tol) return false;
        break;
      case ComponentSet::All:
        break;
      case ComponentSet::Nonneg:
        if (y(i) < -tol) return false;
        break;
      case ComponentSet::Empty:
        return false;
    }
  }
  return true;
}

CoderivValue dirlim_coderiv(const Eigen::VectorXd& z, const Eigen::VectorXd& lambda,
                            const Eigen::VectorXd& v, const Eigen::VectorXd& xi,
                            const Eigen::VectorXd& input, double tol) {
  CoderivValue out;
  if (!graph_tangent(z, lambda, v, xi, tol)) {
    out.tangent_direction = false;
    return out;
  }
  const auto pcs = classify_point(z, lambda, tol);
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const auto c = scalar_dir_case(pcs[static_cast<std::size_t>(i)], v(i), xi(i), tol);
    out.components.push_back(dir_coderiv_component(c, input(i), tol));
  }
  return out;
}

CoderivValue regular_coderiv(const Eigen::VectorXd& z, const Eigen::VectorXd& lambda,
                             const Eigen::VectorXd& input, double tol) {
  CoderivValue out;
  const auto pcs = classify_point(z, lambda, tol);
  for (Eigen::Index i = 0; i < z.size(); ++i)
    out.components.push_back(regular_coderiv_component(pcs[static_cast<std::size_t>(i)], input(i), tol));
  return out;
}

}  // namespace aubin::orthant
