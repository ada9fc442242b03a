// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "aubin/expr.hpp"

namespace aubin {

struct ProblemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The constraint set D of the variational system. Lorentz blocks use the
// epigraph form z0 >= ||zbar|| with z0 at the first or last coordinate of the
// block, selected by `axis`.
struct ConeSpec {
  enum class Type { OrthantNonpositive, LorentzProduct, PolyhedralHRep };
  enum class Axis { First, Last };

  Type type = Type::OrthantNonpositive;
  int dim = 0;                   // ambient dimension s
  std::vector<int> blocks;      // LorentzProduct block dimensions
  Axis axis = Axis::Last;       // LorentzProduct z0 position within each block
  Eigen::MatrixXd rows;         // PolyhedralHRep: D = {z | rows * z <= 0}

  static ConeSpec orthant(int s);
  static ConeSpec lorentz(std::vector<int> blocks, Axis axis);
  static ConeSpec hrep(Eigen::MatrixXd rows);

  // H-representation {z | A z <= 0} when D is polyhedral (orthant, hrep, or
  // Lorentz product with all block dims <= 2); empty otherwise.
  std::optional<Eigen::MatrixXd> polyhedral_rows() const;

  void validate() const;
};

struct ProblemSpec {
  std::string name;
  std::vector<std::string> parameters;  // length l
  std::vector<std::string> variables;   // length n
  std::vector<Expression> H;            // n components in (p, x)
  std::vector<Expression> g;            // s components in x only
  ConeSpec cone;
  Eigen::VectorXd p_ref;
  Eigen::VectorXd x_ref;

  int l() const { return static_cast<int>(parameters.size()); }
  int n() const { return static_cast<int>(variables.size()); }
  int s() const { return static_cast<int>(g.size()); }

  // Symbol order used for H: parameters first, then variables.
  std::vector<std::string> hp_symbols() const;

  void validate() const;

  Eigen::VectorXd eval_H(const Eigen::VectorXd& p, const Eigen::VectorXd& x) const;
  Eigen::VectorXd eval_g(const Eigen::VectorXd& x) const;
};

ProblemSpec load_problem(const std::string& path);
ProblemSpec problem_from_json_text(const std::string& text);
std::string problem_to_json_text(const ProblemSpec& spec,
                                 const std::vector<std::string>& H_text,
                                 const std::vector<std::string>& g_text);

}  // namespace aubin
