// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "aubin/adjoint.hpp"

namespace aubin {

struct VerifyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Verdict { AubinVerified, CriterionFailed, Inconclusive };

std::string verdict_name(Verdict v);

struct BranchReport {
  std::string descriptor;
  std::string region;      // "q<=0", "q>=0", "all q", "degenerate", "multi-dim"
  Eigen::VectorXd q_rep;   // representative parameter direction
  Eigen::VectorXd u;       // solution at the representative
  Eigen::VectorXd xi;      // cone-level xi at the representative
  std::string implication; // "pass" | "fail" | "undecided" | "skipped"
  std::string detail;
};

struct MordukhovichReport {
  bool ran = false;
  bool trivial_only = false;
  bool undecided = false;
  std::optional<AdjointWitness> witness;
};

struct DsPoint {
  Eigen::VectorXd q;
  std::vector<Eigen::VectorXd> u_values;
};

struct VerificationReport {
  std::string problem;
  Eigen::VectorXd p_ref, x_ref, lambda;
  bool nondegenerate = false;
  std::string nondegeneracy_certificate;
  std::string mode;  // "iii" or "iv"
  Verdict verdict = Verdict::Inconclusive;
  std::string reason;
  std::optional<AdjointWitness> witness;
  std::string coverage;         // "covered" | "uncovered" | "undecided"
  std::string coverage_method;
  std::vector<BranchReport> branches;
  MordukhovichReport mordukhovich;
  std::vector<DsPoint> ds;
};

struct VerifyOptions {
  ImplicationMode mode = ImplicationMode::ZeroConsequent;
  bool compare_mordukhovich = false;
  double tol = 1e-9;
};

// Full pipeline result, keeping the data needed for follow-up queries.
struct VerifiedProblem {
  ReferenceData ref;
  BranchEnumeration branches;
  VerificationReport report;
};

VerifiedProblem verify_aubin_full(const ProblemSpec& spec, const VerifyOptions& opts = {});

VerificationReport verify_aubin(const ProblemSpec& spec, const VerifyOptions& opts = {});

// Graphical derivative of the solution map at the reference point: the set of
// u solving the linearized system for the given q. Refuses unless the
// verification verdict established the formula.
std::vector<Eigen::VectorXd> solution_map_derivative(const VerifiedProblem& vp,
                                                     const Eigen::VectorXd& q, double tol = 1e-9);

std::string report_to_json(const VerificationReport& r);
VerificationReport report_from_json(const std::string& text);
std::string report_to_text(const VerificationReport& r);

}  // namespace aubin
