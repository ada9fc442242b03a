// SPDX-License-Identifier: Apache-2.0
#include "aubin/verify.hpp"

#include <json.hpp>
#include <sstream>

namespace aubin {

using nlohmann::json;

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::AubinVerified: return "AubinVerified";
    case Verdict::CriterionFailed: return "CriterionFailed";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

json witness_to_json(const AdjointWitness& w) {
  json j;
  j["vstar"] = vec_to_json(w.vstar);
  j["aux"] = vec_to_json(w.aux);
  j["case"] = w.case_info;
  j["branch"] = w.branch;
  return j;
}

AdjointWitness witness_from_json(const json& j) {
  AdjointWitness w;
  w.vstar = vec_from_json(j.at("vstar"));
  w.aux = vec_from_json(j.at("aux"));
  w.case_info = j.value("case", "");
  w.branch = j.value("branch", "");
  return w;
}

std::string implication_name(ImplicationResult::Status s) {
  switch (s) {
    case ImplicationResult::Status::Pass: return "pass";
    case ImplicationResult::Status::Fail: return "fail";
    case ImplicationResult::Status::Undecided: return "undecided";
  }
  return "undecided";
}

}  // namespace

std::vector<Eigen::VectorXd> solution_map_derivative_internal(const VerifiedProblem& vp,
                                                              const Eigen::VectorXd& q, double tol);

VerifiedProblem verify_aubin_full(const ProblemSpec& spec, const VerifyOptions& opts) {
  VerifiedProblem vp;
  VerificationReport& rep = vp.report;
  rep.problem = spec.name;
  rep.p_ref = spec.p_ref;
  rep.x_ref = spec.x_ref;
  rep.mode = opts.mode == ImplicationMode::ZeroConsequent ? "iv" : "iii";

  vp.ref = assemble_reference(spec);
  // Multiplier recovery doubles as the feasibility check 0 in M(p_ref,x_ref);
  // failure there is an input error, not a verdict.
  NondegeneracyResult nd;
  try {
    nd = complete_reference(vp.ref, opts.tol);
  } catch (const ChainError& e) {
    throw VerifyError(std::string("reference point rejected: ") + e.what());
  }
  rep.lambda = vp.ref.lambda;
  rep.nondegenerate = nd.ok;
  rep.nondegeneracy_certificate = nd.certificate;
  if (!nd.ok) {
    rep.verdict = Verdict::Inconclusive;
    rep.reason = "nondegeneracy (A2) fails: " + nd.certificate;
    return vp;
  }
  if (!vp.ref.reduction.supported) {
    rep.verdict = Verdict::Inconclusive;
    rep.reason = vp.ref.reduction.diagnostic;
    return vp;
  }

  try {
    vp.branches = enumerate_critical_branches(vp.ref, opts.tol);
  } catch (const AviError& e) {
    rep.verdict = Verdict::Inconclusive;
    rep.reason = e.what();
    return vp;
  }

  const auto coverage = check_direction_coverage(vp.branches, vp.ref, opts.tol);
  rep.coverage_method = coverage.method;
  switch (coverage.verdict) {
    case CoverageResult::Verdict::Covered: rep.coverage = "covered"; break;
    case CoverageResult::Verdict::Uncovered: rep.coverage = "uncovered"; break;
    case CoverageResult::Verdict::Undecided: rep.coverage = "undecided"; break;
  }

  // Per-branch implication checks.
  bool any_fail = false, any_undecided = false;
  const int l = spec.l();
  for (const auto& b : vp.branches.branches) {
    BranchReport br;
    br.descriptor = b.descriptor;
    const auto res = check_adjoint_implication(vp.ref, b, opts.mode, opts.tol);
    br.implication = implication_name(res.status);
    br.detail = res.detail;
    if (res.status == ImplicationResult::Status::Fail && !any_fail) {
      any_fail = true;
      rep.witness = res.witness;
    }
    if (res.status == ImplicationResult::Status::Undecided) any_undecided = true;
    if (!b.exact) any_undecided = true;

    // Region and representative values (unit parameter directions).
    if (l == 1) {
      Eigen::VectorXd qm(1), qp(1);
      qm << -1.0;
      qp << 1.0;
      const auto sm = b.at(vp.ref, qm, opts.tol);
      const auto sp = b.at(vp.ref, qp, opts.tol);
      if (sm.feasible && sp.feasible) br.region = "all q";
      else if (sm.feasible) br.region = "q<=0";
      else if (sp.feasible) br.region = "q>=0";
      else br.region = "degenerate";
      const auto& use = sm.feasible ? sm : sp;
      if (sm.feasible || sp.feasible) {
        br.q_rep = sm.feasible ? qm : qp;
        br.u = use.u;
        br.xi = use.xi;
      }
    } else {
      br.region = "multi-dim";
      if (b.has_cone) {
        for (Eigen::Index i = 0; i < b.cone.rays().rows(); ++i) {
          const Eigen::VectorXd q = b.cone.rays().row(i).head(l).transpose();
          if (q.norm() > opts.tol) {
            br.q_rep = q / q.norm();
            const auto sol = b.at(vp.ref, br.q_rep, opts.tol);
            if (sol.feasible) {
              br.u = sol.u;
              br.xi = sol.xi;
            }
            break;
          }
        }
      }
    }
    rep.branches.push_back(std::move(br));
  }

  if (opts.compare_mordukhovich) {
    const auto m = mordukhovich_check(vp.ref, opts.tol);
    rep.mordukhovich.ran = true;
    rep.mordukhovich.trivial_only = m.trivial_only;
    rep.mordukhovich.undecided = m.undecided;
    rep.mordukhovich.witness = m.witness;
  }

  if (any_fail) {
    rep.verdict = Verdict::CriterionFailed;
    rep.reason = "a coderivative implication admits a nonzero adjoint solution";
  } else if (coverage.verdict == CoverageResult::Verdict::Uncovered) {
    rep.verdict = Verdict::CriterionFailed;
    std::ostringstream os;
    os << "the linearized system has no solution for q = [";
    for (Eigen::Index i = 0; i < coverage.uncovered_q.size(); ++i)
      os << (i ? ", " : "") << coverage.uncovered_q(i);
    os << "]";
    rep.reason = os.str();
  } else if (any_undecided || coverage.verdict == CoverageResult::Verdict::Undecided ||
             !vp.branches.exact) {
    rep.verdict = Verdict::Inconclusive;
    rep.reason = "a sampled (non-certified) step prevents an exact verdict";
  } else {
    rep.verdict = Verdict::AubinVerified;
    if (opts.mode == ImplicationMode::KernelConsequent)
      rep.reason = "mode (iii): metric subregularity of the system map is assumed, not checked";
  }

  // Graphical derivative samples once the formula is established.
  if (rep.verdict == Verdict::AubinVerified) {
    for (int i = 0; i < l; ++i) {
      for (const double sgn : {1.0, -1.0}) {
        DsPoint pt;
        pt.q = sgn * Eigen::VectorXd::Unit(l, i);
        pt.u_values = solution_map_derivative_internal(vp, pt.q, opts.tol);
        rep.ds.push_back(std::move(pt));
      }
    }
  }
  return vp;
}

namespace {
std::vector<Eigen::VectorXd> dedupe_points(std::vector<Eigen::VectorXd> pts, double tol) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& p : pts) {
    bool dup = false;
    for (const auto& q : out)
      if ((p - q).norm() <= tol) {
        dup = true;
        break;
      }
    if (!dup) out.push_back(p);
  }
  std::sort(out.begin(), out.end(), [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i)
      if (std::abs(a(i) - b(i)) > 1e-12) return a(i) < b(i);
    return false;
  });
  return out;
}
}  // namespace

std::vector<Eigen::VectorXd> solution_map_derivative_internal(const VerifiedProblem& vp,
                                                              const Eigen::VectorXd& q, double tol) {
  std::vector<Eigen::VectorXd> us;
  for (const auto& b : vp.branches.branches) {
    const auto sol = b.at(vp.ref, q, tol);
    if (sol.feasible) us.push_back(sol.u);
  }
  return dedupe_points(std::move(us), 1e-8);
}

std::vector<Eigen::VectorXd> solution_map_derivative(const VerifiedProblem& vp,
                                                     const Eigen::VectorXd& q, double tol) {
  if (vp.report.verdict != Verdict::AubinVerified)
    throw VerifyError("the graphical derivative formula requires a verified Aubin property");
  return solution_map_derivative_internal(vp, q, tol);
}

VerificationReport verify_aubin(const ProblemSpec& spec, const VerifyOptions& opts) {
  return verify_aubin_full(spec, opts).report;
}

std::string report_to_json(const VerificationReport& r) {
  json j;
  j["problem"] = r.problem;
  j["reference"]["p"] = vec_to_json(r.p_ref);
  j["reference"]["x"] = vec_to_json(r.x_ref);
  j["multiplier"] = vec_to_json(r.lambda);
  j["nondegenerate"] = r.nondegenerate;
  j["nondegeneracy_certificate"] = r.nondegeneracy_certificate;
  j["mode"] = r.mode;
  j["verdict"] = verdict_name(r.verdict);
  j["reason"] = r.reason;
  j["coverage"] = r.coverage;
  j["coverage_method"] = r.coverage_method;
  if (r.witness) j["witness"] = witness_to_json(*r.witness);
  j["branches"] = json::array();
  for (const auto& b : r.branches) {
    json jb;
    jb["descriptor"] = b.descriptor;
    jb["region"] = b.region;
    jb["q"] = vec_to_json(b.q_rep);
    jb["u"] = vec_to_json(b.u);
    jb["xi"] = vec_to_json(b.xi);
    jb["implication"] = b.implication;
    jb["detail"] = b.detail;
    j["branches"].push_back(std::move(jb));
  }
  if (r.mordukhovich.ran) {
    json jm;
    jm["trivial_only"] = r.mordukhovich.trivial_only;
    jm["undecided"] = r.mordukhovich.undecided;
    if (r.mordukhovich.witness) jm["witness"] = witness_to_json(*r.mordukhovich.witness);
    j["mordukhovich"] = std::move(jm);
  }
  json jds = json::array();
  for (const auto& pt : r.ds) {
    json jp;
    jp["q"] = vec_to_json(pt.q);
    jp["u"] = json::array();
    for (const auto& u : pt.u_values) jp["u"].push_back(vec_to_json(u));
    jds.push_back(std::move(jp));
  }
  j["DS"] = std::move(jds);
  return j.dump(2);
}

VerificationReport report_from_json(const std::string& text) {
  const json j = json::parse(text);
  VerificationReport r;
  r.problem = j.at("problem").get<std::string>();
  r.p_ref = vec_from_json(j.at("reference").at("p"));
  r.x_ref = vec_from_json(j.at("reference").at("x"));
  r.lambda = vec_from_json(j.at("multiplier"));
  r.nondegenerate = j.at("nondegenerate").get<bool>();
  r.nondegeneracy_certificate = j.value("nondegeneracy_certificate", "");
  r.mode = j.value("mode", "iv");
  const std::string v = j.at("verdict").get<std::string>();
  r.verdict = v == "AubinVerified" ? Verdict::AubinVerified
              : v == "CriterionFailed" ? Verdict::CriterionFailed : Verdict::Inconclusive;
  r.reason = j.value("reason", "");
  r.coverage = j.value("coverage", "");
  r.coverage_method = j.value("coverage_method", "");
  if (j.contains("witness")) r.witness = witness_from_json(j.at("witness"));
  for (const auto& jb : j.at("branches")) {
    BranchReport b;
    b.descriptor = jb.at("descriptor").get<std::string>();
    b.region = jb.at("region").get<std::string>();
    b.q_rep = vec_from_json(jb.at("q"));
    b.u = vec_from_json(jb.at("u"));
    b.xi = vec_from_json(jb.at("xi"));
    b.implication = jb.at("implication").get<std::string>();
    b.detail = jb.value("detail", "");
    r.branches.push_back(std::move(b));
  }
  if (j.contains("mordukhovich")) {
    r.mordukhovich.ran = true;
    r.mordukhovich.trivial_only = j.at("mordukhovich").at("trivial_only").get<bool>();
    r.mordukhovich.undecided = j.at("mordukhovich").value("undecided", false);
    if (j.at("mordukhovich").contains("witness"))
      r.mordukhovich.witness = witness_from_json(j.at("mordukhovich").at("witness"));
  }
  if (j.contains("DS")) {
    for (const auto& jp : j.at("DS")) {
      DsPoint pt;
      pt.q = vec_from_json(jp.at("q"));
      for (const auto& ju : jp.at("u")) pt.u_values.push_back(vec_from_json(ju));
      r.ds.push_back(std::move(pt));
    }
  }
  return r;
}

std::string report_to_text(const VerificationReport& r) {
  std::ostringstream os;
  os << "problem: " << r.problem << "\n";
  os << "verdict: " << verdict_name(r.verdict) << " (mode " << r.mode << ")\n";
  if (!r.reason.empty()) os << "reason: " << r.reason << "\n";
  os << "multiplier: [" << r.lambda.transpose() << "]\n";
  os << "nondegenerate: " << (r.nondegenerate ? "yes" : "no");
  if (!r.nondegeneracy_certificate.empty()) os << " (" << r.nondegeneracy_certificate << ")";
  os << "\ncoverage: " << r.coverage << " [" << r.coverage_method << "]\n";
  os << "branches (" << r.branches.size() << "):\n";
  for (const auto& b : r.branches) {
    os << "  - " << b.descriptor << "  region " << b.region << "  implication " << b.implication;
    if (b.u.size() > 0)
      os << "  u=[" << b.u.transpose() << "]  xi=[" << b.xi.transpose() << "] at q=["
         << b.q_rep.transpose() << "]";
    os << "\n";
  }
  if (r.witness) {
    os << "adjoint witness on branch '" << r.witness->branch << "': v*=[" << r.witness->vstar.transpose()
       << "] (" << r.witness->case_info << ")\n";
  }
  if (r.mordukhovich.ran) {
    os << "classical (nondirectional) criterion: ";
    if (r.mordukhovich.undecided)
      os << "undecided\n";
    else if (r.mordukhovich.trivial_only)
      os << "only the trivial adjoint solution (criterion applies)\n";
    else {
      os << "nonzero adjoint solution exists (criterion fails)";
      if (r.mordukhovich.witness)
        os << ": v*=[" << r.mordukhovich.witness->vstar.transpose() << "]";
      os << "\n";
    }
  }
  if (!r.ds.empty()) {
    os << "graphical derivative of the solution map:\n";
    for (const auto& pt : r.ds) {
      os << "  q=[" << pt.q.transpose() << "] -> {";
      for (std::size_t i = 0; i < pt.u_values.size(); ++i)
        os << (i ? ", " : " ") << "[" << pt.u_values[i].transpose() << "]";
      os << " }\n";
    }
  }
  return os.str();
}

}  // namespace aubin
