// SPDX-License-Identifier: Apache-2.0
#include "aubin/adjoint.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "aubin/linalg.hpp"

namespace aubin {

namespace {

Eigen::MatrixXd stack_rows(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.rows() == 0) return B;
  if (B.rows() == 0) return A;
  Eigen::MatrixXd out(A.rows() + B.rows(), A.cols());
  out.topRows(A.rows()) = A;
  out.bottomRows(B.rows()) = B;
  return out;
}

// One admissible structure of the adjoint system: equality rows, rows
// required nonnegative, optionally a block of rows affine in a scalar
// parameter t in [0,1].
struct SubSystem {
  Eigen::MatrixXd eq;
  Eigen::MatrixXd ge0;
  bool has_t = false;
  Eigen::MatrixXd eq_t;  // added to the last eq_t.rows() rows of eq, scaled by t
  std::string info;
};

// Per-component / per-block constraint menus whose cross product enumerates
// all admissible structures.
struct ConstraintOption {
  Eigen::MatrixXd eq;
  Eigen::MatrixXd ge0;
  Eigen::MatrixXd eq_t;  // same row count as eq when parametric
  bool has_t = false;
  std::string info;
};

struct SearchOutcome {
  bool found = false;
  bool undecided = false;
  Eigen::VectorXd witness;
  std::string info;
};

// The directional structure of the adjoint system along one branch point.
struct DirectionPattern {
  std::vector<std::optional<orthant::DirCase>> scalar_cases;  // per reduced comp
  // Lorentz apex block directions (v, xi); zero means the full limiting case.
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> apex_dirs;
  std::string signature;
};

Eigen::MatrixXd unit_row(int cols, int idx, double val = 1.0) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(1, cols);
  r(0, idx) = val;
  return r;
}

}  // namespace

Eigen::MatrixXd adjoint_base_matrix(const ReferenceData& ref) {
  if (!ref.completed) throw ChainError("reference data not completed");
  const ReductionData& red = ref.reduction;
  const int n = ref.n(), d = red.d();
  Eigen::MatrixXd M(n, n + d);
  Eigen::MatrixXd head = theta_lagrangian(ref).transpose();
  for (const auto& blk : red.blocks) {
    if (blk.kind != ThetaBlock::Kind::LorentzApex) continue;
    const Eigen::MatrixXd gb = red.grad_b.middleRows(blk.offset, blk.dim);
    head -= gb.transpose() * gb;
  }
  M.leftCols(n) = head;
  if (d > 0) M.rightCols(d) = red.grad_b.transpose();
  return M;
}

namespace {

// Menu of structural options for one reduced component / apex block.
std::vector<ConstraintOption> scalar_options(const ReferenceData& ref, orthant::DirCase c, int comp) {
  const int n = ref.n(), d = ref.reduction.d();
  const int cols = n + d;
  Eigen::MatrixXd input_row = Eigen::MatrixXd::Zero(1, cols);  // (grad_b v*)_comp
  input_row.block(0, 0, 1, n) = ref.reduction.grad_b.row(comp);
  const Eigen::MatrixXd c_row = unit_row(cols, n + comp);

  std::vector<ConstraintOption> out;
  switch (c) {
    case orthant::DirCase::OutputZero: {
      ConstraintOption o;
      o.eq = c_row;
      o.info = "eta_" + std::to_string(comp) + "=0";
      out.push_back(std::move(o));
      break;
    }
    case orthant::DirCase::NeedsZeroInput: {
      ConstraintOption o;
      o.eq = input_row;
      o.info = "input_" + std::to_string(comp) + "=0";
      out.push_back(std::move(o));
      break;
    }
    case orthant::DirCase::OriginUnion: {
      ConstraintOption a, b, cc;
      a.eq = input_row;
      a.info = "origin_" + std::to_string(comp) + ":input=0";
      b.eq = c_row;
      b.info = "origin_" + std::to_string(comp) + ":eta=0";
      cc.ge0 = stack_rows(c_row, input_row);
      cc.info = "origin_" + std::to_string(comp) + ":both>=0";
      out.push_back(std::move(a));
      out.push_back(std::move(b));
      out.push_back(std::move(cc));
      break;
    }
  }
  return out;
}

std::vector<ConstraintOption> apex_options(const ReferenceData& ref, const ThetaBlock& blk,
                                           const Eigen::VectorXd& v, const Eigen::VectorXd& xi,
                                           double tol, bool* sampled) {
  const int n = ref.n(), d = ref.reduction.d();
  const int cols = n + d;
  const Eigen::MatrixXd gb = ref.reduction.grad_b.middleRows(blk.offset, blk.dim);

  // Family equation rows: (grad_b v*)_blk - M d_blk = 0 for a family matrix M.
  auto family_rows = [&](const Eigen::MatrixXd& M) {
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(blk.dim, cols);
    rows.block(0, 0, blk.dim, n) = gb;
    rows.block(0, n + blk.offset, blk.dim, blk.dim) = -M;
    return rows;
  };
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(blk.dim, blk.dim);

  std::vector<ConstraintOption> out;
  const bool zero_dir = v.norm() + xi.norm() <= tol;
  std::optional<lorentz::GraphDirCase> tag;
  if (!zero_dir) {
    const auto [h, k] = lorentz::convert_direction(v, xi);
    tag = lorentz::classify_graph_direction(blk.lspec, h, k, tol);
  }

  auto want = [&](lorentz::GraphDirCase c) {
    return zero_dir || *tag == c;
  };

  if (want(lorentz::GraphDirCase::IntK)) {
    ConstraintOption o;
    o.eq = family_rows(I);
    o.info = "identity";
    out.push_back(std::move(o));
  }
  if (want(lorentz::GraphDirCase::IntPolar)) {
    ConstraintOption o;
    o.eq = family_rows(Eigen::MatrixXd::Zero(blk.dim, blk.dim));
    o.info = "zero";
    out.push_back(std::move(o));
  }
  const bool need_c = want(lorentz::GraphDirCase::Outside) || want(lorentz::GraphDirCase::BdK) ||
                      want(lorentz::GraphDirCase::BdPolar);
  const bool need_a = want(lorentz::GraphDirCase::BdK);
  const bool need_b = want(lorentz::GraphDirCase::BdPolar);

  if (blk.dim == 2) {
    for (const double w : {-1.0, 1.0}) {
      Eigen::VectorXd wv(1);
      wv << w;
      if (need_c) {
        ConstraintOption o;
        o.eq = family_rows(lorentz::c_matrix(blk.lspec, wv, 0.0));
        o.info = "C(w=" + std::to_string(static_cast<int>(w)) + ")";
        out.push_back(std::move(o));
      }
      // Segment parts conv{u*, A u*} / conv{u*, B u*} with u* = -d_blk; rows
      // depend affinely on the convex weight t.
      auto segment_option = [&](const Eigen::MatrixXd& M, const Eigen::VectorXd& constraint_vec,
                                const std::string& name) {
        ConstraintOption o;
        o.eq = family_rows(I);
        o.eq_t = Eigen::MatrixXd::Zero(blk.dim, cols);
        o.eq_t.block(0, n + blk.offset, blk.dim, blk.dim) = I - M;  // -( (1-t)I + tM ) = -I + t(I-M)
        o.has_t = true;
        // Admissibility <constraint_vec, u*> >= 0 with u* = -d.
        Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, cols);
        row.block(0, n + blk.offset, 1, blk.dim) = -constraint_vec.transpose();
        o.ge0 = row;
        o.info = name;
        return o;
      };
      if (need_a) {
        const Eigen::VectorXd avec = lorentz::join_parts(blk.lspec, 1.0, -wv);
        out.push_back(segment_option(lorentz::a_matrix(blk.lspec, wv), avec,
                                     "convA(w=" + std::to_string(static_cast<int>(w)) + ")"));
      }
      if (need_b) {
        const Eigen::VectorXd bvec = lorentz::join_parts(blk.lspec, 1.0, wv);
        out.push_back(segment_option(lorentz::b_matrix(blk.lspec, wv), bvec,
                                     "convB(w=" + std::to_string(static_cast<int>(w)) + ")"));
      }
    }
  } else if (need_c || need_a || need_b) {
    // Sphere sampling for blocks beyond dim 2: sound for finding witnesses,
    // insufficient to certify a pass.
    *sampled = true;
    const int m = blk.dim - 1;
    const int wsamples = m == 2 ? 64 : 128;
    for (int iw = 0; iw < wsamples; ++iw) {
      Eigen::VectorXd w(m);
      if (m == 2) {
        const double th = 2.0 * M_PI * iw / wsamples;
        w << std::cos(th), std::sin(th);
      } else {
        std::mt19937_64 rng(1000 + static_cast<unsigned>(iw));
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int i = 0; i < m; ++i) w(i) = gauss(rng);
        w.normalize();
      }
      if (need_c) {
        for (const double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
          ConstraintOption o;
          o.eq = family_rows(lorentz::c_matrix(blk.lspec, w, alpha));
          o.info = "C(sampled)";
          out.push_back(std::move(o));
        }
      }
      if (need_a) {
        ConstraintOption o;
        o.eq = family_rows(lorentz::a_matrix(blk.lspec, w));
        o.eq_t = Eigen::MatrixXd::Zero(blk.dim, cols);
        o.eq_t.block(0, n + blk.offset, blk.dim, blk.dim) =
            Eigen::MatrixXd::Identity(blk.dim, blk.dim) - lorentz::a_matrix(blk.lspec, w);
        o.has_t = true;
        o.info = "convA(sampled)";
        Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, cols);
        row.block(0, n + blk.offset, 1, blk.dim) =
            -lorentz::join_parts(blk.lspec, 1.0, -w).transpose();
        o.ge0 = row;
        out.push_back(std::move(o));
      }
      if (need_b) {
        ConstraintOption o;
        o.eq = family_rows(lorentz::b_matrix(blk.lspec, w));
        o.eq_t = Eigen::MatrixXd::Zero(blk.dim, cols);
        o.eq_t.block(0, n + blk.offset, blk.dim, blk.dim) =
            Eigen::MatrixXd::Identity(blk.dim, blk.dim) - lorentz::b_matrix(blk.lspec, w);
        o.has_t = true;
        o.info = "convB(sampled)";
        Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, cols);
        row.block(0, n + blk.offset, 1, blk.dim) =
            -lorentz::join_parts(blk.lspec, 1.0, w).transpose();
        o.ge0 = row;
        out.push_back(std::move(o));
      }
    }
  }
  return out;
}

// Looks for a generator of {eq z = 0, ge0 z >= 0} violating the consequent.
SearchOutcome search_cone(const Eigen::MatrixXd& eq, const Eigen::MatrixXd& ge0, int n,
                          ImplicationMode mode, const Eigen::MatrixXd& gradH_p, double tol) {
  SearchOutcome out;
  PolyhedralCone cone = PolyhedralCone::from_halfspaces(
      ge0.rows() ? Eigen::MatrixXd(-ge0) : Eigen::MatrixXd(0, eq.cols()), eq);
  auto offending = [&](const Eigen::VectorXd& z) {
    const Eigen::VectorXd vstar = z.head(n);
    if (mode == ImplicationMode::ZeroConsequent) return vstar.norm() > tol;
    return (gradH_p.transpose() * vstar).norm() > tol;
  };
  for (Eigen::Index i = 0; i < cone.rays().rows(); ++i) {
    const Eigen::VectorXd z = cone.rays().row(i).transpose();
    if (offending(z)) {
      out.found = true;
      out.witness = z;
      return out;
    }
  }
  for (Eigen::Index i = 0; i < cone.lineality().rows(); ++i) {
    const Eigen::VectorXd z = cone.lineality().row(i).transpose();
    if (offending(z)) {
      out.found = true;
      out.witness = z;
      return out;
    }
  }
  return out;
}

SearchOutcome search_subsystem(const SubSystem& sys, int n, ImplicationMode mode,
                               const Eigen::MatrixXd& gradH_p, double tol) {
  if (!sys.has_t) return search_cone(sys.eq, sys.ge0, n, mode, gradH_p, tol);

  // Candidate convex weights: endpoints, a coarse grid, and (for square
  // systems) the real roots of det(M(t)), which capture every t admitting a
  // nontrivial solution.
  std::set<double> cand = {0.0, 1.0};
  for (int i = 1; i < 21; ++i) cand.insert(i / 21.0);
  bool exact = false;
  if (sys.eq.rows() == sys.eq.cols()) {
    const int tr = static_cast<int>(sys.eq_t.rows());
    const int deg = tr;  // det is a polynomial of degree <= #parametric rows
    Eigen::MatrixXd V(deg + 1, deg + 1);
    Eigen::VectorXd dets(deg + 1);
    for (int k = 0; k <= deg; ++k) {
      const double t = static_cast<double>(k) / std::max(1, deg);
      Eigen::MatrixXd M = sys.eq;
      M.bottomRows(tr) += t * sys.eq_t;
      dets(k) = M.determinant();
      for (int p = 0; p <= deg; ++p) V(k, p) = std::pow(t, p);
    }
    const Eigen::VectorXd coeffs = V.fullPivLu().solve(dets);
    if (coeffs.cwiseAbs().maxCoeff() > 1e-12) {
      exact = true;
      for (const double r : linalg::real_roots(coeffs))
        if (r > -1e-9 && r < 1.0 + 1e-9) cand.insert(std::clamp(r, 0.0, 1.0));
    }
  }
  SearchOutcome agg;
  for (const double t : cand) {
    SubSystem fixed = sys;
    fixed.has_t = false;
    fixed.eq.bottomRows(sys.eq_t.rows()) += t * sys.eq_t;
    auto r = search_cone(fixed.eq, fixed.ge0, n, mode, gradH_p, tol);
    if (r.found) {
      r.info = sys.info + " t=" + std::to_string(t);
      return r;
    }
  }
  // Without the determinant argument the grid cannot certify all t.
  agg.undecided = !exact;
  return agg;
}

std::vector<DirectionPattern> branch_patterns(const ReferenceData& ref, const CriticalBranch& branch,
                                              double tol) {
  const ReductionData& red = ref.reduction;
  const int l = ref.l(), n = ref.n(), d = red.d();
  std::vector<Eigen::VectorXd> points;  // (q,u,xi_theta)

  if (branch.has_cone) {
    for (Eigen::Index i = 0; i < branch.cone.rays().rows(); ++i)
      points.push_back(branch.cone.rays().row(i).transpose());
    for (Eigen::Index i = 0; i < branch.cone.lineality().rows(); ++i) {
      points.push_back(branch.cone.lineality().row(i).transpose());
      points.push_back(-branch.cone.lineality().row(i).transpose());
    }
    Eigen::VectorXd ri = Eigen::VectorXd::Zero(l + n + d);
    for (Eigen::Index i = 0; i < branch.cone.rays().rows(); ++i)
      ri += branch.cone.rays().row(i).transpose();
    if (ri.norm() > tol) points.push_back(ri);
  } else {
    for (const double s : {1.0, -1.0}) {
      Eigen::VectorXd q = Eigen::VectorXd::Constant(std::max(l, 1), s);
      if (l >= 1) {
        q = Eigen::VectorXd::Zero(l);
        q(0) = s;
      }
      const auto sol = branch.at(ref, q, tol);
      if (!sol.feasible) continue;
      Eigen::VectorXd z(l + n + d);
      z << q, sol.u, sol.xi_theta;
      points.push_back(z);
    }
  }

  std::vector<DirectionPattern> out;
  std::set<std::string> seen;
  for (const auto& z : points) {
    const Eigen::VectorXd q = z.head(l);
    const Eigen::VectorXd u = z.segment(l, n);
    const Eigen::VectorXd xi = z.tail(d);
    if (q.norm() + u.norm() <= tol) continue;  // the theorem quantifies nonzero (q,u)
    DirectionPattern pat;
    pat.scalar_cases.assign(static_cast<std::size_t>(d), std::nullopt);
    const Eigen::VectorXd v = d > 0 ? Eigen::VectorXd(red.grad_b * u) : Eigen::VectorXd(0);
    std::ostringstream sig;
    for (const auto& blk : red.blocks) {
      if (blk.kind == ThetaBlock::Kind::Scalar) {
        const auto c = orthant::scalar_dir_case(blk.pc, v(blk.offset), xi(blk.offset), tol);
        pat.scalar_cases[static_cast<std::size_t>(blk.offset)] = c;
        sig << static_cast<int>(c) << ";";
      } else if (blk.kind == ThetaBlock::Kind::LorentzPolarInterior) {
        for (int i = 0; i < blk.dim; ++i)
          pat.scalar_cases[static_cast<std::size_t>(blk.offset + i)] = orthant::DirCase::NeedsZeroInput;
        sig << "P;";
      } else {
        Eigen::VectorXd vb = v.segment(blk.offset, blk.dim);
        Eigen::VectorXd xib = xi.segment(blk.offset, blk.dim);
        if (vb.norm() + xib.norm() <= tol) {
          vb.setZero();
          xib.setZero();
          sig << "L0;";
        } else {
          const auto [h, k] = lorentz::convert_direction(vb, xib);
          sig << "L" << static_cast<int>(lorentz::classify_graph_direction(blk.lspec, h, k, tol))
              << ";";
        }
        pat.apex_dirs.emplace_back(vb, xib);
      }
    }
    pat.signature = sig.str();
    if (seen.insert(pat.signature).second) out.push_back(std::move(pat));
  }
  return out;
}

ImplicationResult run_implication(const ReferenceData& ref, const DirectionPattern& pat,
                                  ImplicationMode mode, const std::string& branch_name, double tol) {
  const ReductionData& red = ref.reduction;
  const int n = ref.n(), d = red.d();
  const Eigen::MatrixXd base = adjoint_base_matrix(ref);

  // Build the option menus.
  std::vector<std::vector<ConstraintOption>> menus;
  bool sampled = false;
  std::size_t apex_i = 0;
  for (const auto& blk : red.blocks) {
    if (blk.kind == ThetaBlock::Kind::Scalar || blk.kind == ThetaBlock::Kind::LorentzPolarInterior) {
      for (int i = 0; i < blk.dim; ++i) {
        const auto c = pat.scalar_cases[static_cast<std::size_t>(blk.offset + i)];
        if (c) menus.push_back(scalar_options(ref, *c, blk.offset + i));
      }
    } else {
      const auto& dir = pat.apex_dirs[apex_i++];
      menus.push_back(apex_options(ref, blk, dir.first, dir.second, tol, &sampled));
    }
  }

  std::size_t combos = 1;
  for (const auto& m : menus) combos *= std::max<std::size_t>(1, m.size());
  if (combos > 100000) {
    ImplicationResult r;
    r.status = ImplicationResult::Status::Undecided;
    r.detail = "case explosion (" + std::to_string(combos) + " subsystems)";
    return r;
  }

  bool undecided = sampled;
  for (std::size_t combo = 0; combo < combos; ++combo) {
    SubSystem sys;
    sys.eq = base;
    sys.ge0 = Eigen::MatrixXd(0, n + d);
    sys.eq_t = Eigen::MatrixXd(0, n + d);
    std::size_t c = combo;
    std::ostringstream info;
    bool ok = true;
    for (const auto& m : menus) {
      if (m.empty()) continue;
      const auto& opt = m[c % m.size()];
      c /= m.size();
      if (opt.has_t && sys.has_t) {
        // At most one parametric block per subsystem keeps the determinant
        // argument exact; several cannot occur for the supported cones.
        ok = false;
        break;
      }
      if (opt.has_t) {
        sys.has_t = true;
        sys.eq = stack_rows(sys.eq, opt.eq);
        sys.eq_t = opt.eq_t;
      } else {
        // Non-parametric rows go above any parametric block.
        if (sys.has_t) {
          const Eigen::Index tr = sys.eq_t.rows();
          Eigen::MatrixXd top = sys.eq.topRows(sys.eq.rows() - tr);
          Eigen::MatrixXd bottom = sys.eq.bottomRows(tr);
          sys.eq = stack_rows(stack_rows(top, opt.eq), bottom);
        } else {
          sys.eq = stack_rows(sys.eq, opt.eq);
        }
      }
      if (opt.ge0.rows() > 0) sys.ge0 = stack_rows(sys.ge0, opt.ge0);
      if (!opt.info.empty()) info << opt.info << " ";
    }
    if (!ok) {
      undecided = true;
      continue;
    }
    sys.info = info.str();
    const auto r = search_subsystem(sys, n, mode, ref.gradH_p, tol);
    if (r.found) {
      ImplicationResult res;
      res.status = ImplicationResult::Status::Fail;
      AdjointWitness w;
      const Eigen::VectorXd z = r.witness / std::max(r.witness.head(n).norm(), 1e-300);
      w.vstar = z.head(n);
      w.aux = z.tail(d);
      w.case_info = sys.info + r.info;
      w.branch = branch_name;
      res.witness = std::move(w);
      res.detail = "nonzero adjoint solution in subsystem [" + sys.info + "]";
      return res;
    }
    if (r.undecided) undecided = true;
  }
  ImplicationResult res;
  res.status = undecided ? ImplicationResult::Status::Undecided : ImplicationResult::Status::Pass;
  if (undecided) res.detail = "sampled family path cannot certify the implication";
  return res;
}

}  // namespace

ImplicationResult check_adjoint_implication(const ReferenceData& ref, const CriticalBranch& branch,
                                            ImplicationMode mode, double tol) {
  if (!ref.completed) throw ChainError("reference data not completed");
  const auto patterns = branch_patterns(ref, branch, tol);
  if (patterns.empty()) {
    ImplicationResult r;
    r.status = ImplicationResult::Status::Pass;
    r.detail = "branch carries no nonzero (q,u) direction";
    return r;
  }
  ImplicationResult agg;
  agg.status = ImplicationResult::Status::Pass;
  for (const auto& pat : patterns) {
    const auto r = run_implication(ref, pat, mode, branch.descriptor, tol);
    if (r.status == ImplicationResult::Status::Fail) return r;
    if (r.status == ImplicationResult::Status::Undecided) {
      agg.status = ImplicationResult::Status::Undecided;
      agg.detail = r.detail;
    }
  }
  return agg;
}

MordukhovichResult mordukhovich_check(const ReferenceData& ref, double tol) {
  if (!ref.completed) throw ChainError("reference data not completed");
  const ReductionData& red = ref.reduction;
  DirectionPattern pat;
  pat.scalar_cases.assign(static_cast<std::size_t>(red.d()), std::nullopt);
  for (const auto& blk : red.blocks) {
    if (blk.kind == ThetaBlock::Kind::Scalar) {
      pat.scalar_cases[static_cast<std::size_t>(blk.offset)] =
          blk.pc == orthant::PointClass::ActivePositive ? orthant::DirCase::NeedsZeroInput
                                                        : orthant::DirCase::OriginUnion;
    } else if (blk.kind == ThetaBlock::Kind::LorentzPolarInterior) {
      for (int i = 0; i < blk.dim; ++i)
        pat.scalar_cases[static_cast<std::size_t>(blk.offset + i)] = orthant::DirCase::NeedsZeroInput;
    } else {
      pat.apex_dirs.emplace_back(Eigen::VectorXd::Zero(blk.dim), Eigen::VectorXd::Zero(blk.dim));
    }
  }
  const auto r = run_implication(ref, pat, ImplicationMode::ZeroConsequent, "nondirectional", tol);
  MordukhovichResult out;
  if (r.status == ImplicationResult::Status::Fail) {
    out.trivial_only = false;
    out.witness = r.witness;
  } else if (r.status == ImplicationResult::Status::Pass) {
    out.trivial_only = true;
  } else {
    out.undecided = true;
  }
  return out;
}

bool mordukhovich_ge_contains(const ReferenceData& ref, const Eigen::VectorXd& vstar, double tol) {
  const Eigen::VectorXd zero_u = Eigen::VectorXd::Zero(ref.n());
  const auto value = gamma_dirlim_coderiv(ref, zero_u, zero_u, vstar, tol);
  const Eigen::VectorXd target = -(ref.gradH_x.transpose() * vstar);
  return value.contains(target, tol) == GammaCoderivValue::Verdict::In;
}

}  // namespace aubin
