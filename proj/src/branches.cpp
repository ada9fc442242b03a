// SPDX-License-Identifier: Apache-2.0
#include "aubin/branches.hpp"

#include <algorithm>
#include <cmath>
#include <random>
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

struct ReducedConeRows {
  Eigen::MatrixXd ineq;
  Eigen::MatrixXd eq;
  // Source block index of every ineq row (for branch tags).
  std::vector<int> row_block;
  bool polyhedral = true;
};

ReducedConeRows reduced_cone_rows(const ReferenceData& ref) {
  const ReductionData& red = ref.reduction;
  const int d = red.d();
  ReducedConeRows out;
  out.ineq = Eigen::MatrixXd(0, d);
  out.eq = Eigen::MatrixXd(0, d);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (std::size_t bi = 0; bi < red.blocks.size(); ++bi) {
    const auto& blk = red.blocks[bi];
    if (blk.kind == ThetaBlock::Kind::Scalar) {
      Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, d);
      row(0, blk.offset) = 1.0;
      if (blk.pc == orthant::PointClass::ActivePositive) {
        out.eq = stack_rows(out.eq, row);
      } else {
        out.ineq = stack_rows(out.ineq, row);
        out.row_block.push_back(static_cast<int>(bi));
      }
    } else if (blk.kind == ThetaBlock::Kind::LorentzPolarInterior) {
      Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(blk.dim, d);
      for (int i = 0; i < blk.dim; ++i) rows(i, blk.offset + i) = 1.0;
      out.eq = stack_rows(out.eq, rows);
    } else {  // LorentzApex
      if (blk.dim > 2) {
        out.polyhedral = false;
        continue;
      }
      // dim-2 Lorentz cone in H-rep, axis-aware.
      const int i0 = blk.offset + (blk.lspec.axis == ConeSpec::Axis::First ? 0 : 1);
      const int ib = blk.offset + (blk.lspec.axis == ConeSpec::Axis::First ? 1 : 0);
      Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(2, d);
      rows(0, ib) = inv_sqrt2;
      rows(0, i0) = -inv_sqrt2;
      rows(1, ib) = -inv_sqrt2;
      rows(1, i0) = -inv_sqrt2;
      out.ineq = stack_rows(out.ineq, rows);
      out.row_block.push_back(static_cast<int>(bi));
      out.row_block.push_back(static_cast<int>(bi));
    }
  }
  return out;
}

std::string face_descriptor(const std::vector<int>& active) {
  std::ostringstream os;
  os << "face {";
  for (std::size_t i = 0; i < active.size(); ++i) os << (i ? "," : "") << active[i];
  os << "}";
  return os.str();
}

}  // namespace

Eigen::MatrixXd theta_lagrangian(const ReferenceData& ref) {
  return ref.gradH_x + ref.theta_hessian();
}

Eigen::VectorXd lift_xi(const ReferenceData& ref, const Eigen::VectorXd& u,
                        const Eigen::VectorXd& xi_theta) {
  const ReductionData& red = ref.reduction;
  Eigen::MatrixXd hess_mu_h = Eigen::MatrixXd::Zero(ref.s(), ref.s());
  for (std::size_t k = 0; k < red.hess_h.size(); ++k)
    if (red.hess_h[k].size() > 0) hess_mu_h += red.mu(static_cast<Eigen::Index>(k)) * red.hess_h[k];
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(ref.s());
  if (red.d() > 0) xi = red.grad_h.transpose() * xi_theta;
  xi += hess_mu_h * (ref.gradg * u);
  return xi;
}

std::optional<PolyhedralCone> reduced_critical_cone(const ReferenceData& ref) {
  if (!ref.completed) throw AviError("reference data not completed");
  if (ref.reduction.d() == 0) return std::nullopt;
  const auto rows = reduced_cone_rows(ref);
  if (!rows.polyhedral) return std::nullopt;
  return PolyhedralCone::from_halfspaces(rows.ineq, rows.eq);
}

namespace {

// Newton search for boundary-ray solutions of the conic system when the
// Lorentz block is too big for the polyhedral route. Found roots are genuine
// solutions (residual-checked); the search makes no completeness claim.
CriticalBranch::Solutions boundary_ray_search(const ReferenceData& ref, const Eigen::VectorXd& q,
                                              double tol) {
  CriticalBranch::Solutions out;
  const auto& red = ref.reduction;
  const int n = ref.n(), d = red.d();
  const auto& blk = red.blocks[0];
  const Eigen::MatrixXd lagr = theta_lagrangian(ref);
  const Eigen::VectorXd rhs0 = ref.gradH_p * q;

  auto residual = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd {
    const Eigen::VectorXd u = y.head(n);
    const double m = y(n);
    const Eigen::VectorXd v = red.grad_b * u;
    const double v0 = lorentz::z0_part(blk.lspec, v);
    const Eigen::VectorXd vbar = lorentz::bar_part(blk.lspec, v);
    const Eigen::VectorXd xi = m * lorentz::join_parts(blk.lspec, -v0, vbar);
    Eigen::VectorXd F(n + 1);
    F.head(n) = rhs0 + lagr * u + red.grad_b.transpose() * xi;
    F(n) = v0 - vbar.norm();
    return F;
  };

  std::mt19937_64 rng(4242);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int seed = 0; seed < 200; ++seed) {
    Eigen::VectorXd y(n + 1);
    for (int i = 0; i < n; ++i) y(i) = gauss(rng);
    y(n) = std::abs(gauss(rng));
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
      const Eigen::VectorXd F = residual(y);
      if (F.norm() <= 1e-12) {
        converged = true;
        break;
      }
      Eigen::MatrixXd J(n + 1, n + 1);
      const double h = 1e-7;
      for (int c = 0; c < n + 1; ++c) {
        Eigen::VectorXd yp = y;
        yp(c) += h;
        J.col(c) = (residual(yp) - F) / h;
      }
      const auto step = linalg::solve_least_squares(J, -F);
      double alpha = 1.0;
      bool improved = false;
      for (int half = 0; half < 30; ++half) {
        if (residual(y + alpha * step.x).norm() < F.norm()) {
          y += alpha * step.x;
          improved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!improved) break;
    }
    if (!converged) continue;
    const Eigen::VectorXd u = y.head(n);
    const double m = y(n);
    const Eigen::VectorXd v = red.grad_b * u;
    if (m < -tol || lorentz::bar_part(blk.lspec, v).norm() <= tol) continue;
    out.feasible = true;
    out.unique = true;
    out.u = u;
    const double v0 = lorentz::z0_part(blk.lspec, v);
    out.xi_theta = m * lorentz::join_parts(blk.lspec, -v0, lorentz::bar_part(blk.lspec, v));
    out.xi = lift_xi(ref, out.u, out.xi_theta);
    (void)d;
    return out;
  }
  return out;
}

}  // namespace

CriticalBranch::Solutions CriticalBranch::at(const ReferenceData& ref, const Eigen::VectorXd& q,
                                             double tol) const {
  Solutions out;
  const int l = ref.l(), n = ref.n(), d = ref.reduction.d();
  if (tag == Tag::LorentzBoundaryRay && !exact) return boundary_ray_search(ref, q, tol);
  Eigen::MatrixXd E = has_cone ? cone.eq() : eq_rows;
  if (E.rows() == 0) return out;
  const Eigen::MatrixXd Eq = E.leftCols(l);
  const Eigen::MatrixXd Ey = E.rightCols(n + d);
  const auto ls = linalg::solve_least_squares(Ey, -Eq * q);
  const double scale = std::max(1.0, q.norm());
  if (ls.residual > tol * scale) return out;
  Eigen::VectorXd y = ls.x;
  if (has_cone) {
    const Eigen::MatrixXd A = cone.ineq();
    if (A.rows() > 0) {
      const Eigen::MatrixXd Aq = A.leftCols(l);
      const Eigen::MatrixXd Ay = A.rightCols(n + d);
      Eigen::VectorXd bound = -(Aq * q);
      if (ls.kernel.cols() == 0) {
        if (((Ay * y) - bound).maxCoeff() > tol * scale) return out;
      } else {
        // Repair within the affine solution set (alternating projections).
        const Eigen::MatrixXd Az = Ay * ls.kernel;
        Eigen::VectorXd z = Eigen::VectorXd::Zero(ls.kernel.cols());
        const Eigen::VectorXd base_val = Ay * y - bound;
        for (int it = 0; it < 200; ++it) {
          const Eigen::VectorXd viol = base_val + Az * z;
          Eigen::Index worst;
          if (viol.maxCoeff(&worst) <= tol * scale) break;
          const double nn = Az.row(worst).squaredNorm();
          if (nn <= tol) return out;  // violated constraint insensitive to the family
          z -= Az.row(worst).transpose() * (viol(worst) / nn);
        }
        if ((base_val + Az * z).maxCoeff() > tol * scale) return out;
        y += ls.kernel * z;
      }
    }
  }
  out.feasible = true;
  out.unique = ls.kernel.cols() == 0;
  out.family_basis = ls.kernel;
  out.u = y.head(n);
  out.xi_theta = y.tail(d);
  // Conic filters for the non-polyhedral path.
  if (!has_cone && tag != Tag::Face) {
    const auto& red = ref.reduction;
    for (const auto& blk : red.blocks) {
      if (blk.kind != ThetaBlock::Kind::LorentzApex) continue;
      const Eigen::VectorXd vb = (red.grad_b * out.u).segment(blk.offset, blk.dim);
      const Eigen::VectorXd xib = out.xi_theta.segment(blk.offset, blk.dim);
      bool ok = true;
      switch (tag) {
        case Tag::LorentzInterior:
          ok = lorentz::in_cone(blk.lspec, vb, tol);
          break;
        case Tag::LorentzApex:
          ok = vb.norm() <= tol * std::max(1.0, out.u.norm()) && lorentz::in_polar(blk.lspec, xib, tol);
          break;
        default:
          break;
      }
      if (!ok) {
        out.feasible = false;
        return out;
      }
    }
  }
  out.xi = lift_xi(ref, out.u, out.xi_theta);
  return out;
}

BranchEnumeration enumerate_critical_branches(const ReferenceData& ref, double tol) {
  if (!ref.completed) throw AviError("reference data not completed (run complete_reference)");
  if (!ref.reduction.supported) throw AviError("unsupported reference position: " + ref.reduction.diagnostic);
  const ReductionData& red = ref.reduction;
  const int l = ref.l(), n = ref.n(), d = red.d();
  BranchEnumeration out;

  const Eigen::MatrixXd lagr = theta_lagrangian(ref);
  Eigen::MatrixXd sys(n, l + n + d);
  sys.leftCols(l) = ref.gradH_p;
  sys.middleCols(l, n) = lagr;
  if (d > 0) sys.rightCols(d) = red.grad_b.transpose();

  if (d == 0) {
    // Unconstrained: the single branch solves the square linear system.
    CriticalBranch b;
    b.tag = CriticalBranch::Tag::Face;
    b.descriptor = "unconstrained";
    b.has_cone = true;
    b.cone = PolyhedralCone::from_halfspaces(Eigen::MatrixXd(0, l + n), sys);
    if (!b.cone.is_trivial()) out.branches.push_back(std::move(b));
    return out;
  }

  const auto rows = reduced_cone_rows(ref);
  if (rows.polyhedral) {
    const PolyhedralCone K = PolyhedralCone::from_halfspaces(rows.ineq, rows.eq);
    const auto faces = enumerate_faces(K);
    for (const auto& face : faces) {
      Eigen::MatrixXd eqs = sys;
      Eigen::MatrixXd ineqs(0, l + n + d);
      // grad_b u pinned to the face, free along it, inside K elsewhere.
      for (Eigen::Index i = 0; i < K.ineq().rows(); ++i) {
        Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, l + n + d);
        row.block(0, l, 1, n) = K.ineq().row(i) * red.grad_b;
        const bool active = std::find(face.active.begin(), face.active.end(), static_cast<int>(i)) !=
                            face.active.end();
        if (active)
          eqs = stack_rows(eqs, row);
        else
          ineqs = stack_rows(ineqs, row);
      }
      for (Eigen::Index i = 0; i < K.eq().rows(); ++i) {
        Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, l + n + d);
        row.block(0, l, 1, n) = K.eq().row(i) * red.grad_b;
        eqs = stack_rows(eqs, row);
      }
      // xi in polar(K) and orthogonal to the face span.
      const Eigen::MatrixXd span = stack_rows(face.rays, face.lineality);
      for (Eigen::Index i = 0; i < span.rows(); ++i) {
        Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, l + n + d);
        row.block(0, l + n, 1, d) = span.row(i);
        eqs = stack_rows(eqs, row);
      }
      for (Eigen::Index i = 0; i < K.lineality().rows(); ++i) {
        Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, l + n + d);
        row.block(0, l + n, 1, d) = K.lineality().row(i);
        eqs = stack_rows(eqs, row);
      }
      for (Eigen::Index i = 0; i < K.rays().rows(); ++i) {
        Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, l + n + d);
        row.block(0, l + n, 1, d) = K.rays().row(i);
        ineqs = stack_rows(ineqs, row);
      }
      CriticalBranch b;
      b.face_active = face.active;
      b.has_cone = true;
      b.cone = PolyhedralCone::from_halfspaces(ineqs, eqs);
      if (b.cone.is_trivial()) continue;
      // Tag single Lorentz dim-2 blocks with their conic case for reporting.
      bool single_lorentz = red.blocks.size() == 1 &&
                            red.blocks[0].kind == ThetaBlock::Kind::LorentzApex;
      if (single_lorentz) {
        switch (face.active.size()) {
          case 0: b.tag = CriticalBranch::Tag::LorentzInterior; b.descriptor = "lorentz interior"; break;
          case 1: b.tag = CriticalBranch::Tag::LorentzBoundaryRay;
                  b.descriptor = "lorentz boundary ray " + std::to_string(face.active[0]); break;
          default: b.tag = CriticalBranch::Tag::LorentzApex; b.descriptor = "lorentz apex"; break;
        }
      } else {
        b.tag = CriticalBranch::Tag::Face;
        b.descriptor = face_descriptor(face.active);
      }
      out.branches.push_back(std::move(b));
    }
    return out;
  }

  // Conic path: a single Lorentz block of dimension > 2 at the apex.
  if (red.blocks.size() != 1 || red.blocks[0].kind != ThetaBlock::Kind::LorentzApex)
    throw AviError("mixed Lorentz products with a block of dimension > 2 are not supported");
  out.exact = false;  // boundary-ray families are found numerically only
  {
    CriticalBranch b;
    b.tag = CriticalBranch::Tag::LorentzInterior;
    b.descriptor = "lorentz interior";
    Eigen::MatrixXd eqs = sys;
    for (int i = 0; i < d; ++i) {
      Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, l + n + d);
      row(0, l + n + i) = 1.0;
      eqs = stack_rows(eqs, row);
    }
    b.eq_rows = eqs;
    out.branches.push_back(std::move(b));
  }
  {
    CriticalBranch b;
    b.tag = CriticalBranch::Tag::LorentzApex;
    b.descriptor = "lorentz apex";
    Eigen::MatrixXd eqs = sys;
    for (int i = 0; i < d; ++i) {
      Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, l + n + d);
      row.block(0, l, 1, n) = red.grad_b.row(i);
      eqs = stack_rows(eqs, row);
    }
    b.eq_rows = eqs;
    out.branches.push_back(std::move(b));
  }
  {
    CriticalBranch b;
    b.tag = CriticalBranch::Tag::LorentzBoundaryRay;
    b.descriptor = "lorentz boundary (numerical)";
    b.exact = false;
    out.branches.push_back(std::move(b));
  }
  return out;
}

namespace {

// Projection of a branch cone onto the q coordinates (generators project).
PolyhedralCone project_to_q(const CriticalBranch& b, int l) {
  Eigen::MatrixXd rays = b.cone.rays().leftCols(l);
  Eigen::MatrixXd lin = b.cone.lineality().leftCols(l);
  return PolyhedralCone::from_generators(rays, lin, l);
}

std::optional<Eigen::VectorXd> strict_point(const Eigen::MatrixXd& N) {
  // A point q with N q > 0 strictly, if one exists.
  const auto ls = linalg::solve_least_squares(N, Eigen::VectorXd::Ones(N.rows()));
  if (N.rows() == 0) return Eigen::VectorXd::Ones(N.cols());
  if ((N * ls.x).minCoeff() > 1e-9) return ls.x;
  PolyhedralCone G = PolyhedralCone::from_halfspaces(-N, Eigen::MatrixXd(0, N.cols()));
  Eigen::VectorXd cand = Eigen::VectorXd::Zero(N.cols());
  for (Eigen::Index i = 0; i < G.rays().rows(); ++i) cand += G.rays().row(i).transpose();
  if (cand.norm() > 0 && (N * cand).minCoeff() > 1e-9) return cand;
  return std::nullopt;
}

}  // namespace

CoverageResult check_direction_coverage(const BranchEnumeration& en, const ReferenceData& ref,
                                        double tol) {
  CoverageResult out;
  const int l = ref.l();

  auto q_covered = [&](const Eigen::VectorXd& q) {
    for (const auto& b : en.branches)
      if (b.at(ref, q, tol).feasible) return true;
    return false;
  };

  if (l == 1) {
    Eigen::VectorXd plus(1), minus(1);
    plus << 1.0;
    minus << -1.0;
    const bool cp = q_covered(plus);
    const bool cm = q_covered(minus);
    if (cp && cm) {
      out.verdict = CoverageResult::Verdict::Covered;
      out.method = "sign check at q = +1 and q = -1";
      return out;
    }
    out.uncovered_q = cp ? minus : plus;
    out.verdict = en.exact ? CoverageResult::Verdict::Uncovered : CoverageResult::Verdict::Undecided;
    out.method = "sign check at q = +1 and q = -1";
    return out;
  }

  if (!en.exact) {
    // Sampling fallback only; cannot certify.
    std::mt19937_64 rng(9001);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int it = 0; it < 1000; ++it) {
      Eigen::VectorXd q(l);
      for (int i = 0; i < l; ++i) q(i) = gauss(rng);
      q.normalize();
      if (!q_covered(q)) {
        out.verdict = CoverageResult::Verdict::Undecided;
        out.uncovered_q = q;
        out.method = "sampling (enumeration not exhaustive)";
        return out;
      }
    }
    out.verdict = CoverageResult::Verdict::Undecided;
    out.method = "sampling (enumeration not exhaustive)";
    return out;
  }

  // Exact complement search: q is uncovered iff some choice of one violated
  // halfspace per branch projection has a common strict solution; strict
  // feasibility is decided through its alternative (a nonzero nonnegative
  // combination of the chosen normals summing to zero).
  std::vector<std::vector<Eigen::VectorXd>> complement_normals;
  for (const auto& b : en.branches) {
    const PolyhedralCone Q = project_to_q(b, l);
    std::vector<Eigen::VectorXd> normals;
    for (Eigen::Index i = 0; i < Q.ineq().rows(); ++i) normals.push_back(Q.ineq().row(i).transpose());
    for (Eigen::Index i = 0; i < Q.eq().rows(); ++i) {
      normals.push_back(Q.eq().row(i).transpose());
      normals.push_back(-Q.eq().row(i).transpose());
    }
    if (normals.empty()) {
      out.verdict = CoverageResult::Verdict::Covered;
      out.method = "one branch projects onto the whole parameter space";
      return out;
    }
    complement_normals.push_back(std::move(normals));
  }
  if (complement_normals.empty()) {
    out.verdict = CoverageResult::Verdict::Uncovered;
    out.uncovered_q = Eigen::VectorXd::Unit(l, 0);
    out.method = "no solution branches";
    return out;
  }
  std::size_t combos = 1;
  for (const auto& v : complement_normals) {
    combos *= v.size();
    if (combos > 200000) {
      out.verdict = CoverageResult::Verdict::Undecided;
      out.method = "complement search too large";
      return out;
    }
  }
  bool degenerate = false;
  std::vector<std::size_t> pick(complement_normals.size(), 0);
  for (std::size_t combo = 0; combo < combos; ++combo) {
    std::size_t c = combo;
    Eigen::MatrixXd N(static_cast<Eigen::Index>(complement_normals.size()), l);
    for (std::size_t i = 0; i < complement_normals.size(); ++i) {
      const auto& opts = complement_normals[i];
      N.row(static_cast<Eigen::Index>(i)) = opts[c % opts.size()].transpose();
      c /= opts.size();
    }
    // Alternative system: mu >= 0, N^T mu = 0, mu != 0.
    PolyhedralCone alt = PolyhedralCone::from_halfspaces(
        -Eigen::MatrixXd::Identity(N.rows(), N.rows()), N.transpose());
    if (!alt.is_trivial()) continue;  // the open intersection is empty
    if (auto q = strict_point(N)) {
      out.verdict = CoverageResult::Verdict::Uncovered;
      out.uncovered_q = q->normalized();
      out.method = "complement search";
      return out;
    }
    degenerate = true;
  }
  out.verdict = degenerate ? CoverageResult::Verdict::Undecided : CoverageResult::Verdict::Covered;
  out.method = "complement search";
  return out;
}

}  // namespace aubin
