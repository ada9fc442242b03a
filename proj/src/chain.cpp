// SPDX-License-Identifier: Apache-2.0
#include "aubin/chain.hpp"

#include <cmath>
#include <sstream>

#include "aubin/linalg.hpp"

namespace aubin {

namespace {

Eigen::MatrixXd selection_rows(const std::vector<int>& idx, int s) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(idx.size()), s);
  for (std::size_t i = 0; i < idx.size(); ++i) M(static_cast<Eigen::Index>(i), idx[i]) = 1.0;
  return M;
}

void append_rows(Eigen::MatrixXd& M, const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0) return;
  if (M.rows() == 0) {
    M = rows;
    return;
  }
  Eigen::MatrixXd out(M.rows() + rows.rows(), M.cols());
  out.topRows(M.rows()) = M;
  out.bottomRows(rows.rows()) = rows;
  M = out;
}

}  // namespace

ReductionData make_reduction(const ReferenceData& ref, double activity_tol) {
  const ConeSpec& cone = ref.spec.cone;
  const int s = ref.s();
  ReductionData red;
  red.curvature = Eigen::MatrixXd::Zero(ref.n(), ref.n());

  if (cone.type == ConeSpec::Type::OrthantNonpositive ||
      cone.type == ConeSpec::Type::PolyhedralHRep) {
    Eigen::MatrixXd A = cone.type == ConeSpec::Type::OrthantNonpositive
                            ? Eigen::MatrixXd(Eigen::MatrixXd::Identity(s, s))
                            : cone.rows;
    for (Eigen::Index i = 0; i < A.rows(); ++i) A.row(i).normalize();
    const Eigen::VectorXd az = A * ref.g0;
    Eigen::MatrixXd grad_h(0, s);
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      if (az(i) > activity_tol)
        throw ChainError("reference point infeasible: halfspace " + std::to_string(i) +
                         " of D is violated at g(x_ref)");
      if (az(i) >= -activity_tol) {
        red.active_rows.push_back(static_cast<int>(i));
        append_rows(grad_h, A.row(i));
        ThetaBlock blk;
        blk.kind = ThetaBlock::Kind::Scalar;
        blk.offset = static_cast<int>(grad_h.rows()) - 1;
        blk.dim = 1;
        red.blocks.push_back(blk);
      }
    }
    red.grad_h = grad_h;
  } else {
    // Lorentz product: per-block position of g(x_ref).
    Eigen::MatrixXd grad_h(0, s);
    int off = 0;
    int reduced = 0;
    for (std::size_t bi = 0; bi < cone.blocks.size(); ++bi) {
      const int bdim = cone.blocks[bi];
      const Eigen::VectorXd zb = ref.g0.segment(off, bdim);
      lorentz::LorentzSpec lspec{bdim, cone.axis};
      const double scale = std::max(1.0, zb.norm());
      if (bdim == 1) {
        // K = R_+ in dimension one; mapped to the nonpositive form by -z.
        if (zb(0) < -activity_tol)
          throw ChainError("reference point infeasible in Lorentz block " + std::to_string(bi));
        if (zb(0) <= activity_tol) {
          Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, s);
          row(0, off) = -1.0;
          append_rows(grad_h, row);
          ThetaBlock blk;
          blk.kind = ThetaBlock::Kind::Scalar;
          blk.offset = reduced++;
          red.blocks.push_back(blk);
          red.active_rows.push_back(off);
        }
      } else if (zb.norm() <= activity_tol) {
        // Apex: h is the identity on the block.
        Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(bdim, s);
        for (int i = 0; i < bdim; ++i) rows(i, off + i) = 1.0;
        append_rows(grad_h, rows);
        ThetaBlock blk;
        blk.kind = ThetaBlock::Kind::LorentzApex;
        blk.offset = reduced;
        blk.dim = bdim;
        blk.lspec = lspec;
        reduced += bdim;
        red.blocks.push_back(blk);
        red.active_rows.push_back(off);
      } else if (lorentz::eig_low(lspec, zb) < -activity_tol * scale) {
        throw ChainError("reference point infeasible in Lorentz block " + std::to_string(bi));
      } else if (lorentz::eig_low(lspec, zb) <= activity_tol * scale) {
        // Boundary ray away from the apex: h(z) = ||zbar|| - z0 reduces the
        // block to one nonpositive coordinate; h is genuinely nonlinear.
        const Eigen::VectorXd zbar = lorentz::bar_part(lspec, zb);
        const double r = zbar.norm();
        const Eigen::VectorXd wbar = zbar / r;
        Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, s);
        int k = 0;
        for (int i = 0; i < bdim; ++i) {
          const int gi = off + i;
          if (i == lspec.axis_index())
            row(0, gi) = -1.0;
          else
            row(0, gi) = wbar(k++);
        }
        append_rows(grad_h, row);
        // Hessian of h on the bar block: (I - w w^T) / r.
        Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(s, s);
        Eigen::MatrixXd bar_hess =
            (Eigen::MatrixXd::Identity(bdim - 1, bdim - 1) - wbar * wbar.transpose()) / r;
        std::vector<int> bar_idx;
        for (int i = 0; i < bdim; ++i)
          if (i != lspec.axis_index()) bar_idx.push_back(off + i);
        for (std::size_t a = 0; a < bar_idx.size(); ++a)
          for (std::size_t b = 0; b < bar_idx.size(); ++b)
            hess(bar_idx[a], bar_idx[b]) = bar_hess(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        red.hess_h.resize(static_cast<std::size_t>(grad_h.rows()) - 1);
        red.hess_h.push_back(hess);
        ThetaBlock blk;
        blk.kind = ThetaBlock::Kind::Scalar;
        blk.offset = reduced++;
        red.blocks.push_back(blk);
        red.active_rows.push_back(off);
      }
      // Interior blocks contribute no reduced constraint.
      off += bdim;
    }
    red.grad_h = grad_h;
  }
  if (red.hess_h.size() < static_cast<std::size_t>(red.grad_h.rows()))
    red.hess_h.resize(static_cast<std::size_t>(red.grad_h.rows()));
  red.grad_b = red.grad_h.rows() > 0 ? Eigen::MatrixXd(red.grad_h * ref.gradg)
                                     : Eigen::MatrixXd(0, ref.n());
  return red;
}

Multiplier recover_multiplier(const ReferenceData& ref, double activity_tol) {
  ReductionData red = make_reduction(ref, activity_tol);
  Multiplier m;
  const int d = red.d();
  const double scale = std::max(1.0, ref.xstar.norm());
  if (d == 0) {
    if (ref.xstar.norm() > 1e-9 * scale)
      throw ChainError("no multiplier: -H(p_ref,x_ref) must vanish when no constraint is active");
    m.lambda = Eigen::VectorXd::Zero(ref.s());
    m.mu = Eigen::VectorXd(0);
    return m;
  }
  const auto ls = linalg::solve_least_squares(red.grad_b.transpose(), ref.xstar);
  if (ls.residual > 1e-9 * scale)
    throw ChainError("no multiplier: -H(p_ref,x_ref) is not in the image of the normal cone map "
                     "(residual " + std::to_string(ls.residual) + ")");
  if (ls.kernel.cols() > 0)
    throw ChainError("multiplier is not unique: nondegeneracy (rank of the reduced Jacobian) fails");
  m.mu = ls.x;
  // Theta-level membership: scalar components nonnegative, apex blocks in the
  // polar cone.
  for (const auto& blk : red.blocks) {
    if (blk.kind == ThetaBlock::Kind::Scalar) {
      if (m.mu(blk.offset) < -1e-9)
        throw ChainError("no multiplier: the unique candidate leaves the normal cone "
                         "(negative component " + std::to_string(blk.offset) + ")");
    } else {
      const Eigen::VectorXd mb = m.mu.segment(blk.offset, blk.dim);
      if (!lorentz::in_polar(blk.lspec, mb, 1e-9))
        throw ChainError("no multiplier: the unique candidate leaves the polar cone on a Lorentz block");
    }
  }
  m.lambda = red.grad_h.transpose() * m.mu;
  return m;
}

NondegeneracyResult check_nondegeneracy(const ReferenceData& ref, double activity_tol) {
  NondegeneracyResult out;
  out.reduction = make_reduction(ref, activity_tol);
  const int d = out.reduction.d();
  const int rank_h = linalg::rank(out.reduction.grad_h);
  const int rank_b = linalg::rank(out.reduction.grad_b);
  std::ostringstream cert;
  if (rank_h < d)
    cert << "reduction map not surjective: rank(grad_h) = " << rank_h << " < " << d << "; ";
  if (rank_b < d)
    cert << "nondegeneracy fails: rank(grad_h * grad_g) = " << rank_b << " < " << d;
  out.certificate = cert.str();
  out.ok = out.certificate.empty();
  return out;
}

NondegeneracyResult complete_reference(ReferenceData& ref, double activity_tol) {
  const Multiplier m = recover_multiplier(ref, activity_tol);
  NondegeneracyResult nd = check_nondegeneracy(ref, activity_tol);
  ReductionData& red = nd.reduction;
  red.mu = m.mu;

  // Classification that needs the multiplier.
  for (auto& blk : red.blocks) {
    if (blk.kind == ThetaBlock::Kind::Scalar) {
      blk.pc = red.mu(blk.offset) > 1e-9 ? orthant::PointClass::ActivePositive
                                         : orthant::PointClass::ActiveZero;
    } else {
      const Eigen::VectorXd mb = red.mu.segment(blk.offset, blk.dim);
      if (mb.norm() <= 1e-9) {
        blk.kind = ThetaBlock::Kind::LorentzApex;
      } else if (lorentz::eig_high(blk.lspec, mb) < -1e-9 * mb.norm()) {
        blk.kind = ThetaBlock::Kind::LorentzPolarInterior;
      } else {
        red.supported = false;
        red.diagnostic =
            "Lorentz block at the apex with a multiplier on the polar boundary is unsupported";
      }
    }
  }
  // Curvature of nonlinear reductions, now that mu is known.
  Eigen::MatrixXd hess_mu_h = Eigen::MatrixXd::Zero(ref.s(), ref.s());
  for (std::size_t k = 0; k < red.hess_h.size(); ++k)
    if (red.hess_h[k].size() > 0) hess_mu_h += red.mu(static_cast<Eigen::Index>(k)) * red.hess_h[k];
  red.curvature = ref.gradg.transpose() * hess_mu_h * ref.gradg;

  ref.lambda = m.lambda;
  ref.lagr_x = ref.gradH_x + ref.hessian_contraction(ref.lambda);
  ref.reduction = red;
  ref.completed = true;
  return nd;
}

namespace {

struct BlockCheck {
  bool ok = true;
  std::string reason;
};

BlockCheck theta_tangent_check(const ReductionData& red, const Eigen::VectorXd& v,
                               const Eigen::VectorXd& xi, double tol, double scale) {
  BlockCheck out;
  for (const auto& blk : red.blocks) {
    if (blk.kind == ThetaBlock::Kind::Scalar) {
      const double vi = v(blk.offset);
      const double xii = xi(blk.offset);
      if (blk.pc == orthant::PointClass::ActivePositive) {
        if (std::abs(vi) > tol * scale) {
          out.ok = false;
          out.reason = "component with positive multiplier requires a vanishing primal direction";
          return out;
        }
      } else {
        if (vi > tol * scale || xii < -tol * scale || std::abs(vi * xii) > tol * scale * scale) {
          out.ok = false;
          out.reason = "scalar complementarity branch violated";
          return out;
        }
      }
    } else if (blk.kind == ThetaBlock::Kind::LorentzApex) {
      const Eigen::VectorXd vb = v.segment(blk.offset, blk.dim);
      const Eigen::VectorXd xib = xi.segment(blk.offset, blk.dim);
      if (!lorentz::in_cone(blk.lspec, vb, tol) || !lorentz::in_polar(blk.lspec, xib, tol) ||
          std::abs(vb.dot(xib)) > tol * scale * scale) {
        out.ok = false;
        out.reason = "Lorentz apex complementarity violated";
        return out;
      }
    } else {  // LorentzPolarInterior
      if (v.segment(blk.offset, blk.dim).norm() > tol * scale) {
        out.ok = false;
        out.reason = "Lorentz block with interior polar multiplier requires a vanishing primal direction";
        return out;
      }
    }
  }
  return out;
}

void require_completed(const ReferenceData& ref) {
  if (!ref.completed) throw ChainError("reference data not completed (run complete_reference)");
  if (!ref.reduction.supported) throw ChainError("unsupported reference position: " + ref.reduction.diagnostic);
}

}  // namespace

TangentResult gamma_graph_tangent(const ReferenceData& ref, const Eigen::VectorXd& u,
                                  const Eigen::VectorXd& ustar, double tol) {
  require_completed(ref);
  const ReductionData& red = ref.reduction;
  TangentResult out;
  const double scale = std::max({1.0, u.norm(), ustar.norm()});
  const Eigen::VectorXd rhs = ustar - ref.theta_hessian() * u;
  if (red.d() == 0) {
    out.tangent = rhs.norm() <= tol * scale;
    if (!out.tangent) out.reason = "no active constraint: u* must equal the Hessian term";
    out.xi_theta = Eigen::VectorXd(0);
    out.xi = Eigen::VectorXd::Zero(ref.s());
    out.residual = rhs.norm();
    return out;
  }
  const auto ls = linalg::solve_least_squares(red.grad_b.transpose(), rhs);
  out.residual = ls.residual;
  out.rank_defect = static_cast<int>(ls.kernel.cols());
  out.unique = out.rank_defect == 0;
  if (ls.residual > tol * scale) {
    out.tangent = false;
    out.reason = "linear system for xi is inconsistent";
    return out;
  }
  const Eigen::VectorXd v = red.grad_b * u;
  const auto chk = theta_tangent_check(red, v, ls.x, tol, scale);
  if (!chk.ok) {
    out.tangent = false;
    out.reason = chk.reason;
    return out;
  }
  out.tangent = true;
  out.xi_theta = ls.x;
  // Back to the cone level (the curvature of h enters the unique xi).
  Eigen::MatrixXd hess_mu_h = Eigen::MatrixXd::Zero(ref.s(), ref.s());
  for (std::size_t k = 0; k < red.hess_h.size(); ++k)
    if (red.hess_h[k].size() > 0) hess_mu_h += red.mu(static_cast<Eigen::Index>(k)) * red.hess_h[k];
  out.xi = hess_mu_h * (ref.gradg * u) + red.grad_h.transpose() * ls.x;
  return out;
}

GammaCoderivValue gamma_dirlim_coderiv(const ReferenceData& ref, const Eigen::VectorXd& u,
                                       const Eigen::VectorXd& ustar, const Eigen::VectorXd& w,
                                       double tol) {
  require_completed(ref);
  const ReductionData& red = ref.reduction;
  GammaCoderivValue val;
  val.offset_ = ref.theta_hessian() * w;
  val.grad_b_ = red.grad_b;
  val.input_ = red.d() > 0 ? Eigen::VectorXd(red.grad_b * w) : Eigen::VectorXd(0);
  val.blocks_ = red.blocks;
  val.scalar_sets_.assign(static_cast<std::size_t>(red.d()), std::nullopt);

  const auto tang = gamma_graph_tangent(ref, u, ustar, tol);
  if (!tang.tangent) {
    val.tangent_ = false;
    return val;
  }
  const Eigen::VectorXd v = red.d() > 0 ? Eigen::VectorXd(red.grad_b * u) : Eigen::VectorXd(0);
  for (const auto& blk : red.blocks) {
    if (blk.kind == ThetaBlock::Kind::Scalar) {
      const auto c = orthant::scalar_dir_case(blk.pc, v(blk.offset), tang.xi_theta(blk.offset), tol);
      val.scalar_sets_[static_cast<std::size_t>(blk.offset)] =
          orthant::dir_coderiv_component(c, val.input_(blk.offset), tol);
    } else if (blk.kind == ThetaBlock::Kind::LorentzPolarInterior) {
      const bool zero_input = val.input_.segment(blk.offset, blk.dim).norm() <= tol;
      for (int i = 0; i < blk.dim; ++i)
        val.scalar_sets_[static_cast<std::size_t>(blk.offset + i)] =
            zero_input ? orthant::ComponentSet::All : orthant::ComponentSet::Empty;
    } else {
      const Eigen::VectorXd vb = v.segment(blk.offset, blk.dim);
      const Eigen::VectorXd xib = tang.xi_theta.segment(blk.offset, blk.dim);
      val.directions_.emplace_back(vb, xib);
      if (vb.norm() + xib.norm() > tol) {
        const auto [h, k] = lorentz::convert_direction(vb, xib);
        const auto tag = lorentz::classify_graph_direction(blk.lspec, h, k, tol);
        val.families_.push_back(lorentz::coderiv_family_at_apex(blk.lspec, tag));
      } else {
        // Zero block direction: the full limiting coderivative, handled as
        // the union of all five families in contains().
        lorentz::CoderivFamily f;
        f.spec = blk.lspec;
        f.kind = lorentz::CoderivFamily::Kind::Identity;
        val.families_.push_back(f);
        val.directions_.back() = {Eigen::VectorXd::Zero(blk.dim), Eigen::VectorXd::Zero(blk.dim)};
      }
    }
  }
  return val;
}

GammaCoderivValue gamma_regular_coderiv(const ReferenceData& ref, const Eigen::VectorXd& w,
                                        double tol) {
  require_completed(ref);
  const ReductionData& red = ref.reduction;
  GammaCoderivValue val;
  val.regular_ = true;
  val.offset_ = ref.theta_hessian() * w;
  val.grad_b_ = red.grad_b;
  val.input_ = red.d() > 0 ? Eigen::VectorXd(red.grad_b * w) : Eigen::VectorXd(0);
  val.blocks_ = red.blocks;
  val.scalar_sets_.assign(static_cast<std::size_t>(red.d()), std::nullopt);
  for (const auto& blk : red.blocks) {
    if (blk.kind == ThetaBlock::Kind::Scalar) {
      val.scalar_sets_[static_cast<std::size_t>(blk.offset)] =
          orthant::regular_coderiv_component(blk.pc, val.input_(blk.offset), tol);
    } else if (blk.kind == ThetaBlock::Kind::LorentzPolarInterior) {
      const bool zero_input = val.input_.segment(blk.offset, blk.dim).norm() <= tol;
      for (int i = 0; i < blk.dim; ++i)
        val.scalar_sets_[static_cast<std::size_t>(blk.offset + i)] =
            zero_input ? orthant::ComponentSet::All : orthant::ComponentSet::Empty;
    }
    // LorentzApex blocks are handled in contains() via the regular rule.
  }
  return val;
}

GammaCoderivValue::Verdict GammaCoderivValue::contains(const Eigen::VectorXd& wstar,
                                                       double tol) const {
  if (!tangent_) return Verdict::Out;
  const double scale = std::max(1.0, wstar.norm() + offset_.norm());
  const Eigen::VectorXd rhs = wstar - offset_;
  if (grad_b_.rows() == 0) return rhs.norm() <= tol * scale ? Verdict::In : Verdict::Out;
  const auto ls = linalg::solve_least_squares(grad_b_.transpose(), rhs);
  if (ls.residual > tol * scale) return Verdict::Out;
  const Eigen::VectorXd eta = ls.x;

  bool undecided = false;
  std::size_t apex_i = 0;
  for (const auto& blk : blocks_) {
    if (blk.kind == ThetaBlock::Kind::Scalar || blk.kind == ThetaBlock::Kind::LorentzPolarInterior) {
      for (int i = 0; i < blk.dim; ++i) {
        const auto set = scalar_sets_[static_cast<std::size_t>(blk.offset + i)];
        if (!set) continue;
        switch (*set) {
          case orthant::ComponentSet::Zero:
            if (std::abs(eta(blk.offset + i)) > tol * scale) return Verdict::Out;
            break;
          case orthant::ComponentSet::All:
            break;
          case orthant::ComponentSet::Nonneg:
            if (eta(blk.offset + i) < -tol * scale) return Verdict::Out;
            break;
          case orthant::ComponentSet::Empty:
            return Verdict::Out;
        }
      }
      continue;
    }
    // Lorentz apex block.
    const Eigen::VectorXd yb = input_.segment(blk.offset, blk.dim);
    const Eigen::VectorXd etab = eta.segment(blk.offset, blk.dim);
    if (regular_) {
      const auto r = lorentz::regular_ncone_coderiv_contains(
          blk.lspec, Eigen::VectorXd::Zero(blk.dim), Eigen::VectorXd::Zero(blk.dim), yb, etab, tol);
      if (!r.has_value()) return Verdict::Undecided;
      if (!*r) return Verdict::Out;
      ++apex_i;
      continue;
    }
    const auto& dir = directions_[apex_i];
    const auto& fam = families_[apex_i];
    ++apex_i;
    // Projection-side membership: -yb in family(-yb - etab).
    const Eigen::VectorXd pu = -yb - etab;
    const Eigen::VectorXd py = -yb;
    const bool zero_dir = dir.first.norm() + dir.second.norm() <= tol;
    std::vector<lorentz::CoderivFamily::Kind> kinds;
    if (zero_dir) {
      kinds = {lorentz::CoderivFamily::Kind::Identity, lorentz::CoderivFamily::Kind::Zero,
               lorentz::CoderivFamily::Kind::CFamily, lorentz::CoderivFamily::Kind::CFamilyPlusA,
               lorentz::CoderivFamily::Kind::CFamilyPlusB};
    } else {
      kinds = {fam.kind};
    }
    bool any_in = false;
    bool any_undecided = false;
    for (const auto kind : kinds) {
      lorentz::CoderivFamily f;
      f.spec = blk.lspec;
      f.kind = kind;
      const auto r = lorentz::family_membership(f, pu, py);
      if (r.verdict == lorentz::MembershipResult::Verdict::In) {
        any_in = true;
        break;
      }
      if (r.verdict == lorentz::MembershipResult::Verdict::Undecided) any_undecided = true;
    }
    if (!any_in) {
      if (any_undecided)
        undecided = true;
      else
        return Verdict::Out;
    }
  }
  return undecided ? Verdict::Undecided : Verdict::In;
}

std::string GammaCoderivValue::describe() const {
  if (!tangent_) return "empty (direction not tangent)";
  std::ostringstream os;
  os << "{ offset + grad_b^T eta : eta in ";
  for (const auto& blk : blocks_) {
    if (blk.kind == ThetaBlock::Kind::Scalar || blk.kind == ThetaBlock::Kind::LorentzPolarInterior) {
      for (int i = 0; i < blk.dim; ++i) {
        const auto set = scalar_sets_[static_cast<std::size_t>(blk.offset + i)];
        if (!set) continue;
        switch (*set) {
          case orthant::ComponentSet::Zero: os << "{0}"; break;
          case orthant::ComponentSet::All: os << "R"; break;
          case orthant::ComponentSet::Nonneg: os << "R+"; break;
          case orthant::ComponentSet::Empty: os << "{}"; break;
        }
        os << " ";
      }
    } else {
      os << "[lorentz-family dim " << blk.dim << "] ";
    }
  }
  os << "}";
  return os.str();
}

}  // namespace aubin
