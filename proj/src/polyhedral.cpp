// SPDX-License-Identifier: Apache-2.0
#include "aubin/polyhedral.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <map>

#include "aubin/linalg.hpp"

namespace aubin {

namespace {

constexpr int kMaxRowsForEnumeration = 18;

Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& A, double tol = 1e-12) {
  std::vector<Eigen::VectorXd> kept;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const double nrm = A.row(i).norm();
    if (nrm <= tol) continue;
    Eigen::VectorXd r = A.row(i).transpose() / nrm;
    bool dup = false;
    for (const auto& k : kept)
      if ((k - r).norm() <= 1e-12) {
        dup = true;
        break;
      }
    if (!dup) kept.push_back(std::move(r));
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(kept.size()), A.cols());
  for (std::size_t i = 0; i < kept.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = kept[i].transpose();
  return out;
}

Eigen::MatrixXd stack_rows(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  Eigen::MatrixXd out(A.rows() + B.rows(), std::max(A.cols(), B.cols()));
  if (A.rows() > 0) out.topRows(A.rows()) = A;
  if (B.rows() > 0) out.bottomRows(B.rows()) = B;
  return out;
}

// Extreme rays of {z | ineq z <= 0, eq z = 0} modulo its lineality space, by
// enumerating candidate active sets of corank 1. Returns (rays, lineality),
// rays as rows of unit norm.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> dd_generators(const Eigen::MatrixXd& ineq,
                                                          const Eigen::MatrixXd& eq, int dim) {
  const Eigen::MatrixXd M = stack_rows(ineq, eq);
  Eigen::MatrixXd lin_cols = M.rows() == 0 ? Eigen::MatrixXd::Identity(dim, dim)
                                           : linalg::nullspace(M);
  // Pointed part lives in ker(eq) orthogonal to the lineality space.
  Eigen::MatrixXd constraints = stack_rows(eq, lin_cols.transpose());
  const Eigen::MatrixXd B = constraints.rows() == 0 ? Eigen::MatrixXd::Identity(dim, dim)
                                                    : linalg::nullspace(constraints);
  const int k = static_cast<int>(B.cols());
  std::vector<Eigen::VectorXd> rays;
  if (k > 0) {
    const Eigen::MatrixXd At = ineq * B;  // m x k
    const int m = static_cast<int>(At.rows());
    if (m > kMaxRowsForEnumeration)
      throw ConeError("halfspace description too large for exhaustive ray enumeration");
    const double feas_tol = 1e-9;

    auto try_candidate = [&](const Eigen::VectorXd& y) {
      for (const double sgn : {1.0, -1.0}) {
        const Eigen::VectorXd cand = sgn * y;
        if (m > 0 && (At * cand).maxCoeff() > feas_tol) continue;
        // Extremality: the active rows at cand must pin the direction.
        std::vector<int> act;
        for (int i = 0; i < m; ++i)
          if (std::abs(At.row(i).dot(cand)) <= feas_tol) act.push_back(i);
        Eigen::MatrixXd Act(static_cast<Eigen::Index>(act.size()), k);
        for (std::size_t i = 0; i < act.size(); ++i) Act.row(static_cast<Eigen::Index>(i)) = At.row(act[i]);
        if (k > 1 && linalg::rank(Act) != k - 1) continue;
        const Eigen::VectorXd r = B * cand;
        bool dup = false;
        for (const auto& ex : rays)
          if ((ex - r).norm() <= 1e-9) {
            dup = true;
            break;
          }
        if (!dup) rays.push_back(r);
      }
    };

    if (k == 1) {
      try_candidate(Eigen::VectorXd::Ones(1));
    } else {
      // All row subsets of size k-1 whose kernel is one-dimensional.
      std::vector<int> idx(static_cast<std::size_t>(k - 1));
      std::function<void(int, int)> rec = [&](int start, int depth) {
        if (depth == k - 1) {
          Eigen::MatrixXd S(k - 1, k);
          for (int i = 0; i < k - 1; ++i) S.row(i) = At.row(idx[static_cast<std::size_t>(i)]);
          const Eigen::MatrixXd ker = linalg::nullspace(S);
          if (ker.cols() == 1) try_candidate(ker.col(0).normalized());
          return;
        }
        for (int i = start; i < m; ++i) {
          idx[static_cast<std::size_t>(depth)] = i;
          rec(i + 1, depth + 1);
        }
      };
      rec(0, 0);
    }
  }
  Eigen::MatrixXd ray_rows(static_cast<Eigen::Index>(rays.size()), dim);
  for (std::size_t i = 0; i < rays.size(); ++i) ray_rows.row(static_cast<Eigen::Index>(i)) = rays[i].normalized().transpose();
  // Stable order for deterministic output.
  std::vector<int> order(rays.size());
  for (std::size_t i = 0; i < rays.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    for (Eigen::Index c = 0; c < ray_rows.cols(); ++c) {
      if (std::abs(ray_rows(a, c) - ray_rows(b, c)) > 1e-12) return ray_rows(a, c) < ray_rows(b, c);
    }
    return false;
  });
  Eigen::MatrixXd sorted(ray_rows.rows(), ray_rows.cols());
  for (std::size_t i = 0; i < order.size(); ++i) sorted.row(static_cast<Eigen::Index>(i)) = ray_rows.row(order[i]);
  return {sorted, lin_cols.transpose()};
}

}  // namespace

PolyhedralCone PolyhedralCone::from_halfspaces(const Eigen::MatrixXd& ineq, const Eigen::MatrixXd& eq) {
  PolyhedralCone c;
  c.dim_ = static_cast<int>(std::max(ineq.cols(), eq.cols()));
  if (c.dim_ == 0) throw ConeError("cannot build a cone in dimension 0");
  c.ineq_ = normalize_rows(ineq.rows() ? ineq : Eigen::MatrixXd(0, c.dim_));
  c.eq_ = normalize_rows(eq.rows() ? eq : Eigen::MatrixXd(0, c.dim_));
  auto [rays, lin] = dd_generators(c.ineq_, c.eq_, c.dim_);
  c.rays_ = std::move(rays);
  c.lineality_ = std::move(lin);
  return c;
}

PolyhedralCone PolyhedralCone::from_generators(const Eigen::MatrixXd& rays,
                                               const Eigen::MatrixXd& lineality, int dim) {
  // H-rep of cone(rays)+span(lin) is the generator description of its polar,
  // which itself has the direct H-rep {z | rays z <= 0, lin z = 0}.
  const Eigen::MatrixXd r = rays.rows() ? rays : Eigen::MatrixXd(0, dim);
  const Eigen::MatrixXd l = lineality.rows() ? lineality : Eigen::MatrixXd(0, dim);
  auto [polar_rays, polar_lin] = dd_generators(normalize_rows(r), normalize_rows(l), dim);
  PolyhedralCone c;
  c.dim_ = dim;
  c.ineq_ = polar_rays;
  c.eq_ = polar_lin;
  auto [rr, ll] = dd_generators(c.ineq_, c.eq_, dim);
  c.rays_ = std::move(rr);
  c.lineality_ = std::move(ll);
  return c;
}

bool PolyhedralCone::contains(const Eigen::VectorXd& z, double tol) const {
  const double scale = std::max(1.0, z.norm());
  if (ineq_.rows() > 0 && (ineq_ * z).maxCoeff() > tol * scale) return false;
  if (eq_.rows() > 0 && (eq_ * z).cwiseAbs().maxCoeff() > tol * scale) return false;
  return true;
}

PolyhedralCone PolyhedralCone::polar() const {
  return from_halfspaces(rays_, lineality_.rows() ? lineality_ : Eigen::MatrixXd(0, dim_));
}

std::vector<int> PolyhedralCone::active_set(const Eigen::VectorXd& z, double tol) const {
  std::vector<int> act;
  for (Eigen::Index i = 0; i < ineq_.rows(); ++i)
    if (std::abs(ineq_.row(i).dot(z)) <= tol) act.push_back(static_cast<int>(i));
  return act;
}

bool PolyhedralCone::is_trivial(double tol) const {
  return rays_.rows() == 0 && (lineality_.rows() == 0 || lineality_.norm() <= tol);
}

Eigen::MatrixXd PolyhedralCone::span_basis() const {
  Eigen::MatrixXd gen = stack_rows(rays_, lineality_);
  if (gen.rows() == 0) return Eigen::MatrixXd(0, dim_);
  // Orthonormalize via the row space of gen.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(gen, Eigen::ComputeFullV);
  const int r = linalg::rank(gen);
  return svd.matrixV().leftCols(r).transpose();
}

std::vector<Face> enumerate_faces(const PolyhedralCone& C) {
  const int m = static_cast<int>(C.ineq().rows());
  if (m > kMaxRowsForEnumeration) throw ConeError("too many halfspaces for face enumeration");
  std::map<std::vector<int>, Face> faces;
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    Eigen::MatrixXd extra(static_cast<Eigen::Index>(std::popcount(mask)), C.dim());
    Eigen::Index r = 0;
    for (int i = 0; i < m; ++i)
      if (mask & (1u << i)) extra.row(r++) = C.ineq().row(i);
    PolyhedralCone fc = PolyhedralCone::from_halfspaces(C.ineq(), stack_rows(C.eq(), extra));
    // Closure: rows vanishing identically on the face.
    std::vector<int> closure;
    for (int i = 0; i < m; ++i) {
      bool vanish = true;
      for (Eigen::Index k = 0; k < fc.rays().rows() && vanish; ++k)
        if (std::abs(C.ineq().row(i).dot(fc.rays().row(k))) > 1e-9) vanish = false;
      for (Eigen::Index k = 0; k < fc.lineality().rows() && vanish; ++k)
        if (std::abs(C.ineq().row(i).dot(fc.lineality().row(k))) > 1e-9) vanish = false;
      if (vanish) closure.push_back(i);
    }
    if (faces.count(closure)) continue;
    Face f;
    f.active = closure;
    f.rays = fc.rays();
    f.lineality = fc.lineality();
    f.witness = Eigen::VectorXd::Zero(C.dim());
    for (Eigen::Index k = 0; k < fc.rays().rows(); ++k) f.witness += fc.rays().row(k).transpose();
    f.span_dim = linalg::rank(stack_rows(fc.rays(), fc.lineality()));
    faces.emplace(std::move(closure), std::move(f));
  }
  std::vector<Face> out;
  for (auto& [key, f] : faces) out.push_back(std::move(f));
  std::sort(out.begin(), out.end(), [](const Face& a, const Face& b) {
    if (a.span_dim != b.span_dim) return a.span_dim < b.span_dim;
    return a.active < b.active;
  });
  return out;
}

bool in_relative_interior(const PolyhedralCone& C, const Face& f, const Eigen::VectorXd& z,
                          double tol) {
  if (!C.contains(z, tol)) return false;
  const double scale = std::max(1.0, z.norm());
  for (Eigen::Index i = 0; i < C.ineq().rows(); ++i) {
    const bool in_closure =
        std::find(f.active.begin(), f.active.end(), static_cast<int>(i)) != f.active.end();
    const double v = C.ineq().row(i).dot(z);
    if (in_closure && std::abs(v) > tol * scale) return false;
    if (!in_closure && v > -tol * scale) return false;
  }
  return true;
}

PolyhedralCone critical_cone(const ConeSpec& D, const Eigen::VectorXd& z,
                             const Eigen::VectorXd& lambda, double activity_tol) {
  const auto rows_opt = D.polyhedral_rows();
  if (!rows_opt)
    throw ConeError("critical_cone requires a polyhedral cone (Lorentz blocks of dim > 2 are not)");
  const Eigen::MatrixXd A = normalize_rows(*rows_opt);
  if (z.size() != D.dim || lambda.size() != D.dim)
    throw ConeError("critical_cone: dimension mismatch");

  // z must lie in D.
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    if (A.row(i).dot(z) > activity_tol)
      throw ConeError("critical_cone: z violates halfspace " + std::to_string(i) + " of D");
  std::vector<int> active;
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    if (std::abs(A.row(i).dot(z)) <= activity_tol) active.push_back(static_cast<int>(i));

  // lambda must be a regular normal at z: a nonnegative combination of the
  // active rows.
  Eigen::MatrixXd act_rows(static_cast<Eigen::Index>(active.size()), D.dim);
  for (std::size_t i = 0; i < active.size(); ++i) act_rows.row(static_cast<Eigen::Index>(i)) = A.row(active[i]);
  if (lambda.norm() > activity_tol) {
    PolyhedralCone normal_cone = PolyhedralCone::from_generators(
        act_rows, Eigen::MatrixXd(0, D.dim), D.dim);
    if (!normal_cone.contains(lambda, 1e-8))
      throw ConeError("critical_cone: lambda is not in the regular normal cone N_D(z)");
  }

  Eigen::MatrixXd eq(0, D.dim);
  if (lambda.norm() > activity_tol) {
    eq = Eigen::MatrixXd(1, D.dim);
    eq.row(0) = lambda.transpose().normalized();
  }
  return PolyhedralCone::from_halfspaces(act_rows, eq);
}

}  // namespace aubin
